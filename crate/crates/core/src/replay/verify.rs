//! Determinism check: replay several times and compare game events.

use serde::Serialize;

use super::driver::{replay, ReplayOptions};
use crate::game::SessionConfig;
use crate::touch::TouchSample;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    /// Zero-based run that first differed from run 0.
    pub run: usize,
    pub instant: u64,
    /// Game-event line of run 0, `null` past its end.
    pub expected: Option<String>,
    pub actual: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub runs: usize,
    pub passed: bool,
    pub game_event_digest: String,
    pub instants: u64,
    pub divergence: Option<Divergence>,
}

/// Replays `runs` times, alternating the observer on (even runs) and off.
/// `config_for_run` may alter the config per run.
pub fn verify_determinism<F>(
    config: &SessionConfig,
    samples: &[TouchSample<f64>],
    runs: usize,
    mut config_for_run: F,
) -> VerifyReport
where
    F: FnMut(usize, &SessionConfig) -> SessionConfig,
{
    let mut first: Option<(String, u64, Vec<String>)> = None;
    for run in 0..runs {
        let cfg = config_for_run(run, config);
        let outcome = replay(
            &cfg,
            samples,
            ReplayOptions {
                observe: run % 2 == 0,
                keep_game_lines: true,
                instant_writer: None,
            },
        );
        let Some((digest, instants, lines)) = &first else {
            first = Some((outcome.game_event_digest, outcome.instants, outcome.game_lines));
            continue;
        };
        if outcome.game_event_digest != *digest {
            let n = lines.len().max(outcome.game_lines.len());
            let at = (0..n)
                .find(|&i| lines.get(i) != outcome.game_lines.get(i))
                .unwrap_or(n);
            return VerifyReport {
                runs,
                passed: false,
                game_event_digest: digest.clone(),
                instants: *instants,
                divergence: Some(Divergence {
                    run,
                    instant: at as u64,
                    expected: lines.get(at).cloned(),
                    actual: outcome.game_lines.get(at).cloned(),
                }),
            };
        }
    }
    let (game_event_digest, instants, _) = first.unwrap_or_default();
    VerifyReport {
        runs,
        passed: true,
        game_event_digest,
        instants,
        divergence: None,
    }
}
