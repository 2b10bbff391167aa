//! Session statistics: the trial list and aggregates recomputable from it.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::game::{Finger, TrialOutcome, TrialRecord};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FingerAggregate {
    pub trials: u64,
    pub hits: u64,
    pub mean_reaction_ms: Option<f64>,
    /// Lower median for even counts.
    pub median_reaction_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GameAggregate {
    pub trials: u64,
    pub hits: u64,
    pub timeouts: u64,
    /// Exact hits/trials; absent when no trial completed.
    pub hit_rate: Option<Ratio<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PauseAggregate {
    pub count: u64,
    pub total_paused_ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub per_finger: BTreeMap<Finger, FingerAggregate>,
    pub per_game: BTreeMap<String, GameAggregate>,
    pub pauses: PauseAggregate,
    pub unexpected_contacts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub session_id: String,
    pub config_digest: String,
    pub trials: Vec<TrialRecord>,
    pub aggregates: Aggregates,
}

impl SessionStats {
    /// Sorts trials by prompt time and computes the aggregates.
    pub fn new(session_id: String, config_digest: String, mut trials: Vec<TrialRecord>) -> Self {
        trials.sort_by(|a, b| a.prompt_t_ms.total_cmp(&b.prompt_t_ms));
        let aggregates = aggregate(&trials);
        SessionStats {
            session_id,
            config_digest,
            trials,
            aggregates,
        }
    }

    /// True when the stored aggregates match a recomputation from the trials.
    pub fn is_consistent(&self) -> bool {
        aggregate(&self.trials) == self.aggregates
    }
}

/// 128-bit hex id derived from the config and the session's game events, so
/// replaying the same session yields the same id.
pub fn derive_session_id(config_digest: &str, game_event_digest: &str) -> String {
    let mut h = Sha256::new();
    h.update(config_digest.as_bytes());
    h.update(b"\n");
    h.update(game_event_digest.as_bytes());
    hex::encode(&h.finalize()[..16])
}

pub fn aggregate(trials: &[TrialRecord]) -> Aggregates {
    let mut out = Aggregates::default();
    let mut reactions: BTreeMap<Finger, Vec<f64>> = BTreeMap::new();
    for t in trials {
        let finger = out.per_finger.entry(t.finger).or_default();
        let game = out.per_game.entry(t.game.clone()).or_default();
        finger.trials += 1;
        game.trials += 1;
        match t.outcome {
            TrialOutcome::Hit { reaction_ms, .. } => {
                finger.hits += 1;
                game.hits += 1;
                reactions.entry(t.finger).or_default().push(reaction_ms);
            }
            TrialOutcome::Timeout { .. } => game.timeouts += 1,
        }
        out.pauses.count += t.pause_count as u64;
        out.pauses.total_paused_ticks += t.paused_ticks;
        out.unexpected_contacts += t.unexpected_contact_count as u64;
    }
    for (finger, values) in reactions {
        let agg = out.per_finger.get_mut(&finger).expect("entry created above");
        agg.mean_reaction_ms = mean(&values);
        agg.median_reaction_ms = lower_median(values);
    }
    for game in out.per_game.values_mut() {
        game.hit_rate = (game.trials > 0).then(|| Ratio::new(game.hits, game.trials));
    }
    out
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn lower_median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values[(values.len() - 1) / 2])
}
