//! Touch-trace JSONL files and tick quantization.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::touch::TouchSample;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Reads one sample per line. Blank lines are skipped; timestamps must not
/// decrease.
pub fn read_touch_trace<R: BufRead>(reader: R) -> Result<Vec<TouchSample<f64>>, TraceError> {
    let mut samples: Vec<TouchSample<f64>> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let sample: TouchSample<f64> = serde_json::from_str(&line).map_err(|e| TraceError::Parse {
            line: n,
            message: e.to_string(),
        })?;
        if !(sample.x.is_finite() && sample.y.is_finite()) {
            return Err(TraceError::Parse {
                line: n,
                message: "coordinates must be finite".into(),
            });
        }
        if let Some(prev) = samples.last() {
            if sample.t_ms < prev.t_ms {
                return Err(TraceError::Parse {
                    line: n,
                    message: format!("t_ms {} goes back in time (previous {})", sample.t_ms, prev.t_ms),
                });
            }
        }
        samples.push(sample);
    }
    Ok(samples)
}

pub fn write_touch_trace<W: Write>(mut out: W, samples: &[TouchSample<f64>]) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Tick of a timestamp: `t_ms · hz / 1000` rounded to nearest, ties to even.
pub fn quantize_tick(t_ms: u64, tick_hz: u32) -> u64 {
    let num = t_ms as u128 * tick_hz as u128;
    let (q, r) = (num / 1000, num % 1000);
    let q = if r > 500 || (r == 500 && q % 2 == 1) { q + 1 } else { q };
    q as u64
}

/// Millisecond timestamp that quantizes back to `tick`.
pub fn tick_ms(tick: u64, tick_hz: u32) -> u64 {
    let num = tick as u128 * 1000;
    let hz = tick_hz as u128;
    ((num + hz / 2) / hz) as u64
}
