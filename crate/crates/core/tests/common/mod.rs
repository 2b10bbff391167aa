#![allow(dead_code)]

pub mod collector;
pub mod programs;
pub mod sessions;

use std::path::PathBuf;

use danse_core::game::{load_config, SessionConfig};
use danse_core::replay::read_touch_trace;
use danse_core::TouchSample;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn repo_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(name)
}

pub fn sky_config() -> SessionConfig {
    load_config(&std::fs::read(fixture("sky.config.json")).unwrap()).unwrap()
}

pub fn trace(name: &str) -> Vec<TouchSample> {
    read_touch_trace(std::io::BufReader::new(std::fs::File::open(fixture(name)).unwrap())).unwrap()
}

pub fn json_fixture(name: &str) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(fixture(name)).unwrap()).unwrap()
}

/// Copy of `config` with every game shortened to `duration_s`.
pub fn short(config: &SessionConfig, duration_s: f64) -> SessionConfig {
    let mut c = config.clone();
    for sub in &mut c.subthemes {
        for g in &mut sub.games {
            g.duration_s = duration_s;
        }
    }
    c
}
