//! Finger prompt order: back-to-back random permutations of the five fingers.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};

/// The session's single random source.
pub type SessionRng = Pcg64Mcg;

pub fn session_rng(seed: u64) -> SessionRng {
    Pcg64Mcg::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
}

impl Finger {
    pub const ALL: [Finger; 5] = [
        Finger::Thumb,
        Finger::Index,
        Finger::Middle,
        Finger::Ring,
        Finger::Little,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Finger::Thumb => "thumb",
            Finger::Index => "index",
            Finger::Middle => "middle",
            Finger::Ring => "ring",
            Finger::Little => "little",
        }
    }
}

/// Prompts come in aligned windows of five, each a permutation of all five
/// fingers. A new window never starts with the finger that ended the last one,
/// so no finger is prompted twice in a row.
#[derive(Debug, Clone)]
pub struct FingerScheduler {
    window: [Finger; 5],
    position: usize,
    last: Option<Finger>,
}

impl Default for FingerScheduler {
    fn default() -> Self {
        Self::new()
    }
}

impl FingerScheduler {
    pub fn new() -> Self {
        FingerScheduler {
            window: Finger::ALL,
            position: Finger::ALL.len(),
            last: None,
        }
    }

    pub fn next(&mut self, rng: &mut SessionRng) -> Finger {
        if self.position == self.window.len() {
            loop {
                self.window.shuffle(rng);
                if Some(self.window[0]) != self.last {
                    break;
                }
            }
            self.position = 0;
        }
        let finger = self.window[self.position];
        self.position += 1;
        self.last = Some(finger);
        finger
    }
}
