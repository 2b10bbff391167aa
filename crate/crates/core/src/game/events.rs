//! Session event names and payloads.
//!
//! UI-facing events carry no counts, scores or clock values: positions and
//! radii place shapes, `progress.fraction` sets a bar length.

use serde::{Deserialize, Serialize};

use super::finger::Finger;
use super::target::{MotionState, Target};
use crate::geometry::Point;
use crate::reactive::{EventId, Machine};
use crate::touch::{ContactEvents, Hand};

/// Every event used by the session program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionEvents {
    pub contacts: ContactEvents,
    // UI-facing
    pub show_crown: EventId,
    pub show_target: EventId,
    pub hide_target: EventId,
    pub progress: EventId,
    pub play_cue: EventId,
    pub game_paused: EventId,
    pub game_resumed: EventId,
    pub session_complete: EventId,
    // internal
    pub hold_state: EventId,
    pub phase: EventId,
    pub play_tick: EventId,
    pub target_hit: EventId,
    pub trial_record: EventId,
    pub game_started: EventId,
    pub game_finished: EventId,
    pub all_games_done: EventId,
    pub session_done: EventId,
    pub multi_contact_warning: EventId,
}

impl SessionEvents {
    pub const SHOW_CROWN: &'static str = "showCrown";
    pub const SHOW_TARGET: &'static str = "showTarget";
    pub const HIDE_TARGET: &'static str = "hideTarget";
    pub const PROGRESS: &'static str = "progress";
    pub const PLAY_CUE: &'static str = "playCue";
    pub const GAME_PAUSED: &'static str = "gamePaused";
    pub const GAME_RESUMED: &'static str = "gameResumed";
    pub const SESSION_COMPLETE: &'static str = "sessionComplete";
    pub const HOLD_STATE: &'static str = "holdState";
    pub const PHASE: &'static str = "phase";
    pub const PLAY_TICK: &'static str = "playTick";
    pub const TARGET_HIT: &'static str = "targetHit";
    pub const TRIAL_RECORD: &'static str = "trialRecord";
    pub const GAME_STARTED: &'static str = "gameStarted";
    pub const GAME_FINISHED: &'static str = "gameFinished";
    pub const ALL_GAMES_DONE: &'static str = "allGamesDone";
    pub const SESSION_DONE: &'static str = "sessionDone";
    pub const MULTI_CONTACT_WARNING: &'static str = "multiContactWarning";

    pub const UI_EVENTS: [&'static str; 8] = [
        Self::SHOW_CROWN,
        Self::SHOW_TARGET,
        Self::HIDE_TARGET,
        Self::PROGRESS,
        Self::PLAY_CUE,
        Self::GAME_PAUSED,
        Self::GAME_RESUMED,
        Self::SESSION_COMPLETE,
    ];

    /// Events that describe the game itself, as opposed to raw input or
    /// instrumentation.
    pub const GAME_EVENTS: [&'static str; 18] = [
        Self::SHOW_CROWN,
        Self::SHOW_TARGET,
        Self::HIDE_TARGET,
        Self::PROGRESS,
        Self::PLAY_CUE,
        Self::GAME_PAUSED,
        Self::GAME_RESUMED,
        Self::SESSION_COMPLETE,
        Self::HOLD_STATE,
        Self::PHASE,
        Self::PLAY_TICK,
        Self::TARGET_HIT,
        Self::TRIAL_RECORD,
        Self::GAME_STARTED,
        Self::GAME_FINISHED,
        Self::ALL_GAMES_DONE,
        Self::SESSION_DONE,
        Self::MULTI_CONTACT_WARNING,
    ];

    pub fn declare(machine: &mut Machine) -> Self {
        SessionEvents {
            contacts: ContactEvents::declare(machine),
            show_crown: machine.event(Self::SHOW_CROWN),
            show_target: machine.event(Self::SHOW_TARGET),
            hide_target: machine.event(Self::HIDE_TARGET),
            progress: machine.event(Self::PROGRESS),
            play_cue: machine.event(Self::PLAY_CUE),
            game_paused: machine.event(Self::GAME_PAUSED),
            game_resumed: machine.event(Self::GAME_RESUMED),
            session_complete: machine.event(Self::SESSION_COMPLETE),
            hold_state: machine.event(Self::HOLD_STATE),
            phase: machine.event(Self::PHASE),
            play_tick: machine.event(Self::PLAY_TICK),
            target_hit: machine.event(Self::TARGET_HIT),
            trial_record: machine.event(Self::TRIAL_RECORD),
            game_started: machine.event(Self::GAME_STARTED),
            game_finished: machine.event(Self::GAME_FINISHED),
            all_games_done: machine.event(Self::ALL_GAMES_DONE),
            session_done: machine.event(Self::SESSION_DONE),
            multi_contact_warning: machine.event(Self::MULTI_CONTACT_WARNING),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShowCrown {
    pub finger: Finger,
    pub hand: Hand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShowTarget {
    pub game: String,
    pub center: Point<f64>,
    pub radius: f64,
    /// Per-tick motion; the UI interpolates between ticks.
    pub motion: MotionState<f64>,
}

impl ShowTarget {
    pub fn new(game: &str, target: &Target<f64>) -> Self {
        ShowTarget {
            game: game.to_owned(),
            center: target.center,
            radius: target.radius,
            motion: target.motion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum HideReason {
    Hit,
    Timeout,
    GameOver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HideTarget {
    pub reason: HideReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayCue {
    pub cue: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSummary {
    pub game: String,
    pub picture: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionComplete {
    pub subtheme: String,
    pub games: Vec<GameSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PhaseName {
    AwaitHold,
    CrownPrompt,
    TargetActive,
    Paused,
    Finished,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub state: PhaseName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldReport {
    pub held: bool,
    pub holding_ids: Option<[u32; 2]>,
    pub contacts: usize,
    pub play_contacts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayTick {
    pub game: String,
    pub active_ticks: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetHit {
    pub game: String,
    pub finger: Finger,
    pub cue: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameMarker {
    pub game: String,
    pub index: usize,
}
