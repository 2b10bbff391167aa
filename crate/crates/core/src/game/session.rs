//! The session as one reactive program.

use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use serde_json::{json, to_value};

use super::config::{GameConfig, SessionConfig};
use super::events::*;
use super::finger::{session_rng, Finger, FingerScheduler, SessionRng};
use super::target::{progress_fraction, spawn_target, target_hit_test, HitTest, Target};
use crate::reactive::{ActionCtx, ActionError, Program};
use crate::touch::{
    contact_events_in_order, sign_hold_status, ContactEvent, ContactSet, Hand, Phase, Zone,
    ZoneLayout,
};

#[derive(Debug, Clone, PartialEq)]
pub enum GamePhase {
    AwaitHold,
    CrownPrompt {
        finger: Finger,
    },
    TargetActive {
        finger: Finger,
        target: Target<f64>,
        /// Active ticks since the target appeared.
        age: u64,
    },
    Paused(Box<GamePhase>),
    Finished,
}

impl GamePhase {
    pub fn name(&self) -> PhaseName {
        match self {
            GamePhase::AwaitHold => PhaseName::AwaitHold,
            GamePhase::CrownPrompt { .. } => PhaseName::CrownPrompt,
            GamePhase::TargetActive { .. } => PhaseName::TargetActive,
            GamePhase::Paused(_) => PhaseName::Paused,
            GamePhase::Finished => PhaseName::Finished,
        }
    }

    pub fn is_active(&self) -> bool {
        matches!(self, GamePhase::CrownPrompt { .. } | GamePhase::TargetActive { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum TrialOutcome {
    Hit {
        t_ms: f64,
        x: f64,
        y: f64,
        /// Active time from target display to the hit.
        reaction_ms: f64,
    },
    Timeout {
        t_ms: f64,
    },
}

/// One completed prompt → crown tap → target trial. Times are tick times in
/// milliseconds since the start of the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub game: String,
    pub finger: Finger,
    pub prompt_t_ms: f64,
    pub crown_tap_t_ms: f64,
    pub outcome: TrialOutcome,
    pub target: Target<f64>,
    pub unexpected_contact_count: u32,
    pub pause_count: u32,
    pub paused_ticks: u64,
}

impl TrialRecord {
    pub fn is_hit(&self) -> bool {
        matches!(self.outcome, TrialOutcome::Hit { .. })
    }
}

#[derive(Debug, Clone)]
struct Draft {
    prompt_instant: u64,
    crown_instant: Option<u64>,
    unexpected: u32,
    pauses: u32,
    paused_ticks: u64,
    paused_since: Option<u64>,
}

struct Controller {
    games: Vec<GameConfig>,
    layout: ZoneLayout<f64>,
    hand: Hand,
    tick_hz: u32,
    count_paused_time: bool,
    game_index: usize,
    game_started: bool,
    active_ticks: u64,
    phase: GamePhase,
    rng: SessionRng,
    fingers: FingerScheduler,
    draft: Option<Draft>,
    previous_target: Option<Target<f64>>,
}

struct Gate {
    contacts: ContactSet<f64>,
    layout: ZoneLayout<f64>,
    warn_multi_contact: bool,
}

fn lock<T>(m: &Mutex<T>) -> Result<MutexGuard<'_, T>, ActionError> {
    m.lock().map_err(|_| ActionError::new("session state poisoned"))
}

fn emit<P: Serialize>(ctx: &mut ActionCtx<'_>, event: crate::reactive::EventId, payload: P) -> Result<(), ActionError> {
    ctx.generate(event, Some(to_value(payload)?))?;
    Ok(())
}

impl Gate {
    fn step(&mut self, ctx: &mut ActionCtx<'_>, ev: &SessionEvents) -> Result<(), ActionError> {
        let c = ev.contacts;
        let samples = {
            let down = ctx.read_values(c.down)?.map(<[_]>::to_vec);
            let moved = ctx.read_values(c.moved)?.map(<[_]>::to_vec);
            let up = ctx.read_values(c.up)?.map(<[_]>::to_vec);
            contact_events_in_order([down.as_deref(), moved.as_deref(), up.as_deref()])?
        };
        for s in &samples {
            // The gateway already dropped anomalous samples.
            let _ = self.contacts.apply(&s.as_sample());
        }
        let hold = sign_hold_status(&self.contacts, &self.layout);
        let play_contacts = self
            .contacts
            .iter()
            .filter(|(_, c)| self.layout.classify(c.position) == Zone::PlayArea)
            .count();
        emit(
            ctx,
            ev.hold_state,
            HoldReport {
                held: hold.held,
                holding_ids: hold.holding_ids,
                contacts: self.contacts.len(),
                play_contacts,
            },
        )?;
        if self.warn_multi_contact && play_contacts >= 2 {
            emit(ctx, ev.multi_contact_warning, json!({}))?;
        }
        Ok(())
    }
}

impl Controller {
    fn new(config: &SessionConfig) -> Self {
        Controller {
            games: config.games_in_order().into_iter().cloned().collect(),
            layout: config.layout.clone(),
            hand: config.trained_hand,
            tick_hz: config.tick_hz,
            count_paused_time: config.count_paused_time,
            game_index: 0,
            game_started: false,
            active_ticks: 0,
            phase: GamePhase::AwaitHold,
            rng: session_rng(config.rng_seed),
            fingers: FingerScheduler::new(),
            draft: None,
            previous_target: None,
        }
    }

    fn game(&self) -> &GameConfig {
        &self.games[self.game_index]
    }

    fn ms(&self, tick: u64) -> f64 {
        tick as f64 * 1000.0 / self.tick_hz as f64
    }

    fn step(&mut self, ctx: &mut ActionCtx<'_>, ev: &SessionEvents) -> Result<(), ActionError> {
        let now = ctx.instant();
        let held = match ctx.read_values(ev.hold_state)? {
            Some([v, ..]) => HoldReport::deserialize(v)?.held,
            _ => return Err(ActionError::new("holdState carries no value")),
        };
        let downs: Vec<ContactEvent> = {
            let down = ctx.read_values(ev.contacts.down)?.map(<[_]>::to_vec);
            contact_events_in_order([down.as_deref(), None, None])?
                .into_iter()
                .filter(|e| e.phase == Phase::Down)
                .collect()
        };

        match std::mem::replace(&mut self.phase, GamePhase::Finished) {
            GamePhase::Finished => {}
            GamePhase::AwaitHold => {
                self.phase = GamePhase::AwaitHold;
                if held {
                    if !self.game_started {
                        self.game_started = true;
                        let marker = GameMarker {
                            game: self.game().name.clone(),
                            index: self.game_index,
                        };
                        emit(ctx, ev.game_started, marker)?;
                    }
                    self.start_prompt(ctx, ev, now)?;
                    self.play(ctx, ev, &downs, now)?;
                }
            }
            GamePhase::Paused(saved) => {
                if held {
                    self.phase = *saved;
                    if let Some(d) = &mut self.draft {
                        if let Some(since) = d.paused_since.take() {
                            d.paused_ticks += now - since;
                        }
                    }
                    emit(ctx, ev.game_resumed, json!({}))?;
                    self.age_target();
                    self.play(ctx, ev, &downs, now)?;
                } else {
                    self.phase = GamePhase::Paused(saved);
                }
            }
            active => {
                if held {
                    self.phase = active;
                    self.age_target();
                    self.play(ctx, ev, &downs, now)?;
                } else {
                    self.phase = GamePhase::Paused(Box::new(active));
                    if let Some(d) = &mut self.draft {
                        d.pauses += 1;
                        d.paused_since = Some(now);
                    }
                    emit(ctx, ev.game_paused, json!({}))?;
                }
            }
        }

        let counts = self.phase.is_active()
            || (self.count_paused_time && matches!(self.phase, GamePhase::Paused(_)));
        emit(ctx, ev.phase, PhaseReport { state: self.phase.name() })?;
        if counts {
            self.active_ticks += 1;
            let duration = self.game().duration_ticks(self.tick_hz);
            emit(
                ctx,
                ev.play_tick,
                PlayTick {
                    game: self.game().name.clone(),
                    active_ticks: self.active_ticks,
                    fraction: progress_fraction(self.active_ticks, duration),
                },
            )?;
            if self.active_ticks >= duration {
                self.end_game(ctx, ev)?;
            }
        }
        Ok(())
    }

    fn age_target(&mut self) {
        if let GamePhase::TargetActive { age, .. } = &mut self.phase {
            *age += 1;
        }
    }

    fn start_prompt(&mut self, ctx: &mut ActionCtx<'_>, ev: &SessionEvents, now: u64) -> Result<(), ActionError> {
        let finger = self.fingers.next(&mut self.rng);
        self.draft = Some(Draft {
            prompt_instant: now,
            crown_instant: None,
            unexpected: 0,
            pauses: 0,
            paused_ticks: 0,
            paused_since: None,
        });
        self.phase = GamePhase::CrownPrompt { finger };
        emit(ctx, ev.show_crown, ShowCrown { finger, hand: self.hand })
    }

    /// Handles the instant's new contacts in an active phase, then the timeout.
    fn play(
        &mut self,
        ctx: &mut ActionCtx<'_>,
        ev: &SessionEvents,
        downs: &[ContactEvent],
        now: u64,
    ) -> Result<(), ActionError> {
        for down in downs {
            let zone = self.layout.classify(down.position());
            match (&self.phase, zone) {
                (GamePhase::CrownPrompt { finger }, Zone::Crown) => {
                    let finger = *finger;
                    let target = spawn_target(
                        &self.games[self.game_index],
                        &self.layout.play_area,
                        self.previous_target.as_ref(),
                        self.tick_hz,
                        now,
                        &mut self.rng,
                    );
                    if let Some(d) = &mut self.draft {
                        d.crown_instant = Some(now);
                    }
                    emit(ctx, ev.show_target, ShowTarget::new(&self.game().name, &target))?;
                    self.phase = GamePhase::TargetActive { finger, target, age: 0 };
                }
                (GamePhase::CrownPrompt { .. }, Zone::PlayArea) => self.count_unexpected(),
                (GamePhase::TargetActive { target, age, .. }, Zone::PlayArea) => {
                    if target_hit_test(target, *age, down.position()) == HitTest::Hit {
                        let outcome = TrialOutcome::Hit {
                            t_ms: self.ms(now),
                            x: down.x,
                            y: down.y,
                            reaction_ms: self.ms(*age),
                        };
                        self.finish_trial(ctx, ev, outcome, now)?;
                    } else {
                        self.count_unexpected();
                    }
                }
                _ => {}
            }
        }
        if let GamePhase::TargetActive { age, .. } = &self.phase {
            if *age >= self.game().timeout_ticks(self.tick_hz) {
                let outcome = TrialOutcome::Timeout { t_ms: self.ms(now) };
                self.finish_trial(ctx, ev, outcome, now)?;
            }
        }
        Ok(())
    }

    fn count_unexpected(&mut self) {
        if let Some(d) = &mut self.draft {
            d.unexpected += 1;
        }
    }

    fn finish_trial(
        &mut self,
        ctx: &mut ActionCtx<'_>,
        ev: &SessionEvents,
        outcome: TrialOutcome,
        now: u64,
    ) -> Result<(), ActionError> {
        let GamePhase::TargetActive { finger, target, .. } = self.phase.clone() else {
            return Err(ActionError::new("trial finished without a target"));
        };
        let draft = self
            .draft
            .take()
            .ok_or_else(|| ActionError::new("trial finished without a prompt"))?;
        let game = self.game().clone();
        let hit = matches!(outcome, TrialOutcome::Hit { .. });
        let record = TrialRecord {
            game: game.name.clone(),
            finger,
            prompt_t_ms: self.ms(draft.prompt_instant),
            crown_tap_t_ms: self.ms(draft.crown_instant.unwrap_or(target.spawn_instant)),
            outcome,
            target,
            unexpected_contact_count: draft.unexpected,
            pause_count: draft.pauses,
            paused_ticks: draft.paused_ticks,
        };
        emit(ctx, ev.trial_record, &record)?;
        let reason = if hit { HideReason::Hit } else { HideReason::Timeout };
        emit(ctx, ev.hide_target, HideTarget { reason })?;
        if hit {
            emit(
                ctx,
                ev.target_hit,
                TargetHit {
                    game: game.name,
                    finger,
                    cue: game.cue,
                },
            )?;
        }
        self.previous_target = Some(target);
        self.start_prompt(ctx, ev, now)
    }

    fn end_game(&mut self, ctx: &mut ActionCtx<'_>, ev: &SessionEvents) -> Result<(), ActionError> {
        let showing_target = match &self.phase {
            GamePhase::TargetActive { .. } => true,
            GamePhase::Paused(saved) => matches!(**saved, GamePhase::TargetActive { .. }),
            _ => false,
        };
        if showing_target {
            emit(ctx, ev.hide_target, HideTarget { reason: HideReason::GameOver })?;
        }
        self.draft = None;
        let marker = GameMarker {
            game: self.game().name.clone(),
            index: self.game_index,
        };
        emit(ctx, ev.game_finished, marker)?;
        self.game_index += 1;
        self.active_ticks = 0;
        self.game_started = false;
        if self.game_index < self.games.len() {
            self.phase = GamePhase::AwaitHold;
        } else {
            self.phase = GamePhase::Finished;
            self.game_index = self.games.len() - 1;
            emit(ctx, ev.all_games_done, json!({}))?;
        }
        Ok(())
    }
}

/// Builds the session: a hold gate, the game controller, progress and cue
/// emitters and the final reward, run in parallel until `sessionDone`.
pub fn build_session_program(config: &SessionConfig, events: &SessionEvents) -> Program {
    let ev = *events;
    let gate = Arc::new(Mutex::new(Gate {
        contacts: ContactSet::new(),
        layout: config.layout.clone(),
        warn_multi_contact: !config.experiment_mode,
    }));
    let controller = Arc::new(Mutex::new(Controller::new(config)));

    let gate_branch = Program::forever(Program::seq(
        Program::atom(move |ctx| lock(&gate)?.step(ctx, &ev)),
        Program::pause(),
    ));
    let controller_branch = Program::forever(Program::seq_all([
        Program::await_event(ev.hold_state),
        Program::atom(move |ctx| lock(&controller)?.step(ctx, &ev)),
        Program::pause(),
    ]));
    let progress_branch = Program::forever(Program::seq_all([
        Program::await_event(ev.play_tick),
        Program::atom(move |ctx| {
            let tick = match ctx.read_values(ev.play_tick)? {
                Some([v, ..]) => PlayTick::deserialize(v)?,
                _ => return Err(ActionError::new("playTick carries no value")),
            };
            emit(ctx, ev.progress, Progress { fraction: tick.fraction })
        }),
        Program::pause(),
    ]));
    let cue_branch = Program::forever(Program::seq_all([
        Program::await_event(ev.target_hit),
        Program::atom(move |ctx| {
            let hits: Vec<TargetHit> = ctx
                .read_values(ev.target_hit)?
                .unwrap_or_default()
                .iter()
                .map(TargetHit::deserialize)
                .collect::<Result<_, _>>()?;
            for hit in hits {
                emit(ctx, ev.play_cue, PlayCue { cue: hit.cue })?;
            }
            Ok(())
        }),
        Program::pause(),
    ]));
    let summary = SessionComplete {
        subtheme: config.subtheme.clone(),
        games: config
            .games_in_order()
            .into_iter()
            .map(|g| GameSummary {
                game: g.name.clone(),
                picture: g.cue.clone(),
            })
            .collect(),
    };
    let reward_branch = Program::seq(
        Program::await_event(ev.all_games_done),
        Program::atom(move |ctx| {
            emit(ctx, ev.session_complete, &summary)?;
            ctx.generate(ev.session_done, None)?;
            Ok(())
        }),
    );

    Program::until(
        ev.session_done,
        Program::par([
            gate_branch,
            controller_branch,
            progress_branch,
            cue_branch,
            reward_branch,
        ]),
        Program::nothing(),
    )
}
