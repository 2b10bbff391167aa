//! Session configuration (`"schema": "danse-doigts/1"`).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::Point;
use crate::touch::{Hand, ZoneLayout};

pub const SCHEMA: &str = "danse-doigts/1";
pub const GAMES_PER_SUBTHEME: usize = 4;
pub const DEFAULT_DURATION_S: f64 = 150.0;
pub const DEFAULT_TIMEOUT_MS: u64 = 5000;
pub const DEFAULT_TICK_HZ: u32 = 60;
/// Default target radius of each game slot, largest first.
pub const DEFAULT_RADII: [f64; GAMES_PER_SUBTHEME] = [0.06, 0.045, 0.03, 0.02];

/// Validation failure, located by a JSON path such as `subthemes[0].games`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub(crate) fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Target motion as written in the config; speeds are per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum MotionSpec {
    #[default]
    Static,
    Linear {
        velocity: Point<f64>,
        #[serde(default = "default_true")]
        bounce: bool,
    },
    Circular {
        center: Point<f64>,
        radius: f64,
        angular_velocity: f64,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameConfig {
    pub name: String,
    pub target_radius: f64,
    pub motion: MotionSpec,
    pub duration_s: f64,
    pub timeout_ms: u64,
    /// Reinforcement cue played on a hit; also the game's reward image.
    pub cue: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subtheme {
    pub name: String,
    pub games: Vec<GameConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionConfig {
    pub schema: String,
    pub theme: String,
    pub subthemes: Vec<Subtheme>,
    /// Subtheme played by this session.
    pub subtheme: String,
    /// Game started first; the others follow in listed order.
    pub first_game: Option<String>,
    pub trained_hand: Hand,
    pub tick_hz: u32,
    pub rng_seed: u64,
    pub layout: ZoneLayout<f64>,
    pub assets: Option<String>,
    /// Whether paused time counts towards a game's duration.
    pub count_paused_time: bool,
    /// Disables the on-screen multi-contact reminder.
    pub experiment_mode: bool,
    pub collect_url: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    name: String,
    target_radius: Option<f64>,
    #[serde(default)]
    motion: MotionSpec,
    duration_s: Option<f64>,
    timeout_ms: Option<u64>,
    cue: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubtheme {
    name: String,
    games: Vec<RawGame>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: String,
    theme: String,
    subthemes: Vec<RawSubtheme>,
    subtheme: Option<String>,
    first_game: Option<String>,
    trained_hand: Hand,
    tick_hz: Option<u32>,
    rng_seed: u64,
    layout: Option<ZoneLayout<f64>>,
    assets: Option<String>,
    #[serde(default)]
    count_paused_time: bool,
    #[serde(default = "default_true")]
    experiment_mode: bool,
    collect_url: Option<String>,
}

/// Parses and validates a session config, filling defaults.
pub fn load_config(bytes: &[u8]) -> Result<SessionConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." || path == "?" { "$".into() } else { path }, e.into_inner().to_string())
    })?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<SessionConfig, ConfigError> {
    if raw.schema != SCHEMA {
        return Err(ConfigError::new(
            "schema",
            format!("expected \"{SCHEMA}\", found \"{}\"", raw.schema),
        ));
    }
    let tick_hz = raw.tick_hz.unwrap_or(DEFAULT_TICK_HZ);
    if tick_hz == 0 {
        return Err(ConfigError::new("tick_hz", "must be positive"));
    }
    let layout = raw
        .layout
        .unwrap_or_else(|| ZoneLayout::default_for(raw.trained_hand));
    layout
        .validate()
        .map_err(|e| ConfigError::new("layout", e.to_string()))?;
    if raw.subthemes.is_empty() {
        return Err(ConfigError::new("subthemes", "at least one subtheme required"));
    }

    let mut subthemes = Vec::with_capacity(raw.subthemes.len());
    for (si, sub) in raw.subthemes.into_iter().enumerate() {
        let path = format!("subthemes[{si}]");
        if sub.games.len() != GAMES_PER_SUBTHEME {
            return Err(ConfigError::new(
                format!("{path}.games"),
                format!("exactly 4 games required, found {}", sub.games.len()),
            ));
        }
        let mut games = Vec::with_capacity(GAMES_PER_SUBTHEME);
        for (gi, g) in sub.games.into_iter().enumerate() {
            let game = validate_game(g, gi, &layout, &format!("{path}.games[{gi}]"))?;
            games.push(game);
        }
        subthemes.push(Subtheme {
            name: sub.name,
            games,
        });
    }

    let subtheme = match raw.subtheme {
        Some(name) => {
            if !subthemes.iter().any(|s| s.name == name) {
                return Err(ConfigError::new("subtheme", format!("unknown subtheme \"{name}\"")));
            }
            name
        }
        None => subthemes[0].name.clone(),
    };
    let config = SessionConfig {
        schema: raw.schema,
        theme: raw.theme,
        subthemes,
        subtheme,
        first_game: raw.first_game,
        trained_hand: raw.trained_hand,
        tick_hz,
        rng_seed: raw.rng_seed,
        layout,
        assets: raw.assets,
        count_paused_time: raw.count_paused_time,
        experiment_mode: raw.experiment_mode,
        collect_url: raw.collect_url,
    };
    if let Some(first) = &config.first_game {
        if !config.active_subtheme().games.iter().any(|g| &g.name == first) {
            return Err(ConfigError::new(
                "first_game",
                format!("\"{first}\" is not a game of subtheme \"{}\"", config.subtheme),
            ));
        }
    }
    Ok(config)
}

fn validate_game(
    g: RawGame,
    slot: usize,
    layout: &ZoneLayout<f64>,
    path: &str,
) -> Result<GameConfig, ConfigError> {
    let radius = g.target_radius.unwrap_or(DEFAULT_RADII[slot]);
    if !(radius > 0.0) {
        return Err(ConfigError::new(format!("{path}.target_radius"), "must be positive"));
    }
    let Some(inset) = layout.play_area.inset(radius) else {
        return Err(ConfigError::new(
            format!("{path}.target_radius"),
            format!("target of radius {radius} does not fit inside the play area"),
        ));
    };
    let duration_s = g.duration_s.unwrap_or(DEFAULT_DURATION_S);
    if !(duration_s > 0.0) {
        return Err(ConfigError::new(format!("{path}.duration_s"), "must be positive"));
    }
    let timeout_ms = g.timeout_ms.unwrap_or(DEFAULT_TIMEOUT_MS);
    if timeout_ms == 0 {
        return Err(ConfigError::new(format!("{path}.timeout_ms"), "must be positive"));
    }
    match g.motion {
        MotionSpec::Static => {}
        MotionSpec::Linear { velocity, .. } => {
            if !(velocity.x.is_finite() && velocity.y.is_finite()) {
                return Err(ConfigError::new(format!("{path}.motion.velocity"), "must be finite"));
            }
        }
        MotionSpec::Circular {
            center,
            radius: orbit,
            angular_velocity,
        } => {
            let fits = orbit >= 0.0
                && inset.contains(Point::new(center.x - orbit, center.y - orbit))
                && inset.contains(Point::new(center.x + orbit, center.y + orbit));
            if !fits {
                return Err(ConfigError::new(
                    format!("{path}.motion"),
                    "circular orbit leaves the play area",
                ));
            }
            if !angular_velocity.is_finite() {
                return Err(ConfigError::new(
                    format!("{path}.motion.angular_velocity"),
                    "must be finite",
                ));
            }
        }
    }
    let cue = g.cue.unwrap_or_else(|| g.name.clone());
    Ok(GameConfig {
        name: g.name,
        target_radius: radius,
        motion: g.motion,
        duration_s,
        timeout_ms,
        cue,
    })
}

impl GameConfig {
    /// Active-play ticks in one game.
    pub fn duration_ticks(&self, tick_hz: u32) -> u64 {
        ((self.duration_s * tick_hz as f64).round() as u64).max(1)
    }

    pub fn timeout_ticks(&self, tick_hz: u32) -> u64 {
        let num = self.timeout_ms * tick_hz as u64;
        (num.div_ceil(1000)).max(1)
    }
}

impl SessionConfig {
    pub fn active_subtheme(&self) -> &Subtheme {
        self.subthemes
            .iter()
            .find(|s| s.name == self.subtheme)
            .expect("validated subtheme")
    }

    /// Games of the active subtheme in play order.
    pub fn games_in_order(&self) -> Vec<&GameConfig> {
        let games = &self.active_subtheme().games;
        let start = self
            .first_game
            .as_ref()
            .and_then(|f| games.iter().position(|g| &g.name == f))
            .unwrap_or(0);
        games[start..].iter().chain(&games[..start]).collect()
    }

    /// Hex SHA-256 of the canonical JSON of the resolved config.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }

    pub fn ms_of_tick(&self, tick: u64) -> f64 {
        tick as f64 * 1000.0 / self.tick_hz as f64
    }
}
