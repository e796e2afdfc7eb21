//! Run configuration, loaded from TOML.
//!
//! ```toml
//! [run]
//! mode = "pva"
//! seed = 7
//! tick_limit = 108000
//!
//! [table]
//! goal_width_m = 0.30
//!
//! [link]
//! one_way_delay_ms = 100
//! loss_rate = 0.05
//! ```
//!
//! Every section and key is optional; missing values take their defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentConfig, BotConfig};
use crate::metrics::MetricsConfig;
use crate::netcode::link::{LinkError, LinkModel};
use crate::netcode::session::SessionConfig;
use crate::physics::{PhysicsError, TICK_HZ};
use crate::rules::ServeConfig;
use crate::geometry::GeometryError;
use crate::{CueParams, PhysicsConfig, TableGeometry};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Table(#[from] GeometryError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("{0}")]
    Invalid(&'static str),
}

/// Who plays: `pva` is a human stand-in (A) against the agent (B), `pvp`
/// two human stand-ins, `bots` two agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Pva,
    Pvp,
    Bots,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pva => "pva",
            Mode::Pvp => "pvp",
            Mode::Bots => "bots",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pva" => Ok(Mode::Pva),
            "pvp" => Ok(Mode::Pvp),
            "bots" => Ok(Mode::Bots),
            _ => Err(ConfigError::Invalid("mode must be pva, pvp or bots")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub mode: Mode,
    pub seed: u64,
    /// Hard stop for headless matches; three ten-minute games by default.
    pub tick_limit: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            mode: Mode::Pva,
            seed: 1,
            tick_limit: 3 * 10 * 60 * TICK_HZ as u64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub log: Option<PathBuf>,
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub table: TableGeometry,
    pub physics: PhysicsConfig,
    pub audio: CueParams,
    pub serve: ServeConfig,
    pub agent: AgentConfig,
    pub bot: BotConfig,
    /// Present when bot A plays over a simulated network link.
    pub link: Option<LinkModel>,
    pub metrics: MetricsConfig,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.table.validate()?;
        self.physics.validate()?;
        if let Some(link) = &self.link {
            link.validate()?;
        }
        let probs_ok = self
            .agent
            .hit_probabilities
            .iter()
            .chain(std::iter::once(&self.bot.hit_probability))
            .all(|p| (0.0..=1.0).contains(p));
        if !probs_ok {
            return Err(ConfigError::Invalid("probabilities must lie in [0, 1]"));
        }
        if self.run.tick_limit == 0 {
            return Err(ConfigError::Invalid("tick_limit must be positive"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.run.mode = mode;
        self
    }

    pub fn session_config(&self, snapshots: bool) -> SessionConfig {
        SessionConfig {
            table: self.table,
            physics: self.physics,
            audio: self.audio,
            serve: self.serve,
            head: None,
            snapshots,
        }
    }
}

/// Independent sub-seed for stream `stream` of a run (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
