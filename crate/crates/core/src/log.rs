//! Match event records. The same records make up the JSONL replay log and the
//! `events` list of a snapshot.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{mirror, PlayerId};
use crate::physics::{EventKind, HapticDuration, HapticEvent, HapticStrength};
use crate::rules::{Announcement, Phase};
use crate::Vec2;

pub const LOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogEvent {
    /// First line of a replay log: everything needed to re-run the match.
    Header {
        version: u32,
        seed: u64,
        config: serde_json::Value,
    },
    /// A racket command as applied by the server, in the server frame.
    Input {
        player: PlayerId,
        seq: u32,
        tip: Vec2,
        normal: Vec2,
        tip_vel: Vec2,
        trigger: bool,
    },
    Serve {
        server: PlayerId,
        pos: Vec2,
        vel: Vec2,
        serves_remaining: u8,
    },
    WallHit {
        pos: Vec2,
        speed: f64,
    },
    RacketHit {
        player: PlayerId,
        pos: Vec2,
        out_vel: Vec2,
    },
    GoalScored {
        scorer: PlayerId,
        pos: Vec2,
    },
    BallDead {
        pos: Vec2,
    },
    HoldStarted {
        player: PlayerId,
    },
    HoldSustained {
        player: PlayerId,
    },
    HoldReleased {
        player: PlayerId,
    },
    Haptic {
        player: PlayerId,
        pulse_rate_hz: u32,
        strength: HapticStrength,
        duration: HapticDuration,
    },
    /// The ball crossed the center line heading into `toward`'s half.
    HalfCross {
        toward: PlayerId,
    },
    Announcement {
        scorer: PlayerId,
        score: [u8; 2],
    },
    PhaseChange {
        to: Phase,
    },
    GameEnd {
        winner: PlayerId,
        score: [u8; 2],
        games_won: [u8; 2],
    },
    MatchEnd {
        winner: PlayerId,
        games_won: [u8; 2],
    },
}

impl LogEvent {
    /// The event as seen from `player`'s own frame. Positions and velocities
    /// are mirrored for B; player identities stay absolute.
    pub fn to_frame(&self, player: PlayerId) -> LogEvent {
        if player == PlayerId::A {
            return self.clone();
        }
        let m = mirror;
        match self.clone() {
            LogEvent::Input {
                player,
                seq,
                tip,
                normal,
                tip_vel,
                trigger,
            } => LogEvent::Input {
                player,
                seq,
                tip: m(tip),
                normal: m(normal),
                tip_vel: m(tip_vel),
                trigger,
            },
            LogEvent::Serve {
                server,
                pos,
                vel,
                serves_remaining,
            } => LogEvent::Serve {
                server,
                pos: m(pos),
                vel: m(vel),
                serves_remaining,
            },
            LogEvent::WallHit { pos, speed } => LogEvent::WallHit { pos: m(pos), speed },
            LogEvent::RacketHit {
                player,
                pos,
                out_vel,
            } => LogEvent::RacketHit {
                player,
                pos: m(pos),
                out_vel: m(out_vel),
            },
            LogEvent::GoalScored { scorer, pos } => LogEvent::GoalScored { scorer, pos: m(pos) },
            LogEvent::BallDead { pos } => LogEvent::BallDead { pos: m(pos) },
            other => other,
        }
    }

    pub fn is_input(&self) -> bool {
        matches!(self, LogEvent::Input { .. })
    }

    /// Events of interest to both players regardless of position.
    pub fn is_shared(&self) -> bool {
        matches!(
            self,
            LogEvent::Announcement { .. }
                | LogEvent::PhaseChange { .. }
                | LogEvent::GameEnd { .. }
                | LogEvent::MatchEnd { .. }
        )
    }
}

impl From<EventKind<f64>> for LogEvent {
    fn from(kind: EventKind<f64>) -> Self {
        match kind {
            EventKind::WallHit { pos, speed } => LogEvent::WallHit { pos, speed },
            EventKind::RacketHit {
                player,
                pos,
                out_vel,
            } => LogEvent::RacketHit {
                player,
                pos,
                out_vel,
            },
            EventKind::GoalScored { scorer, pos } => LogEvent::GoalScored { scorer, pos },
            EventKind::BallDead { pos } => LogEvent::BallDead { pos },
            EventKind::HoldStarted { player } => LogEvent::HoldStarted { player },
            EventKind::HoldSustained { player } => LogEvent::HoldSustained { player },
            EventKind::HoldReleased { player } => LogEvent::HoldReleased { player },
        }
    }
}

impl From<HapticEvent> for LogEvent {
    fn from(h: HapticEvent) -> Self {
        LogEvent::Haptic {
            player: h.player,
            pulse_rate_hz: h.pulse_rate_hz,
            strength: h.strength,
            duration: h.duration,
        }
    }
}

impl From<Announcement> for LogEvent {
    fn from(a: Announcement) -> Self {
        LogEvent::Announcement {
            scorer: a.scorer,
            score: a.score,
        }
    }
}

/// One line of the log: `{"tick": n, "kind": ..., ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub tick: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

impl LogRecord {
    pub fn new(tick: u64, event: impl Into<LogEvent>) -> Self {
        Self {
            tick,
            event: event.into(),
        }
    }
}

pub fn record_to_line(record: &LogRecord) -> Result<String, LogError> {
    Ok(serde_json::to_string(record)?)
}

pub fn write_jsonl(records: &[LogRecord]) -> Result<String, LogError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&record_to_line(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a JSONL log. Blank lines are skipped; errors carry 1-based line numbers.
pub fn parse_jsonl(text: &str) -> Result<Vec<LogRecord>, LogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|source| LogError::Parse { line: i + 1, source })
        })
        .collect()
}
