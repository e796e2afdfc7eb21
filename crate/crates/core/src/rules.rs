//! Game and match state machine: serving, scoring, goal pauses, dead balls,
//! victory and best-of-three matches.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PlayerId, TableGeometry, Vec2};
use crate::physics::{BallState, TICK_HZ};

pub const POINTS_PER_GOAL: u8 = 2;
pub const WINNING_SCORE: u8 = 12;
pub const SERVES_PER_TURN: u8 = 2;
pub const GAMES_TO_WIN: u8 = 2;
pub const GOAL_PAUSE_SECONDS: u64 = 5;

pub const fn goal_pause_ticks() -> u64 {
    GOAL_PAUSE_SECONDS * TICK_HZ as u64
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RulesError {
    #[error("{action} is not allowed in phase {phase:?}")]
    InvalidPhase { action: &'static str, phase: Phase },
    #[error("no serves remain in the current turn")]
    NoServesRemaining,
    #[error("the match is already finished")]
    MatchFinished,
    #[error("game winner {claimed} does not match the finished game ({actual:?})")]
    WinnerMismatch {
        claimed: PlayerId,
        actual: Option<PlayerId>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Serving,
    Rally,
    GoalPause { until_tick: u64 },
    GameOver { winner: PlayerId },
}

/// Phase without its payload, as carried in snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTag {
    Serving,
    Rally,
    GoalPause,
    GameOver,
    MatchOver,
}

impl Phase {
    pub fn tag(&self) -> PhaseTag {
        match self {
            Phase::Serving => PhaseTag::Serving,
            Phase::Rally => PhaseTag::Rally,
            Phase::GoalPause { .. } => PhaseTag::GoalPause,
            Phase::GameOver { .. } => PhaseTag::GameOver,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub scorer: PlayerId,
    /// Points of A and B after the goal.
    pub score: [u8; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServeConfig {
    /// Speed of the ball rolling out of the center toward the server, m/s.
    pub roll_speed_mps: f64,
    /// Largest lateral deviation of the serve direction, degrees.
    pub max_angle_deg: f64,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            roll_speed_mps: 2.0,
            max_angle_deg: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub score: [u8; 2],
    pub server: PlayerId,
    pub serves_remaining_in_turn: u8,
    pub last_server: PlayerId,
    pub phase: Phase,
}

impl GameState {
    pub fn new(opening_server: PlayerId) -> Self {
        Self {
            score: [0, 0],
            server: opening_server,
            serves_remaining_in_turn: SERVES_PER_TURN,
            last_server: opening_server,
            phase: Phase::Serving,
        }
    }

    pub fn score_of(&self, player: PlayerId) -> u8 {
        self.score[player.index()]
    }

    pub fn winner(&self) -> Option<PlayerId> {
        match self.phase {
            Phase::GameOver { winner } => Some(winner),
            _ => None,
        }
    }
}

/// Launches the next serve: the ball leaves the table center rolling toward
/// the server, deviating from the long axis by a seeded random angle.
pub fn start_serve<R: Rng + ?Sized>(
    state: &GameState,
    rng: &mut R,
    cfg: &ServeConfig,
    table: &TableGeometry<f64>,
) -> Result<(GameState, BallState<f64>), RulesError> {
    if state.phase != Phase::Serving {
        return Err(RulesError::InvalidPhase {
            action: "serve",
            phase: state.phase,
        });
    }
    if state.serves_remaining_in_turn == 0 {
        return Err(RulesError::NoServesRemaining);
    }
    let max = cfg.max_angle_deg.to_radians();
    let angle = if max > 0.0 {
        rng.random_range(-max..=max)
    } else {
        0.0
    };
    let toward = table.end_y(state.server).signum();
    let vel = Vec2::new(angle.sin(), toward * angle.cos()) * cfg.roll_speed_mps;
    let next = GameState {
        serves_remaining_in_turn: state.serves_remaining_in_turn - 1,
        last_server: state.server,
        phase: Phase::Rally,
        ..*state
    };
    Ok((
        next,
        BallState {
            pos: Vec2::zero(),
            vel,
            held_by: None,
        },
    ))
}

// A serve that resolved (by a goal) hands the turn over once both serves are used.
fn resolve_serve(state: &mut GameState) {
    if state.serves_remaining_in_turn == 0 {
        state.server = state.server.opponent();
        state.serves_remaining_in_turn = SERVES_PER_TURN;
    }
}

/// Two points to `scorer`, an announcement, and either a five-second pause or
/// the end of the game.
pub fn on_goal(
    state: &GameState,
    scorer: PlayerId,
    now_tick: u64,
) -> Result<(GameState, Announcement), RulesError> {
    if state.phase != Phase::Rally {
        return Err(RulesError::InvalidPhase {
            action: "goal",
            phase: state.phase,
        });
    }
    let mut next = *state;
    let points = &mut next.score[scorer.index()];
    *points = points.saturating_add(POINTS_PER_GOAL).min(WINNING_SCORE);
    if *points >= WINNING_SCORE {
        next.phase = Phase::GameOver { winner: scorer };
    } else {
        next.phase = Phase::GoalPause {
            until_tick: now_tick + goal_pause_ticks(),
        };
        resolve_serve(&mut next);
    }
    Ok((
        next,
        Announcement {
            scorer,
            score: next.score,
        },
    ))
}

/// A dead ball is re-served by the last server without penalty; the consumed
/// serve is given back.
pub fn on_dead_ball(state: &GameState) -> Result<GameState, RulesError> {
    if state.phase != Phase::Rally {
        return Err(RulesError::InvalidPhase {
            action: "dead ball",
            phase: state.phase,
        });
    }
    Ok(GameState {
        server: state.last_server,
        serves_remaining_in_turn: (state.serves_remaining_in_turn + 1).min(SERVES_PER_TURN),
        phase: Phase::Serving,
        ..*state
    })
}

/// Ends the goal pause once `now_tick` reaches it. Every other phase is unchanged.
pub fn advance_clock(state: &GameState, now_tick: u64) -> GameState {
    match state.phase {
        Phase::GoalPause { until_tick } if now_tick >= until_tick => GameState {
            phase: Phase::Serving,
            ..*state
        },
        _ => *state,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchState {
    pub games_won: [u8; 2],
    pub current_game: GameState,
    pub finished: Option<PlayerId>,
    pub games_played: u8,
    pub opening_server: PlayerId,
}

impl MatchState {
    pub fn new(opening_server: PlayerId) -> Self {
        Self {
            games_won: [0, 0],
            current_game: GameState::new(opening_server),
            finished: None,
            games_played: 0,
            opening_server,
        }
    }
}

/// Credits a finished game and either closes the match or opens the next game.
pub fn on_game_end(m: &MatchState, winner: PlayerId) -> Result<MatchState, RulesError> {
    if m.finished.is_some() {
        return Err(RulesError::MatchFinished);
    }
    let actual = m.current_game.winner();
    if actual != Some(winner) {
        return Err(RulesError::WinnerMismatch {
            claimed: winner,
            actual,
        });
    }
    let mut next = *m;
    next.games_won[winner.index()] += 1;
    next.games_played += 1;
    if next.games_won[winner.index()] >= GAMES_TO_WIN {
        next.finished = Some(winner);
    } else {
        next.current_game = GameState::new(m.opening_server);
    }
    Ok(next)
}
