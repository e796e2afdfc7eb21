//! Headless matches, log replay and log invariant checks.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::agent::{to_client_input, Agent, Controller, ScriptedBot};
use crate::config::{derive_seed, ConfigError, Mode, RunConfig};
use crate::geometry::PlayerId;
use crate::log::{record_to_line, LogError, LogEvent, LogRecord, LOG_FORMAT_VERSION};
use crate::metrics::{stats_from_records, MatchStats, MetricsError};
use crate::netcode::link::{LinkError, LinkSim};
use crate::netcode::protocol::{ClientInput, Snapshot};
use crate::netcode::session::{InboundInput, Session, SessionError, TickOutput};
use crate::rules::{goal_pause_ticks, SERVES_PER_TURN, WINNING_SCORE};

const STREAM_SESSION: u64 = 0;
const STREAM_PLAYER_A: u64 = 1;
const STREAM_PLAYER_B: u64 = 2;
const STREAM_UPLINK: u64 = 3;
const STREAM_DOWNLINK: u64 = 5;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("match still running after {tick_limit} ticks")]
    Timeout {
        tick_limit: u64,
        partial: Vec<LogRecord>,
    },
}

#[derive(Debug, Clone)]
pub struct MatchRun {
    pub records: Vec<LogRecord>,
    pub stats: MatchStats,
    pub winner: PlayerId,
    pub games_won: [u8; 2],
    pub ticks: u64,
}

impl MatchRun {
    pub fn to_jsonl(&self) -> Result<String, LogError> {
        crate::log::write_jsonl(&self.records)
    }
}

pub fn header(cfg: &RunConfig) -> LogRecord {
    LogRecord::new(0, LogEvent::Header {
        version: LOG_FORMAT_VERSION,
        seed: cfg.run.seed,
        config: serde_json::to_value(cfg).expect("config serializes"),
    })
}

struct Seat {
    controller: Box<dyn Controller>,
    link: Option<(LinkSim<ClientInput>, LinkSim<Snapshot>)>,
    seq: u32,
    last_tick: u64,
}

fn seats(cfg: &RunConfig) -> Result<[Seat; 2], HarnessError> {
    let seed = cfg.run.seed;
    let make = |player: PlayerId, stream: u64| -> Result<Seat, HarnessError> {
        let s = derive_seed(seed, stream);
        let agent = match cfg.run.mode {
            Mode::Pva => player == PlayerId::B,
            Mode::Pvp => false,
            Mode::Bots => true,
        };
        let controller: Box<dyn Controller> = if agent {
            Box::new(Agent::new(player, cfg.agent.clone(), cfg.table, cfg.physics, s))
        } else {
            Box::new(ScriptedBot::new(player, cfg.bot.clone(), cfg.table, cfg.physics, s))
        };
        // Agents run inside the server; stand-ins for humans connect over the link.
        let link = match (&cfg.link, agent) {
            (Some(model), false) => {
                let up = model.with_seed(derive_seed(seed ^ model.seed, STREAM_UPLINK + player.index() as u64 * 10));
                let down = model.with_seed(derive_seed(seed ^ model.seed, STREAM_DOWNLINK + player.index() as u64 * 10));
                Some((LinkSim::new(up)?, LinkSim::new(down)?))
            }
            _ => None,
        };
        Ok(Seat {
            controller,
            link,
            seq: 0,
            last_tick: 0,
        })
    };
    Ok([make(PlayerId::A, STREAM_PLAYER_A)?, make(PlayerId::B, STREAM_PLAYER_B)?])
}

/// Plays a full best-of-three match headlessly. `observe` sees every tick's
/// output, snapshots included.
pub fn run_bot_match_with(
    cfg: &RunConfig,
    mut observe: impl FnMut(&TickOutput),
) -> Result<MatchRun, HarnessError> {
    cfg.validate()?;
    let mut session = Session::new(cfg.session_config(true), derive_seed(cfg.run.seed, STREAM_SESSION))?;
    let mut seats = seats(cfg)?;
    let mut records = vec![header(cfg)];
    while !session.is_over() {
        let now = session.now();
        if now >= cfg.run.tick_limit {
            return Err(HarnessError::Timeout {
                tick_limit: cfg.run.tick_limit,
                partial: records,
            });
        }
        let mut inputs = Vec::new();
        for (i, seat) in seats.iter_mut().enumerate() {
            let player = PlayerId::from_index(i).expect("two seats");
            let racket = seat.controller.command();
            seat.seq += 1;
            let input = to_client_input(&racket, seat.seq, seat.last_tick);
            match &mut seat.link {
                Some((up, _)) => {
                    up.send(now, input);
                    inputs.extend(up.poll(now).into_iter().map(|i| InboundInput::new(player, i)));
                }
                None => inputs.push(InboundInput::new(player, input)),
            }
        }
        let out = session.tick(&inputs)?;
        observe(&out);
        let snapshots = out.snapshots.clone().expect("snapshots enabled");
        records.extend(out.records);
        for (seat, snap) in seats.iter_mut().zip(snapshots) {
            match &mut seat.link {
                Some((_, down)) => {
                    down.send(now, snap);
                    for s in down.poll(now) {
                        seat.last_tick = s.tick;
                        seat.controller.observe(&s);
                    }
                }
                None => {
                    seat.last_tick = snap.tick;
                    seat.controller.observe(&snap);
                }
            }
        }
    }
    let state = session.match_state();
    let stats = stats_from_records(&records, cfg.metrics)?;
    Ok(MatchRun {
        stats,
        winner: state.finished.expect("loop ends when the match is over"),
        games_won: state.games_won,
        ticks: session.now(),
        records,
    })
}

pub fn run_bot_match(cfg: &RunConfig) -> Result<MatchRun, HarnessError> {
    run_bot_match_with(cfg, |_| {})
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayVerdict {
    pub events: usize,
    pub results: Vec<InvariantResult>,
}

impl ReplayVerdict {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.results.iter().filter(|r| !r.passed).map(|r| r.name).collect()
    }

    pub fn render(&self) -> String {
        let mut out = format!("{} events\n", self.events);
        for r in &self.results {
            let mark = if r.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{mark}  {}", r.name));
            if !r.detail.is_empty() {
                out.push_str(&format!("  ({})", r.detail));
            }
            out.push('\n');
        }
        out
    }
}

type Check = Result<(), String>;
type Invariant = (&'static str, fn(&[LogRecord]) -> Check);

fn check_tick_order(records: &[LogRecord]) -> Check {
    for w in records.windows(2) {
        if w[1].tick < w[0].tick {
            return Err(format!("tick {} after {}", w[1].tick, w[0].tick));
        }
    }
    Ok(())
}

fn check_score_parity(records: &[LogRecord]) -> Check {
    for r in records {
        let score = match r.event {
            LogEvent::Announcement { score, .. } | LogEvent::GameEnd { score, .. } => score,
            _ => continue,
        };
        if score.iter().any(|s| s % 2 != 0 || *s > WINNING_SCORE) {
            return Err(format!("score {score:?} at tick {}", r.tick));
        }
    }
    Ok(())
}

fn check_score_progression(records: &[LogRecord]) -> Check {
    let mut score = [0u8; 2];
    for r in records {
        match r.event {
            LogEvent::Announcement { scorer, score: s } => {
                let mut expected = score;
                expected[scorer.index()] += 2;
                if s != expected {
                    return Err(format!("announced {s:?} after {score:?} at tick {}", r.tick));
                }
                score = s;
            }
            LogEvent::GameEnd { .. } => score = [0, 0],
            _ => {}
        }
    }
    Ok(())
}

fn check_winner_has_twelve(records: &[LogRecord]) -> Check {
    let mut last = [0u8; 2];
    for r in records {
        match r.event {
            LogEvent::Announcement { score, .. } => last = score,
            LogEvent::GameEnd { winner, score, .. } => {
                if score != last {
                    return Err(format!("game end score {score:?} but last announced {last:?}"));
                }
                let loser = winner.opponent();
                if score[winner.index()] != WINNING_SCORE || score[loser.index()] >= WINNING_SCORE {
                    return Err(format!("winner {winner} with score {score:?}"));
                }
                last = [0, 0];
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_goal_pause(records: &[LogRecord]) -> Check {
    let mut pending: Option<u64> = None;
    for r in records {
        match r.event {
            LogEvent::GoalScored { .. } => pending = Some(r.tick),
            LogEvent::GameEnd { .. } => pending = None,
            LogEvent::Serve { .. } => {
                if let Some(goal) = pending.take() {
                    if r.tick - goal != goal_pause_ticks() {
                        return Err(format!("serve {} ticks after goal at {goal}", r.tick - goal));
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_serve_pairs(records: &[LogRecord]) -> Check {
    let mut last_server: Option<PlayerId> = None;
    let mut run = 0u8;
    let mut dead_since_serve = false;
    for r in records {
        match r.event {
            LogEvent::BallDead { .. } => dead_since_serve = true,
            LogEvent::GameEnd { .. } | LogEvent::Header { .. } => {
                last_server = None;
                run = 0;
                dead_since_serve = false;
            }
            LogEvent::Serve { server, .. } => {
                if dead_since_serve {
                    if last_server != Some(server) {
                        return Err(format!("re-serve by {server} at tick {}", r.tick));
                    }
                } else {
                    match last_server {
                        Some(prev) if prev == server => {
                            run += 1;
                            if run > SERVES_PER_TURN {
                                return Err(format!("{server} served {run} in a row at tick {}", r.tick));
                            }
                        }
                        Some(_) if run != SERVES_PER_TURN => {
                            return Err(format!("turn handed over after {run} serve(s) at tick {}", r.tick));
                        }
                        _ => run = 1,
                    }
                }
                last_server = Some(server);
                dead_since_serve = false;
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_goal_conservation(records: &[LogRecord]) -> Check {
    let mut goals = [0u32; 2];
    for r in records {
        match r.event {
            LogEvent::GoalScored { scorer, .. } => goals[scorer.index()] += 1,
            LogEvent::GameEnd { score, .. } => {
                for p in 0..2 {
                    if goals[p] * 2 != score[p] as u32 {
                        return Err(format!("{} goals against final score {score:?}", goals[p]));
                    }
                }
                goals = [0, 0];
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_one_goal_per_serve(records: &[LogRecord]) -> Check {
    let mut goals = 0;
    for r in records {
        match r.event {
            LogEvent::Serve { .. } => goals = 0,
            LogEvent::GoalScored { .. } => {
                goals += 1;
                if goals > 1 {
                    return Err(format!("second goal in one rally at tick {}", r.tick));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_match_result(records: &[LogRecord]) -> Check {
    let mut won = [0u8; 2];
    let mut ended = false;
    for r in records {
        if ended {
            return Err(format!("record after match end at tick {}", r.tick));
        }
        match r.event {
            LogEvent::GameEnd { winner, games_won, .. } => {
                won[winner.index()] += 1;
                if games_won != won {
                    return Err(format!("games won {games_won:?}, counted {won:?}"));
                }
            }
            LogEvent::MatchEnd { winner, games_won } => {
                if games_won != won || won[winner.index()] != 2 || won[winner.opponent().index()] > 1 {
                    return Err(format!("match to {winner} with games {games_won:?}"));
                }
                ended = true;
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_stats(records: &[LogRecord]) -> Check {
    let cfg = crate::metrics::MetricsConfig::default();
    let a = stats_from_records(records, cfg).map_err(|e| e.to_string())?;
    let b = stats_from_records(records, cfg).map_err(|e| e.to_string())?;
    if a != b {
        return Err("stats differ between passes".into());
    }
    for p in &a.players {
        if p.zone_hits.total() != p.hits || p.zone_misses.total() != p.misses {
            return Err("zone counters do not partition hits and misses".into());
        }
    }
    Ok(())
}

fn input_of(event: &LogEvent) -> Option<(PlayerId, ClientInput)> {
    match *event {
        LogEvent::Input {
            player,
            seq,
            tip,
            normal,
            tip_vel,
            trigger,
        } => Some((player, ClientInput {
            seq,
            client_tick: 0,
            racket_tip: player.frame(tip),
            face_normal: player.frame(normal),
            tip_vel: player.frame(tip_vel),
            trigger_held: trigger,
        })),
        _ => None,
    }
}

/// Re-runs the match from the header and logged inputs and compares every
/// regenerated line with the logged one.
fn check_resimulation(records: &[LogRecord]) -> Check {
    let Some((first, rest)) = records.split_first() else {
        return Ok(());
    };
    let LogEvent::Header { config, seed, .. } = &first.event else {
        return Err("first record is not a header".into());
    };
    let mut cfg: RunConfig = serde_json::from_value(config.clone()).map_err(|e| e.to_string())?;
    cfg.run.seed = *seed;
    let mut session = Session::new(cfg.session_config(false), derive_seed(*seed, STREAM_SESSION))
        .map_err(|e| e.to_string())?;
    let mut by_tick: BTreeMap<u64, Vec<&LogRecord>> = BTreeMap::new();
    for r in rest {
        by_tick.entry(r.tick).or_default().push(r);
    }
    let last = rest.last().map_or(0, |r| r.tick);
    for tick in 0..=last {
        let logged = by_tick.remove(&tick).unwrap_or_default();
        let inputs: Vec<InboundInput> = logged
            .iter()
            .filter_map(|r| input_of(&r.event))
            .map(|(p, i)| InboundInput::new(p, i))
            .collect();
        let out = session
            .tick(&inputs)
            .map_err(|e| format!("tick {tick}: {e}"))?;
        if out.records.len() != logged.len() {
            return Err(format!(
                "tick {tick}: {} records regenerated, {} logged",
                out.records.len(),
                logged.len()
            ));
        }
        for (a, b) in out.records.iter().zip(&logged) {
            let (a, b) = (
                record_to_line(a).map_err(|e| e.to_string())?,
                record_to_line(b).map_err(|e| e.to_string())?,
            );
            if a != b {
                return Err(format!("tick {tick}: regenerated {a} but logged {b}"));
            }
        }
    }
    Ok(())
}

/// Runs every log invariant and the re-simulation check.
pub fn replay_records(records: &[LogRecord]) -> ReplayVerdict {
    let checks: [Invariant; 11] = [
        ("tick_order", check_tick_order),
        ("score_parity", check_score_parity),
        ("score_progression", check_score_progression),
        ("winner_has_twelve", check_winner_has_twelve),
        ("goal_pause_300_ticks", check_goal_pause),
        ("serve_turns_in_pairs", check_serve_pairs),
        ("goal_conservation", check_goal_conservation),
        ("one_goal_per_serve", check_one_goal_per_serve),
        ("match_result", check_match_result),
        ("stats_consistent", check_stats),
        ("resimulation", check_resimulation),
    ];
    ReplayVerdict {
        events: records.len(),
        results: checks
            .iter()
            .map(|(name, f)| {
                let r = f(records);
                InvariantResult {
                    name,
                    passed: r.is_ok(),
                    detail: r.err().unwrap_or_default(),
                }
            })
            .collect(),
    }
}

/// Parses a JSONL log and checks it.
pub fn replay_text(text: &str) -> Result<ReplayVerdict, LogError> {
    let records = crate::log::parse_jsonl(text)?;
    Ok(replay_records(&records))
}
