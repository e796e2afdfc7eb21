//! Match statistics computed from the event log.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{zone_of, GeometryError, Lateral, PlayerId};
use crate::log::{LogEvent, LogRecord};
use crate::{TableGeometry, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("record at tick {tick} follows tick {last}")]
    OutOfOrder { tick: u64, last: u64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Domain(&'static str),
}

/// Percentage of the age-predicted maximum heart rate, `100 * hr / (220 - age)`.
pub fn max_hr_percent(measured_max_hr: f64, age: f64) -> Result<f64, MetricsError> {
    if !(measured_max_hr > 0.0) || !measured_max_hr.is_finite() {
        return Err(MetricsError::Domain("heart rate must be positive"));
    }
    if !(age > 0.0 && age < 220.0) {
        return Err(MetricsError::Domain("age must lie in (0, 220)"));
    }
    Ok(100.0 * measured_max_hr / (220.0 - age))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneCounts {
    pub left: u32,
    pub middle: u32,
    pub right: u32,
}

impl ZoneCounts {
    fn bump(&mut self, lateral: Lateral) {
        match lateral {
            Lateral::Left => self.left += 1,
            Lateral::Middle => self.middle += 1,
            Lateral::Right => self.right += 1,
        }
    }

    pub fn total(&self) -> u32 {
        self.left + self.middle + self.right
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerStats {
    pub matches_played: u32,
    pub match_win: u32,
    pub games_played: u32,
    pub game_win: u32,
    pub goals: u32,
    pub shots_on_target: u32,
    pub hits: u32,
    pub misses: u32,
    pub zone_hits: ZoneCounts,
    pub zone_misses: ZoneCounts,
    pub rallies: u32,
    pub balls_sent: u32,
    pub balls_approaching: u32,
}

fn ratio(num: u32, den: u32) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Rates are `None` when their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub match_win_rate: Option<f64>,
    pub game_win_rate: Option<f64>,
    pub shots_on_target_rate: Option<f64>,
    pub hit_rate: Option<f64>,
    pub left_hit_rate: Option<f64>,
    pub middle_hit_rate: Option<f64>,
    pub right_hit_rate: Option<f64>,
}

impl PlayerStats {
    pub fn rates(&self) -> Rates {
        let z = |h: u32, m: u32| ratio(h, h + m);
        Rates {
            match_win_rate: ratio(self.match_win, self.matches_played),
            game_win_rate: ratio(self.game_win, self.games_played),
            shots_on_target_rate: ratio(self.shots_on_target, self.hits),
            hit_rate: z(self.hits, self.misses),
            left_hit_rate: z(self.zone_hits.left, self.zone_misses.left),
            middle_hit_rate: z(self.zone_hits.middle, self.zone_misses.middle),
            right_hit_rate: z(self.zone_hits.right, self.zone_misses.right),
        }
    }

    /// Adds another player's counters (used to pool matches).
    pub fn merge(&mut self, o: &PlayerStats) {
        self.matches_played += o.matches_played;
        self.match_win += o.match_win;
        self.games_played += o.games_played;
        self.game_win += o.game_win;
        self.goals += o.goals;
        self.shots_on_target += o.shots_on_target;
        self.hits += o.hits;
        self.misses += o.misses;
        for (a, b) in [(&mut self.zone_hits, &o.zone_hits), (&mut self.zone_misses, &o.zone_misses)] {
            a.left += b.left;
            a.middle += b.middle;
            a.right += b.right;
        }
        self.rallies += o.rallies;
        self.balls_sent += o.balls_sent;
        self.balls_approaching += o.balls_approaching;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchStats {
    pub players: [PlayerStats; 2],
    /// Final points of every finished game, A then B.
    pub game_scores: Vec<[u8; 2]>,
}

impl MatchStats {
    pub fn player(&self, p: PlayerId) -> &PlayerStats {
        &self.players[p.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// A shot is on target if it meets the opponent's end within this many
    /// goal half-widths of the center.
    pub on_target_factor: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            on_target_factor: 1.5,
        }
    }
}

/// Folds log records into [`MatchStats`].
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    table: TableGeometry,
    cfg: MetricsConfig,
    stats: MatchStats,
    last_tick: Option<u64>,
    /// Player whose end the ball is heading for.
    toward: Option<PlayerId>,
    /// Whether that player has touched the ball since it started toward them.
    defended: bool,
    pending_shot: Option<PlayerId>,
    last_hitter: Option<PlayerId>,
    in_play: bool,
    score: [u8; 2],
}

impl StatsAccumulator {
    pub fn new(table: TableGeometry, cfg: MetricsConfig) -> Self {
        Self {
            table,
            cfg,
            stats: MatchStats::default(),
            last_tick: None,
            toward: None,
            defended: false,
            pending_shot: None,
            last_hitter: None,
            in_play: false,
            score: [0, 0],
        }
    }

    pub fn stats(&self) -> &MatchStats {
        &self.stats
    }

    pub fn finish(self) -> MatchStats {
        self.stats
    }

    fn p(&mut self, player: PlayerId) -> &mut PlayerStats {
        &mut self.stats.players[player.index()]
    }

    fn end_at(&self, pos: Vec2) -> Option<PlayerId> {
        let plane = self.table.half_length() - self.table.ball_radius_m - 1e-9;
        if pos.y >= plane {
            Some(PlayerId::B)
        } else if pos.y <= -plane {
            Some(PlayerId::A)
        } else {
            None
        }
    }

    fn set_toward(&mut self, player: PlayerId, defended: bool) {
        self.toward = Some(player);
        self.defended = defended;
    }

    fn miss(&mut self, player: PlayerId, pos: Vec2) -> Result<(), MetricsError> {
        if self.in_play && self.toward == Some(player) && !self.defended {
            let lateral = zone_of(pos, player, &self.table)?.lateral();
            let s = self.p(player);
            s.misses += 1;
            s.zone_misses.bump(lateral);
        }
        Ok(())
    }

    fn reach_end(&mut self, end: PlayerId, pos: Vec2) {
        if let Some(shooter) = self.pending_shot.take() {
            let limit = self.cfg.on_target_factor * self.table.half_goal();
            if shooter != end && pos.x.abs() <= limit {
                self.p(shooter).shots_on_target += 1;
            }
        }
    }

    pub fn accumulate(&mut self, record: &LogRecord) -> Result<(), MetricsError> {
        if let Some(last) = self.last_tick {
            if record.tick < last {
                return Err(MetricsError::OutOfOrder {
                    tick: record.tick,
                    last,
                });
            }
        }
        self.last_tick = Some(record.tick);
        match record.event {
            LogEvent::Serve { server, .. } => {
                self.set_toward(server, false);
                self.pending_shot = None;
                self.last_hitter = None;
                self.in_play = true;
            }
            LogEvent::RacketHit { player, pos, out_vel } => {
                let lateral = zone_of(pos, player, &self.table)?.lateral();
                let s = self.p(player);
                s.hits += 1;
                s.zone_hits.bump(lateral);
                if let Some(prev) = self.last_hitter {
                    if prev != player {
                        self.p(prev).rallies += 1;
                    }
                }
                self.last_hitter = Some(player);
                self.pending_shot = Some(player);
                let heading = if out_vel.y > 0.0 {
                    Some(PlayerId::B)
                } else if out_vel.y < 0.0 {
                    Some(PlayerId::A)
                } else {
                    self.toward
                };
                if let Some(h) = heading {
                    self.set_toward(h, h == player);
                }
            }
            LogEvent::WallHit { pos, .. } => {
                if let Some(end) = self.end_at(pos) {
                    self.miss(end, pos)?;
                    self.reach_end(end, pos);
                    self.set_toward(end.opponent(), false);
                }
            }
            LogEvent::GoalScored { scorer, pos } => {
                let end = scorer.opponent();
                self.miss(end, pos)?;
                self.reach_end(end, pos);
                self.p(scorer).goals += 1;
                self.in_play = false;
            }
            LogEvent::BallDead { pos } => {
                let half = if pos.y < 0.0 { PlayerId::A } else { PlayerId::B };
                self.miss(half, pos)?;
                self.in_play = false;
            }
            LogEvent::HalfCross { toward } => {
                self.p(toward.opponent()).balls_sent += 1;
                self.p(toward).balls_approaching += 1;
            }
            LogEvent::Announcement { score, .. } => self.score = score,
            LogEvent::GameEnd { winner, score, .. } => {
                self.stats.game_scores.push(score);
                self.score = [0, 0];
                self.p(winner).game_win += 1;
                for s in &mut self.stats.players {
                    s.games_played += 1;
                }
            }
            LogEvent::MatchEnd { winner, .. } => {
                self.p(winner).match_win += 1;
                for s in &mut self.stats.players {
                    s.matches_played += 1;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Table geometry recorded in a log header, if any.
pub fn table_from_records(records: &[LogRecord]) -> TableGeometry {
    records
        .iter()
        .find_map(|r| match &r.event {
            LogEvent::Header { config, .. } => config
                .get("table")
                .and_then(|t| serde_json::from_value(t.clone()).ok()),
            _ => None,
        })
        .unwrap_or_default()
}

pub fn stats_from_records(
    records: &[LogRecord],
    cfg: MetricsConfig,
) -> Result<MatchStats, MetricsError> {
    let mut acc = StatsAccumulator::new(table_from_records(records), cfg);
    for r in records {
        acc.accumulate(r)?;
    }
    Ok(acc.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerReport {
    pub player: PlayerId,
    pub counts: PlayerStats,
    pub rates: Rates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub players: Vec<PlayerReport>,
    pub game_scores: Vec<[u8; 2]>,
}

impl From<&MatchStats> for StatsReport {
    fn from(s: &MatchStats) -> Self {
        Self {
            players: PlayerId::BOTH
                .iter()
                .map(|p| PlayerReport {
                    player: *p,
                    counts: *s.player(*p),
                    rates: s.player(*p).rates(),
                })
                .collect(),
            game_scores: s.game_scores.clone(),
        }
    }
}

/// Plain-text table, one row per measurement, one column per player.
pub fn render_table(s: &MatchStats) -> String {
    let [a, b] = &s.players;
    let (ra, rb) = (a.rates(), b.rates());
    let rate = |r: Option<f64>| r.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    let rows: Vec<(&str, String, String)> = vec![
        ("Match Win", a.match_win.to_string(), b.match_win.to_string()),
        ("Game Win", a.game_win.to_string(), b.game_win.to_string()),
        ("Shots on Target", a.shots_on_target.to_string(), b.shots_on_target.to_string()),
        ("Hit", a.hits.to_string(), b.hits.to_string()),
        ("Left Hit", a.zone_hits.left.to_string(), b.zone_hits.left.to_string()),
        ("Middle Hit", a.zone_hits.middle.to_string(), b.zone_hits.middle.to_string()),
        ("Right Hit", a.zone_hits.right.to_string(), b.zone_hits.right.to_string()),
        ("Miss", a.misses.to_string(), b.misses.to_string()),
        ("Match Win Rate", rate(ra.match_win_rate), rate(rb.match_win_rate)),
        ("Game Win Rate", rate(ra.game_win_rate), rate(rb.game_win_rate)),
        ("Shots on Target Rate", rate(ra.shots_on_target_rate), rate(rb.shots_on_target_rate)),
        ("Hit Rate", rate(ra.hit_rate), rate(rb.hit_rate)),
        ("Left Hit Rate", rate(ra.left_hit_rate), rate(rb.left_hit_rate)),
        ("Middle Hit Rate", rate(ra.middle_hit_rate), rate(rb.middle_hit_rate)),
        ("Right Hit Rate", rate(ra.right_hit_rate), rate(rb.right_hit_rate)),
        ("Rally", a.rallies.to_string(), b.rallies.to_string()),
        ("Number of Ball sent", a.balls_sent.to_string(), b.balls_sent.to_string()),
        ("Number of approaching Balls", a.balls_approaching.to_string(), b.balls_approaching.to_string()),
    ];
    let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{:<w$}  {:>8}  {:>8}", "Measurement", "A", "B");
    for (label, va, vb) in rows {
        let _ = writeln!(out, "{label:<w$}  {va:>8}  {vb:>8}");
    }
    out
}
