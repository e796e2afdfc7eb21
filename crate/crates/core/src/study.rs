//! Automated route-localization task.
//!
//! A ball rolls in a straight line between one of three near areas and one of
//! two far areas, away from or toward the listener. The listener's cue stream
//! is decoded by [`classify_route`] and each trial yields two answers, the
//! start area and the end area.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{classify_route, render_listener_stream, AudioError, Direction, Listener, RouteLabel, TrackPoint};
use crate::geometry::{PlayerId, Zone};
use crate::physics::TICK_HZ;
use crate::{BinauralFrame, CueParams, HeadPose, TableGeometry, Vec2};

/// First row of a balanced (Williams) Latin square of order six; row `r` adds
/// `r` to every entry modulo six.
pub const WILLIAMS_ROW: [usize; 6] = [0, 1, 5, 2, 4, 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StudyError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("{0}")]
    Invalid(&'static str),
}

/// Zero-mean Gaussian perturbation applied to every cue frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CueNoise {
    pub sigma_itd_s: f64,
    pub sigma_ild_db: f64,
}

impl Default for CueNoise {
    fn default() -> Self {
        Self {
            sigma_itd_s: 50e-6,
            sigma_ild_db: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub seed: u64,
    /// `None` renders clean cues.
    pub noise: Option<CueNoise>,
    /// Trial count for noisy runs; clean runs always play one pass.
    pub trials: usize,
    pub repetitions: usize,
    pub roll_speed_mps: f64,
    /// Distance of route endpoints from each end wall.
    pub end_inset_m: f64,
    pub table: TableGeometry,
    pub audio: CueParams,
    /// Listener head pose; standing at the near end when absent.
    #[serde(skip)]
    pub head: Option<HeadPose>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            noise: Some(CueNoise::default()),
            trials: 1000,
            repetitions: 3,
            roll_speed_mps: 2.5,
            end_inset_m: 0.3,
            table: TableGeometry::default(),
            audio: CueParams::default(),
            head: None,
        }
    }
}

impl StudyConfig {
    pub fn noiseless() -> Self {
        Self {
            noise: None,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: u32,
    pub total: u32,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.total += 1;
        self.correct += ok as u32;
    }

    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }
}

/// Answer tallies. Each trial contributes one start and one end answer, so
/// every pair of sibling categories partitions the same answer set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Breakdown {
    pub overall: Tally,
    pub departure: Tally,
    pub arrival: Tally,
    /// Answers about the listener's own side.
    pub own_side: Tally,
    pub opponent_side: Tally,
    pub start: Tally,
    pub end: Tally,
    /// Trials with both answers right.
    pub routes: Tally,
}

impl Breakdown {
    fn record(&mut self, truth: &RouteLabel, answer: &RouteLabel) {
        let start_ok = answer.start_zone == truth.start_zone;
        let end_ok = answer.end_zone == truth.end_zone;
        let by_dir = match truth.direction {
            Direction::Departure => &mut self.departure,
            Direction::Arrival => &mut self.arrival,
        };
        by_dir.add(start_ok);
        by_dir.add(end_ok);
        for (zone, ok) in [(truth.start_zone, start_ok), (truth.end_zone, end_ok)] {
            self.overall.add(ok);
            if zone.is_near() {
                self.own_side.add(ok);
            } else {
                self.opponent_side.add(ok);
            }
        }
        self.start.add(start_ok);
        self.end.add(end_ok);
        self.routes.add(start_ok && end_ok);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub truth: RouteLabel,
    pub answer: Option<RouteLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub noise: Option<CueNoise>,
    pub seed: u64,
    pub breakdown: Breakdown,
    pub trials: Vec<Trial>,
}

impl StudyReport {
    pub fn accuracy(&self) -> f64 {
        self.breakdown.overall.accuracy().unwrap_or(0.0)
    }

    pub fn render(&self) -> String {
        let b = &self.breakdown;
        let rows = [
            ("overall", b.overall),
            ("departure", b.departure),
            ("arrival", b.arrival),
            ("own side", b.own_side),
            ("opponent side", b.opponent_side),
            ("start", b.start),
            ("end", b.end),
            ("full route", b.routes),
        ];
        let mut out = format!("{} trials\n", self.trials.len());
        for (name, t) in rows {
            out.push_str(&format!(
                "{name:<14} {:>5}/{:<5} {:.4}\n",
                t.correct,
                t.total,
                t.accuracy().unwrap_or(0.0)
            ));
        }
        out
    }
}

/// Trial order: for each direction (departures first), `repetitions` rows of
/// the balanced Latin square over that direction's six routes.
pub fn trial_order(repetitions: usize) -> Vec<RouteLabel> {
    let mut out = Vec::with_capacity(12 * repetitions);
    for direction in [Direction::Departure, Direction::Arrival] {
        let routes = RouteLabel::all(direction);
        for r in 0..repetitions {
            out.extend(WILLIAMS_ROW.iter().map(|&i| routes[(i + r) % 6]));
        }
    }
    out
}

fn endpoint(zone: Zone, cfg: &StudyConfig) -> Vec2 {
    let t = &cfg.table;
    let y = t.half_length() - cfg.end_inset_m;
    let x = zone.center(t).x;
    if zone.is_near() {
        Vec2::new(x, -y)
    } else {
        Vec2::new(x, y)
    }
}

/// Constant-speed track from the route's start area to its end area, in the
/// listener's (player A's) frame.
pub fn route_track(route: &RouteLabel, cfg: &StudyConfig) -> Vec<TrackPoint<f64>> {
    let a = endpoint(route.start_zone, cfg);
    let b = endpoint(route.end_zone, cfg);
    let d = b - a;
    let len = d.norm();
    let vel = d * (cfg.roll_speed_mps / len);
    let dt = 1.0 / f64::from(TICK_HZ);
    let steps = (len / (cfg.roll_speed_mps * dt)).floor() as u64;
    (0..=steps)
        .map(|k| TrackPoint {
            tick: k,
            pos: a + vel * (k as f64 * dt),
            vel,
        })
        .collect()
}

fn clean_frames(route: &RouteLabel, cfg: &StudyConfig) -> Result<Vec<BinauralFrame>, StudyError> {
    let head = cfg.head.unwrap_or_else(|| HeadPose::standing(&cfg.table));
    let listener = Listener {
        player: PlayerId::A,
        head: Some(head),
    };
    let stream = render_listener_stream(&[], &route_track(route, cfg), &listener, &cfg.audio)?;
    Ok(stream.into_iter().map(|f| f.frame).collect())
}

pub fn run_study1(cfg: &StudyConfig) -> Result<StudyReport, StudyError> {
    if cfg.repetitions == 0 || !(cfg.roll_speed_mps > 0.0) {
        return Err(StudyError::Invalid("repetitions and roll speed must be positive"));
    }
    if !(cfg.end_inset_m >= 0.0 && cfg.end_inset_m < cfg.table.half_length()) {
        return Err(StudyError::Invalid("end inset must lie inside the half table"));
    }
    let order = trial_order(cfg.repetitions);
    let mut clean = std::collections::HashMap::new();
    for route in &order {
        if !clean.contains_key(route) {
            clean.insert(*route, clean_frames(route, cfg)?);
        }
    }

    let (count, noise) = match cfg.noise {
        None => (order.len(), None),
        Some(n) => {
            if !(n.sigma_itd_s >= 0.0 && n.sigma_ild_db >= 0.0) {
                return Err(StudyError::Invalid("noise levels must be non-negative"));
            }
            let itd = Normal::new(0.0, n.sigma_itd_s).expect("checked sigma");
            let ild = Normal::new(0.0, n.sigma_ild_db).expect("checked sigma");
            (cfg.trials, Some((itd, ild)))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut breakdown = Breakdown::default();
    let mut trials = Vec::with_capacity(count);
    let mut frames = Vec::new();
    for k in 0..count {
        let truth = order[k % order.len()];
        frames.clear();
        frames.extend_from_slice(&clean[&truth]);
        if let Some((itd, ild)) = &noise {
            for f in &mut frames {
                f.itd += itd.sample(&mut rng);
                f.ild_db += ild.sample(&mut rng);
            }
        }
        let answer = classify_route(&frames, &cfg.table, &cfg.audio).ok();
        match &answer {
            Some(a) => breakdown.record(&truth, a),
            None => {
                // An undecodable stream gets both answers marked wrong.
                let wrong = RouteLabel {
                    start_zone: truth.end_zone,
                    end_zone: truth.start_zone,
                    direction: truth.direction,
                };
                breakdown.record(&truth, &wrong);
            }
        }
        trials.push(Trial { truth, answer });
    }
    Ok(StudyReport {
        noise: cfg.noise,
        seed: cfg.seed,
        breakdown,
        trials,
    })
}
