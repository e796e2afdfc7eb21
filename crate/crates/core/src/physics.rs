//! Fixed-timestep ball dynamics on the table plane.
//!
//! The ball never leaves the playing surface. Each tick applies linear drag,
//! then advances the ball along a swept path that resolves wall contacts,
//! pocket entries and racket contacts in time order. Holding replaces free
//! flight while a player keeps the trigger pressed on a touching racket.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{PlayerId, TableGeometry, Vec2};
use crate::scalar::Scalar;

/// Simulation rate in ticks per second.
pub const TICK_HZ: u32 = 60;

/// The fixed timestep, `1/60` s, in the requested scalar type.
#[inline]
pub fn tick_dt<S: Scalar>() -> S {
    S::one() / S::of(TICK_HZ as f64)
}

/// Converts a duration in seconds into whole ticks.
pub fn seconds_to_ticks<S: Scalar>(seconds: S) -> u32 {
    (seconds * S::of(TICK_HZ as f64)).round().to_u32().unwrap_or(0)
}

// A swept tick resolves at most this many contacts; anything left over is
// handled by the containment clamp.
const MAX_CONTACTS_PER_TICK: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("integrity violation: non-finite {0}")]
    NonFinite(&'static str),
    #[error("timestep must be exactly 1/{TICK_HZ} s")]
    BadTimestep,
    #[error("racket face normal is degenerate")]
    DegenerateNormal,
    #[error("velocity is receding from the wall")]
    Receding,
    #[error("invalid physics configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig<S> {
    /// Linear drag coefficient in 1/s.
    pub drag_per_s: S,
    pub racket_restitution: S,
    /// Speed ceiling after every operation, m/s.
    pub max_speed: S,
    pub racket_length_m: S,
    pub racket_mass: S,
    pub ball_mass: S,
    /// Scale racket impulses by `m_racket / (m_racket + m_ball)`.
    pub mass_weighted: bool,
    /// Hold anchor sits `ball_radius + hold_gap_m` in front of the racket tip.
    pub hold_gap_m: S,
    pub hold_follow_speed: S,
    pub hold_sustain_s: S,
    pub dead_speed_eps: S,
    pub dead_window_s: S,
}

impl<S: Scalar> Default for PhysicsConfig<S> {
    fn default() -> Self {
        Self {
            drag_per_s: S::of(0.12),
            racket_restitution: S::of(0.9),
            max_speed: S::of(11.11),
            racket_length_m: S::of(0.30),
            racket_mass: S::of(8.0),
            ball_mass: S::one(),
            mass_weighted: false,
            hold_gap_m: S::of(0.01),
            hold_follow_speed: S::of(3.0),
            hold_sustain_s: S::one(),
            dead_speed_eps: S::of(0.1),
            dead_window_s: S::of(3.0),
        }
    }
}

impl<S: Scalar> PhysicsConfig<S> {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        let positive = [
            self.max_speed,
            self.racket_length_m,
            self.racket_mass,
            self.ball_mass,
            self.hold_follow_speed,
            self.dead_speed_eps,
            self.dead_window_s,
        ];
        if positive.iter().any(|v| !v.is_finite() || *v <= S::zero()) {
            return Err(PhysicsError::InvalidConfig("lengths, masses, speeds and windows must be positive"));
        }
        if !self.drag_per_s.is_finite() || self.drag_per_s < S::zero() {
            return Err(PhysicsError::InvalidConfig("drag must be non-negative"));
        }
        if self.racket_restitution <= S::zero() || self.racket_restitution > S::one() {
            return Err(PhysicsError::InvalidConfig("racket restitution must lie in (0, 1]"));
        }
        if !self.hold_gap_m.is_finite() || self.hold_gap_m < S::zero() {
            return Err(PhysicsError::InvalidConfig("hold gap must be non-negative"));
        }
        Ok(())
    }

    pub fn hold_distance(&self, table: &TableGeometry<S>) -> S {
        table.ball_radius_m + self.hold_gap_m
    }

    pub fn dead_window_ticks(&self) -> usize {
        seconds_to_ticks(self.dead_window_s).max(1) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct BallState<S> {
    pub pos: Vec2<S>,
    pub vel: Vec2<S>,
    pub held_by: Option<PlayerId>,
}

impl<S: Scalar> BallState<S> {
    pub fn at_rest(pos: Vec2<S>) -> Self {
        Self {
            pos,
            vel: Vec2::zero(),
            held_by: None,
        }
    }

    pub fn speed(&self) -> S {
        self.vel.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct RacketState<S> {
    pub tip: Vec2<S>,
    pub face_normal: Vec2<S>,
    pub tip_vel: Vec2<S>,
    pub trigger_held: bool,
    pub mass: S,
}

impl<S: Scalar> RacketState<S> {
    /// A still racket 15 cm in front of `player`'s end wall, facing the opponent.
    pub fn resting(player: PlayerId, table: &TableGeometry<S>) -> Self {
        let own = Self {
            tip: Vec2::new(S::zero(), -table.half_length() + S::of(0.15)),
            face_normal: Vec2::new(S::zero(), S::one()),
            tip_vel: Vec2::zero(),
            trigger_held: false,
            mass: S::of(8.0),
        };
        own.to_frame(player)
    }

    /// Re-expresses the racket in `player`'s frame (or back; the map is involutive).
    pub fn to_frame(self, player: PlayerId) -> Self {
        Self {
            tip: player.frame(self.tip),
            face_normal: player.frame(self.face_normal),
            tip_vel: player.frame(self.tip_vel),
            ..self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tip.is_finite()
            && self.face_normal.is_finite()
            && self.tip_vel.is_finite()
            && self.mass.is_finite()
    }

    fn unit_normal(&self) -> Result<Vec2<S>, PhysicsError> {
        self.face_normal.normalized().ok_or(PhysicsError::DegenerateNormal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind<S> {
    WallHit { pos: Vec2<S>, speed: S },
    RacketHit { player: PlayerId, pos: Vec2<S>, out_vel: Vec2<S> },
    GoalScored { scorer: PlayerId, pos: Vec2<S> },
    BallDead { pos: Vec2<S> },
    HoldStarted { player: PlayerId },
    HoldSustained { player: PlayerId },
    HoldReleased { player: PlayerId },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsEvent<S> {
    pub tick: u64,
    pub kind: EventKind<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HapticStrength {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HapticDuration {
    Short,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HapticEvent {
    pub player: PlayerId,
    pub pulse_rate_hz: u32,
    pub strength: HapticStrength,
    pub duration: HapticDuration,
}

/// Controller vibration for an event: a short strong pulse train on a racket
/// hit, a continuous weak one once a hold has lasted a second.
pub fn haptic_for<S>(event: &EventKind<S>) -> Option<HapticEvent> {
    match *event {
        EventKind::RacketHit { player, .. } => Some(HapticEvent {
            player,
            pulse_rate_hz: 70,
            strength: HapticStrength::Strong,
            duration: HapticDuration::Short,
        }),
        EventKind::HoldSustained { player } => Some(HapticEvent {
            player,
            pulse_rate_hz: 30,
            strength: HapticStrength::Weak,
            duration: HapticDuration::Continuous,
        }),
        _ => None,
    }
}

/// Reflects `vel` off a wall with inward unit normal `n`. The tangential
/// component is untouched and the normal component is scaled by `-e`.
pub fn reflect_wall<S: Scalar>(vel: Vec2<S>, n: Vec2<S>, e: S) -> Result<Vec2<S>, PhysicsError> {
    let vn = vel.dot(n);
    if vn > S::zero() {
        return Err(PhysicsError::Receding);
    }
    if vn == S::zero() {
        return Ok(vel);
    }
    Ok(vel - n * ((S::one() + e) * vn))
}

/// Outgoing ball velocity after a racket contact.
///
/// The velocity relative to the racket tip is reflected about the face normal
/// with restitution `e_r`, the tip velocity is added back and the result is
/// capped at `max_speed`. A ball that is not approaching the face is returned
/// unchanged.
pub fn racket_impact<S: Scalar>(
    ball_vel: Vec2<S>,
    racket: &RacketState<S>,
    e_r: S,
    max_speed: S,
) -> Result<Vec2<S>, PhysicsError> {
    impact_scaled(ball_vel, racket, e_r, max_speed, S::one())
}

/// [`racket_impact`] with the impulse scaled by the racket/ball mass ratio.
pub fn racket_impact_weighted<S: Scalar>(
    ball_vel: Vec2<S>,
    racket: &RacketState<S>,
    e_r: S,
    max_speed: S,
    ball_mass: S,
) -> Result<Vec2<S>, PhysicsError> {
    let share = racket.mass / (racket.mass + ball_mass);
    impact_scaled(ball_vel, racket, e_r, max_speed, share)
}

fn impact_scaled<S: Scalar>(
    ball_vel: Vec2<S>,
    racket: &RacketState<S>,
    e_r: S,
    max_speed: S,
    share: S,
) -> Result<Vec2<S>, PhysicsError> {
    let n = racket.unit_normal()?;
    let rel = ball_vel - racket.tip_vel;
    let rn = rel.dot(n);
    if rn >= S::zero() {
        return Ok(ball_vel.clamp_norm(max_speed));
    }
    let out = racket.tip_vel + rel - n * ((S::one() + e_r) * rn * share);
    Ok(out.clamp_norm(max_speed))
}

/// The scorer if the ball center sits on an end-wall contact plane inside the
/// pocket mouth. A ball at B's end scores for A and vice versa.
pub fn detect_goal<S: Scalar>(ball: &BallState<S>, table: &TableGeometry<S>) -> Option<PlayerId> {
    let plane = table.half_length() - table.ball_radius_m;
    if ball.pos.x.abs() > table.half_goal() {
        return None;
    }
    if ball.pos.y >= plane {
        Some(PlayerId::A)
    } else if ball.pos.y <= -plane {
        Some(PlayerId::B)
    } else {
        None
    }
}

/// Ring of recent ball speeds, one entry per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedHistory<S> {
    window: usize,
    speeds: VecDeque<S>,
}

impl<S: Scalar> SpeedHistory<S> {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            speeds: VecDeque::with_capacity(window.max(1)),
        }
    }

    pub fn push(&mut self, speed: S) {
        if self.speeds.len() == self.window {
            self.speeds.pop_front();
        }
        self.speeds.push_back(speed);
    }

    pub fn clear(&mut self) {
        self.speeds.clear();
    }

    pub fn is_full(&self) -> bool {
        self.speeds.len() == self.window
    }

    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.speeds.iter()
    }
}

/// A ball is dead when it is free and has stayed below `eps` for a whole window.
pub fn detect_dead_ball<S: Scalar>(history: &SpeedHistory<S>, held: bool, eps: S) -> bool {
    !held && history.is_full() && history.iter().all(|s| *s < eps)
}

/// Largest lateral offset from the racket tip at which the ball still touches the face.
pub fn racket_reach<S: Scalar>(cfg: &PhysicsConfig<S>, table: &TableGeometry<S>) -> S {
    cfg.racket_length_m * S::of(0.5) + table.ball_radius_m
}

/// Whether the ball touches the racket closely enough to be caught by a hold.
pub fn in_hold_contact<S: Scalar>(
    ball: &BallState<S>,
    racket: &RacketState<S>,
    cfg: &PhysicsConfig<S>,
    table: &TableGeometry<S>,
) -> bool {
    let Some(n) = racket.face_normal.normalized() else {
        return false;
    };
    let rel = ball.pos - racket.tip;
    let s = rel.dot(n).abs();
    let l = rel.dot(n.perp()).abs();
    s <= cfg.hold_distance(table) + S::of(1e-9) && l <= racket_reach(cfg, table)
}

/// Advances a held (or about to be held) ball one tick toward its anchor, or
/// releases it when the trigger is up.
///
/// Returns the ball unchanged when the hold cannot apply: another player
/// holds it, or the trigger is pressed without contact.
pub fn hold_update<S: Scalar>(
    ball: BallState<S>,
    racket: &RacketState<S>,
    player: PlayerId,
    cfg: &PhysicsConfig<S>,
    table: &TableGeometry<S>,
    dt: S,
) -> Result<BallState<S>, PhysicsError> {
    match ball.held_by {
        Some(holder) if holder != player => return Ok(ball),
        Some(_) if !racket.trigger_held => {
            return Ok(BallState {
                pos: ball.pos,
                vel: racket.tip_vel.clamp_norm(cfg.max_speed),
                held_by: None,
            });
        }
        Some(_) => {}
        None => {
            if !racket.trigger_held || !in_hold_contact(&ball, racket, cfg, table) {
                return Ok(ball);
            }
        }
    }
    let n = racket.unit_normal()?;
    let anchor = racket.tip + n * cfg.hold_distance(table);
    let delta = anchor - ball.pos;
    let max_step = cfg.hold_follow_speed * dt;
    let dist = delta.norm();
    let target = if dist <= max_step {
        anchor
    } else {
        ball.pos + delta * (max_step / dist)
    };
    let pos = table.clamp_ball(target);
    Ok(BallState {
        pos,
        vel: ((pos - ball.pos) * (S::one() / dt)).clamp_norm(cfg.max_speed),
        held_by: Some(player),
    })
}

#[derive(Debug, Clone, Copy)]
enum Contact<S> {
    Wall { normal: Vec2<S> },
    Pocket,
    Racket { player: PlayerId, normal: Vec2<S> },
}

/// Table, ball and both rackets, owned by the single simulation thread.
#[derive(Debug, Clone, PartialEq)]
pub struct World<S> {
    pub table: TableGeometry<S>,
    pub config: PhysicsConfig<S>,
    pub ball: BallState<S>,
    pub rackets: [RacketState<S>; 2],
    /// False while no ball is in play (before a serve, after a goal).
    pub live: bool,
    pub tick: u64,
    history: SpeedHistory<S>,
    hold_ticks: u32,
}

impl<S: Scalar> World<S> {
    pub fn new(table: TableGeometry<S>, config: PhysicsConfig<S>) -> Self {
        let window = config.dead_window_ticks();
        let mut rackets = [
            RacketState::resting(PlayerId::A, &table),
            RacketState::resting(PlayerId::B, &table),
        ];
        for r in &mut rackets {
            r.mass = config.racket_mass;
        }
        Self {
            table,
            config,
            ball: BallState::at_rest(Vec2::zero()),
            rackets,
            live: false,
            tick: 0,
            history: SpeedHistory::new(window),
            hold_ticks: 0,
        }
    }

    pub fn racket(&self, player: PlayerId) -> &RacketState<S> {
        &self.rackets[player.index()]
    }

    pub fn racket_mut(&mut self, player: PlayerId) -> &mut RacketState<S> {
        &mut self.rackets[player.index()]
    }

    /// Puts a fresh ball in play.
    pub fn spawn_ball(&mut self, ball: BallState<S>) {
        self.ball = BallState {
            pos: self.table.clamp_ball(ball.pos),
            vel: ball.vel.clamp_norm(self.config.max_speed),
            held_by: None,
        };
        self.live = true;
        self.history.clear();
        self.hold_ticks = 0;
    }

    /// Takes the ball out of play, leaving it at rest where it is.
    pub fn retire_ball(&mut self) {
        self.ball.vel = Vec2::zero();
        self.ball.held_by = None;
        self.live = false;
        self.history.clear();
        self.hold_ticks = 0;
    }

    fn check_integrity(&self) -> Result<(), PhysicsError> {
        if !self.ball.pos.is_finite() || !self.ball.vel.is_finite() {
            return Err(PhysicsError::NonFinite("ball state"));
        }
        if !self.rackets.iter().all(RacketState::is_finite) {
            return Err(PhysicsError::NonFinite("racket state"));
        }
        Ok(())
    }

    /// Advances the world by one fixed tick and returns the events it produced.
    pub fn step(&mut self, dt: S) -> Result<Vec<PhysicsEvent<S>>, PhysicsError> {
        if dt != tick_dt::<S>() {
            return Err(PhysicsError::BadTimestep);
        }
        self.check_integrity()?;
        let tick = self.tick;
        self.tick += 1;
        let mut events = Vec::new();
        if !self.live {
            return Ok(events);
        }
        let mut push = |kind| events.push(PhysicsEvent { tick, kind });

        let mut held = false;
        match self.ball.held_by {
            Some(holder) => {
                let racket = self.rackets[holder.index()];
                self.ball = hold_update(self.ball, &racket, holder, &self.config, &self.table, dt)?;
                if self.ball.held_by.is_some() {
                    held = true;
                    self.hold_ticks += 1;
                    if self.hold_ticks == seconds_to_ticks(self.config.hold_sustain_s) {
                        push(EventKind::HoldSustained { player: holder });
                    }
                } else {
                    self.hold_ticks = 0;
                    push(EventKind::HoldReleased { player: holder });
                }
            }
            None => {
                for player in PlayerId::BOTH {
                    let racket = self.rackets[player.index()];
                    if racket.trigger_held
                        && in_hold_contact(&self.ball, &racket, &self.config, &self.table)
                    {
                        self.ball =
                            hold_update(self.ball, &racket, player, &self.config, &self.table, dt)?;
                        self.hold_ticks = 1;
                        held = true;
                        push(EventKind::HoldStarted { player });
                        break;
                    }
                }
            }
        }

        if !held {
            self.free_flight(dt, &mut push)?;
        }
        self.ball.vel = self.ball.vel.clamp_norm(self.config.max_speed);
        if self.live {
            self.ball.pos = self.table.clamp_ball(self.ball.pos);
            self.history.push(self.ball.speed());
            if detect_dead_ball(&self.history, held, self.config.dead_speed_eps) {
                push(EventKind::BallDead { pos: self.ball.pos });
                self.history.clear();
            }
        }
        self.check_integrity()?;
        Ok(events)
    }

    fn free_flight(
        &mut self,
        dt: S,
        push: &mut impl FnMut(EventKind<S>),
    ) -> Result<(), PhysicsError> {
        let damping = (S::one() - self.config.drag_per_s * dt).max(S::zero());
        self.ball.vel = self.ball.vel * damping;

        let mut elapsed = S::zero();
        let mut struck = [false; 2];
        for _ in 0..MAX_CONTACTS_PER_TICK {
            let remaining = dt - elapsed;
            if remaining <= S::zero() {
                break;
            }
            let Some((t, contact)) = self.earliest_contact(elapsed, remaining, struck)? else {
                self.ball.pos += self.ball.vel * remaining;
                return Ok(());
            };
            self.ball.pos += self.ball.vel * t;
            elapsed += t;
            match contact {
                Contact::Wall { normal } => {
                    let speed = self.ball.speed();
                    self.ball.vel =
                        reflect_wall(self.ball.vel, normal, self.table.wall_restitution)?;
                    push(EventKind::WallHit {
                        pos: self.ball.pos,
                        speed,
                    });
                }
                Contact::Pocket => {
                    let scorer = detect_goal(&self.ball, &self.table)
                        .expect("pocket contact lies on the goal plane");
                    push(EventKind::GoalScored {
                        scorer,
                        pos: self.ball.pos,
                    });
                    self.retire_ball();
                    return Ok(());
                }
                Contact::Racket { player, normal } => {
                    let mut racket = self.rackets[player.index()];
                    racket.face_normal = normal;
                    let out = if self.config.mass_weighted {
                        racket_impact_weighted(
                            self.ball.vel,
                            &racket,
                            self.config.racket_restitution,
                            self.config.max_speed,
                            self.config.ball_mass,
                        )?
                    } else {
                        racket_impact(
                            self.ball.vel,
                            &racket,
                            self.config.racket_restitution,
                            self.config.max_speed,
                        )?
                    };
                    self.ball.vel = out;
                    struck[player.index()] = true;
                    push(EventKind::RacketHit {
                        player,
                        pos: self.ball.pos,
                        out_vel: out,
                    });
                }
            }
        }
        let remaining = dt - elapsed;
        if remaining > S::zero() {
            self.ball.pos += self.ball.vel * remaining;
        }
        Ok(())
    }

    /// Earliest contact within `remaining` seconds, measured from `elapsed`
    /// into the tick. Ties resolve walls first, then rackets A before B.
    fn earliest_contact(
        &self,
        elapsed: S,
        remaining: S,
        struck: [bool; 2],
    ) -> Result<Option<(S, Contact<S>)>, PhysicsError> {
        let pos = self.ball.pos;
        let vel = self.ball.vel;
        let hx = self.table.half_width() - self.table.ball_radius_m;
        let hy = self.table.half_length() - self.table.ball_radius_m;
        let mut best: Option<(S, Contact<S>)> = None;
        let mut consider = |t: S, c: Contact<S>| {
            if t >= S::zero() && t <= remaining && best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, c));
            }
        };

        if vel.x > S::zero() {
            consider(((hx - pos.x) / vel.x).max(S::zero()), Contact::Wall {
                normal: Vec2::new(-S::one(), S::zero()),
            });
        } else if vel.x < S::zero() {
            consider(((-hx - pos.x) / vel.x).max(S::zero()), Contact::Wall {
                normal: Vec2::new(S::one(), S::zero()),
            });
        }
        let end = if vel.y > S::zero() {
            Some((((hy - pos.y) / vel.y).max(S::zero()), -S::one()))
        } else if vel.y < S::zero() {
            Some((((-hy - pos.y) / vel.y).max(S::zero()), S::one()))
        } else {
            None
        };
        if let Some((t, ny)) = end {
            let x_at = pos.x + vel.x * t;
            if x_at.abs() <= self.table.half_goal() {
                consider(t, Contact::Pocket);
            } else {
                consider(t, Contact::Wall {
                    normal: Vec2::new(S::zero(), ny),
                });
            }
        }

        let reach = racket_reach(&self.config, &self.table);
        let r = self.table.ball_radius_m;
        for player in PlayerId::BOTH {
            if struck[player.index()] {
                continue;
            }
            let racket = &self.rackets[player.index()];
            let n = racket.unit_normal()?;
            let tip = racket.tip + racket.tip_vel * elapsed;
            let rel = pos - tip;
            let rel_v = vel - racket.tip_vel;
            // Two-sided face: work with the normal on the ball's side.
            let (n, s0) = if rel.dot(n) >= S::zero() {
                (n, rel.dot(n))
            } else {
                (-n, -rel.dot(n))
            };
            let sv = rel_v.dot(n);
            if sv >= S::zero() {
                continue;
            }
            let t = ((s0 - r) / -sv).max(S::zero());
            if t > remaining {
                continue;
            }
            let lateral = (rel + rel_v * t).dot(n.perp());
            if lateral.abs() <= reach {
                consider(t, Contact::Racket { player, normal: n });
            }
        }
        Ok(best)
    }
}
