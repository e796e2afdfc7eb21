//! The authoritative simulation owner: applies client inputs, steps physics,
//! runs the rules and produces per-player snapshots and log records.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::audio::{binaural_cues, rolling_gain, AudioError, SourceKind};
use crate::geometry::{GeometryError, PlayerId};
use crate::log::{LogEvent, LogRecord};
use crate::netcode::protocol::{ClientInput, Snapshot};
use crate::physics::{haptic_for, tick_dt, EventKind, PhysicsError};
use crate::rules::{
    advance_clock, on_dead_ball, on_game_end, on_goal, start_serve, MatchState, Phase, PhaseTag,
    RulesError, ServeConfig,
};
use crate::{CueParams, HeadPose, PhysicsConfig, RacketState, TableGeometry, Vec2, World};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Rules(#[from] RulesError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("the match is over")]
    MatchOver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub table: TableGeometry,
    pub physics: PhysicsConfig,
    pub audio: CueParams,
    pub serve: ServeConfig,
    /// Listener pose, identical for both players in their own frames.
    pub head: Option<HeadPose>,
    /// Build snapshots every tick. Off for headless batch runs.
    pub snapshots: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            table: TableGeometry::default(),
            physics: PhysicsConfig::default(),
            audio: CueParams::default(),
            serve: ServeConfig::default(),
            head: None,
            snapshots: true,
        }
    }
}

/// An input as received, tagged with the connection's player slot (0 = A,
/// 1 = B). Other slots are dropped and counted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InboundInput {
    pub slot: u8,
    pub input: ClientInput,
}

impl InboundInput {
    pub fn new(player: PlayerId, input: ClientInput) -> Self {
        Self {
            slot: player.index() as u8,
            input,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub tick: u64,
    pub records: Vec<LogRecord>,
    /// Snapshots for A and B, when enabled.
    pub snapshots: Option<[Snapshot; 2]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InputCounters {
    pub applied: u64,
    pub stale: u64,
    pub unknown_player: u64,
    pub invalid: u64,
}

#[derive(Debug, Clone)]
pub struct Session {
    cfg: SessionConfig,
    head: HeadPose,
    world: World,
    state: MatchState,
    rng: ChaCha8Rng,
    last_seq: [Option<u32>; 2],
    counters: InputCounters,
    match_over: bool,
}

impl Session {
    /// A fresh match. The opening server is a seeded coin flip.
    pub fn new(cfg: SessionConfig, seed: u64) -> Result<Self, SessionError> {
        cfg.table.validate()?;
        cfg.physics.validate()?;
        let head = match cfg.head {
            Some(h) => {
                h.validate()?;
                h
            }
            None => HeadPose::standing(&cfg.table),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opening = if rng.random_bool(0.5) {
            PlayerId::A
        } else {
            PlayerId::B
        };
        let world = World::new(cfg.table, cfg.physics);
        Ok(Self {
            cfg,
            head,
            world,
            state: MatchState::new(opening),
            rng,
            last_seq: [None, None],
            counters: InputCounters::default(),
            match_over: false,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn match_state(&self) -> &MatchState {
        &self.state
    }

    pub fn now(&self) -> u64 {
        self.world.tick
    }

    pub fn is_over(&self) -> bool {
        self.match_over
    }

    pub fn input_counters(&self) -> InputCounters {
        self.counters
    }

    /// Clamps a racket command into the player's own half, in the player's frame.
    fn sanitize(&self, input: &ClientInput) -> Option<(Vec2, Vec2, Vec2)> {
        if !input.racket_tip.is_finite() || !input.tip_vel.is_finite() {
            return None;
        }
        let n = input.face_normal;
        let len = n.norm();
        if !len.is_finite() || len < 1e-9 {
            return None;
        }
        let n = if (len - 1.0).abs() <= 1e-9 {
            n
        } else {
            n.normalized()?
        };
        let hw = self.cfg.table.half_width();
        let hl = self.cfg.table.half_length();
        let tip = Vec2::new(
            input.racket_tip.x.clamp(-hw, hw),
            input.racket_tip.y.clamp(-hl, 0.0),
        );
        Some((tip, n, input.tip_vel))
    }

    fn apply_inputs(&mut self, inputs: &[InboundInput], tick: u64, records: &mut Vec<LogRecord>) {
        let mut latest: [Option<&ClientInput>; 2] = [None, None];
        for inbound in inputs {
            let Some(player) = PlayerId::from_index(inbound.slot as usize) else {
                self.counters.unknown_player += 1;
                continue;
            };
            let i = player.index();
            let floor = match (latest[i], self.last_seq[i]) {
                (Some(l), _) => Some(l.seq),
                (None, s) => s,
            };
            if floor.is_some_and(|s| inbound.input.seq <= s) {
                self.counters.stale += 1;
                continue;
            }
            if latest[i].is_some() {
                self.counters.stale += 1;
            }
            latest[i] = Some(&inbound.input);
        }
        for player in PlayerId::BOTH {
            let Some(input) = latest[player.index()] else {
                continue;
            };
            self.last_seq[player.index()] = Some(input.seq);
            let Some((tip, normal, tip_vel)) = self.sanitize(input) else {
                self.counters.invalid += 1;
                continue;
            };
            let own = RacketState {
                tip,
                face_normal: normal,
                tip_vel,
                trigger_held: input.trigger_held,
                mass: self.cfg.physics.racket_mass,
            };
            let server = own.to_frame(player);
            *self.world.racket_mut(player) = server;
            self.counters.applied += 1;
            records.push(LogRecord::new(tick, LogEvent::Input {
                player,
                seq: input.seq,
                tip: server.tip,
                normal: server.face_normal,
                tip_vel: server.tip_vel,
                trigger: server.trigger_held,
            }));
        }
    }

    fn set_phase(&mut self, phase: Phase, tick: u64, records: &mut Vec<LogRecord>) {
        self.state.current_game.phase = phase;
        records.push(LogRecord::new(tick, LogEvent::PhaseChange { to: phase }));
    }

    fn rules_before_step(&mut self, tick: u64, records: &mut Vec<LogRecord>) -> Result<(), SessionError> {
        let game = self.state.current_game;
        let advanced = advance_clock(&game, tick);
        if advanced.phase != game.phase {
            self.set_phase(advanced.phase, tick, records);
        }
        if let Phase::GameOver { winner } = self.state.current_game.phase {
            let score = self.state.current_game.score;
            self.state = on_game_end(&self.state, winner)?;
            records.push(LogRecord::new(tick, LogEvent::GameEnd {
                winner,
                score,
                games_won: self.state.games_won,
            }));
            if let Some(winner) = self.state.finished {
                records.push(LogRecord::new(tick, LogEvent::MatchEnd {
                    winner,
                    games_won: self.state.games_won,
                }));
                self.match_over = true;
                return Ok(());
            }
            records.push(LogRecord::new(tick, LogEvent::PhaseChange {
                to: self.state.current_game.phase,
            }));
        }
        if self.state.current_game.phase == Phase::Serving {
            let (game, ball) = start_serve(
                &self.state.current_game,
                &mut self.rng,
                &self.cfg.serve,
                &self.cfg.table,
            )?;
            self.state.current_game = game;
            self.world.spawn_ball(ball);
            records.push(LogRecord::new(tick, LogEvent::Serve {
                server: game.last_server,
                pos: self.world.ball.pos,
                vel: self.world.ball.vel,
                serves_remaining: game.serves_remaining_in_turn,
            }));
            records.push(LogRecord::new(tick, LogEvent::PhaseChange { to: game.phase }));
        }
        Ok(())
    }

    /// Advances the match by one tick.
    pub fn tick(&mut self, inputs: &[InboundInput]) -> Result<TickOutput, SessionError> {
        if self.match_over {
            return Err(SessionError::MatchOver);
        }
        let tick = self.world.tick;
        let mut records = Vec::new();
        self.apply_inputs(inputs, tick, &mut records);
        self.rules_before_step(tick, &mut records)?;

        let was_live = self.world.live;
        let before = self.world.ball.pos;
        let events = self.world.step(tick_dt())?;
        if was_live && self.world.live {
            let after = self.world.ball.pos;
            if before.y < 0.0 && after.y >= 0.0 {
                records.push(LogRecord::new(tick, LogEvent::HalfCross { toward: PlayerId::B }));
            } else if before.y > 0.0 && after.y <= 0.0 {
                records.push(LogRecord::new(tick, LogEvent::HalfCross { toward: PlayerId::A }));
            }
        }
        for e in events {
            records.push(LogRecord::new(tick, e.kind));
            if let Some(h) = haptic_for(&e.kind) {
                records.push(LogRecord::new(tick, h));
            }
            match e.kind {
                EventKind::GoalScored { scorer, .. } => {
                    let (game, announcement) = on_goal(&self.state.current_game, scorer, tick)?;
                    records.push(LogRecord::new(tick, announcement));
                    self.set_phase(game.phase, tick, &mut records);
                    self.state.current_game = game;
                }
                EventKind::BallDead { .. } => {
                    if self.state.current_game.phase == Phase::Rally {
                        let game = on_dead_ball(&self.state.current_game)?;
                        self.world.retire_ball();
                        self.state.current_game = game;
                        self.set_phase(game.phase, tick, &mut records);
                    }
                }
                _ => {}
            }
        }

        let snapshots = if self.cfg.snapshots {
            Some([self.snapshot(PlayerId::A, &records)?, self.snapshot(PlayerId::B, &records)?])
        } else {
            None
        };
        Ok(TickOutput {
            tick,
            records,
            snapshots,
        })
    }

    /// State as `player` perceives it, with this tick's events.
    pub fn snapshot(&self, player: PlayerId, records: &[LogRecord]) -> Result<Snapshot, SessionError> {
        let ball = self.world.ball;
        let pos = player.frame(ball.pos);
        let gain = if self.world.live {
            rolling_gain(ball.speed(), &self.cfg.audio)
        } else {
            0.0
        };
        let cues = binaural_cues(pos, &self.head, &self.cfg.audio, SourceKind::Rolling)?.with_gain(gain);
        let phase = if self.match_over {
            PhaseTag::MatchOver
        } else {
            self.state.current_game.phase.tag()
        };
        Ok(Snapshot {
            tick: self.world.tick - 1,
            player,
            ball_pos: pos,
            ball_vel: player.frame(ball.vel),
            ball_live: self.world.live,
            rackets: [
                player.frame(self.world.rackets[0].tip),
                player.frame(self.world.rackets[1].tip),
            ],
            phase,
            scores: self.state.current_game.score,
            games_won: self.state.games_won,
            server: self.state.current_game.server,
            cues,
            events: records
                .iter()
                .filter(|r| !r.event.is_input())
                .map(|r| LogRecord {
                    tick: r.tick,
                    event: r.event.to_frame(player),
                })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(seed: u64) -> Session {
        Session::new(SessionConfig::default(), seed).unwrap()
    }

    fn input(seq: u32, tip: Vec2) -> ClientInput {
        ClientInput {
            seq,
            client_tick: 0,
            racket_tip: tip,
            face_normal: Vec2::new(0.0, 1.0),
            tip_vel: Vec2::zero(),
            trigger_held: false,
        }
    }

    #[test]
    fn first_tick_serves() {
        let mut s = session(1);
        let out = s.tick(&[]).unwrap();
        assert_eq!(out.tick, 0);
        assert!(out.records.iter().any(|r| matches!(r.event, LogEvent::Serve { .. })));
        assert_eq!(s.match_state().current_game.phase, Phase::Rally);
        assert!(s.world().live);
    }

    #[test]
    fn b_sees_mirrored_ball() {
        let mut s = session(2);
        let out = s.tick(&[]).unwrap();
        let [a, b] = out.snapshots.unwrap();
        assert_eq!(b.ball_pos, crate::geometry::mirror(a.ball_pos));
        assert_eq!(b.to_frame(PlayerId::A).ball_pos, a.ball_pos);
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn b_input_is_mirrored_into_server_frame() {
        let mut s = session(3);
        s.tick(&[InboundInput::new(PlayerId::B, input(1, Vec2::new(0.2, -1.5)))]).unwrap();
        let r = s.world().racket(PlayerId::B);
        assert_eq!(r.tip, Vec2::new(-0.2, 1.5));
        assert_eq!(r.face_normal, Vec2::new(0.0, -1.0));
    }

    #[test]
    fn racket_is_kept_in_own_half() {
        let mut s = session(3);
        s.tick(&[InboundInput::new(PlayerId::A, input(1, Vec2::new(5.0, 1.0)))]).unwrap();
        assert_eq!(s.world().racket(PlayerId::A).tip, Vec2::new(0.61, 0.0));
    }

    #[test]
    fn stale_and_unknown_inputs_are_dropped() {
        let mut s = session(4);
        s.tick(&[InboundInput::new(PlayerId::A, input(5, Vec2::new(0.1, -1.6)))]).unwrap();
        s.tick(&[
            InboundInput::new(PlayerId::A, input(5, Vec2::new(0.3, -1.6))),
            InboundInput::new(PlayerId::A, input(2, Vec2::new(0.3, -1.6))),
            InboundInput { slot: 7, input: input(9, Vec2::zero()) },
        ])
        .unwrap();
        assert_eq!(s.world().racket(PlayerId::A).tip, Vec2::new(0.1, -1.6));
        let c = s.input_counters();
        assert_eq!((c.applied, c.stale, c.unknown_player), (1, 2, 1));
    }

    #[test]
    fn latest_seq_wins_within_a_tick() {
        let mut s = session(4);
        s.tick(&[
            InboundInput::new(PlayerId::A, input(3, Vec2::new(0.3, -1.6))),
            InboundInput::new(PlayerId::A, input(4, Vec2::new(-0.3, -1.6))),
        ])
        .unwrap();
        assert_eq!(s.world().racket(PlayerId::A).tip, Vec2::new(-0.3, -1.6));
    }

    #[test]
    fn missing_input_keeps_racket() {
        let mut s = session(5);
        s.tick(&[InboundInput::new(PlayerId::A, input(1, Vec2::new(0.25, -1.6)))]).unwrap();
        for _ in 0..10 {
            s.tick(&[]).unwrap();
        }
        assert_eq!(s.world().racket(PlayerId::A).tip, Vec2::new(0.25, -1.6));
    }

    #[test]
    fn degenerate_normal_is_rejected() {
        let mut s = session(5);
        let mut i = input(1, Vec2::new(0.25, -1.6));
        i.face_normal = Vec2::zero();
        s.tick(&[InboundInput::new(PlayerId::A, i)]).unwrap();
        assert_eq!(s.input_counters().invalid, 1);
        assert_eq!(s.world().racket(PlayerId::A), &RacketState::resting(PlayerId::A, &s.cfg.table));
    }

    #[test]
    fn goal_announcement_reaches_both_players() {
        // Rackets parked out of the way; the serve rolls into the server's own goal.
        let mut s = session(6);
        let park = |p: PlayerId, seq| InboundInput::new(p, input(seq, Vec2::new(0.6, -0.3)));
        let mut seq = 1;
        let mut found = None;
        for _ in 0..20_000 {
            let out = s.tick(&[park(PlayerId::A, seq), park(PlayerId::B, seq)]).unwrap();
            seq += 1;
            if out.records.iter().any(|r| matches!(r.event, LogEvent::Announcement { .. })) {
                found = Some(out);
                break;
            }
        }
        let out = found.expect("a goal eventually");
        let [a, b] = out.snapshots.unwrap();
        let ann = |s: &Snapshot| {
            s.events
                .iter()
                .find(|r| matches!(r.event, LogEvent::Announcement { .. }))
                .cloned()
        };
        assert!(ann(&a).is_some());
        assert_eq!(ann(&a), ann(&b));
    }
}
