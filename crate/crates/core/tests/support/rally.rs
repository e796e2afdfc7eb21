//! A hand-scripted ten-event rally and its hand-computed counters.

use showdown_core::log::{LogEvent, LogRecord};
use showdown_core::metrics::{PlayerStats, ZoneCounts};
use showdown_core::rules::Announcement;
use showdown_core::{PlayerId, Vec2};

pub fn records() -> Vec<LogRecord> {
    let r = LogRecord::new;
    vec![
        // A serves: the ball rolls from the centre toward A.
        r(0, LogEvent::Serve {
            server: PlayerId::A,
            pos: Vec2::zero(),
            vel: Vec2::new(0.0, -2.0),
            serves_remaining: 1,
        }),
        // A returns from its left third.
        r(40, LogEvent::RacketHit {
            player: PlayerId::A,
            pos: Vec2::new(-0.35, -1.68),
            out_vel: Vec2::new(1.0, 6.0),
        }),
        r(55, LogEvent::HalfCross { toward: PlayerId::B }),
        // Side wall: no end reached, nothing counted.
        r(60, LogEvent::WallHit {
            pos: Vec2::new(0.58, 0.5),
            speed: 6.0,
        }),
        // B returns from its middle third; A's shot was answered, so A earns a rally.
        r(75, LogEvent::RacketHit {
            player: PlayerId::B,
            pos: Vec2::new(0.0, 1.68),
            out_vel: Vec2::new(0.5, -7.0),
        }),
        r(90, LogEvent::HalfCross { toward: PlayerId::A }),
        // A returns from its right third; B earns a rally.
        r(105, LogEvent::RacketHit {
            player: PlayerId::A,
            pos: Vec2::new(0.4, -1.68),
            out_vel: Vec2::new(-0.2, 8.0),
        }),
        r(115, LogEvent::HalfCross { toward: PlayerId::B }),
        // Goal in B's pocket, near the centre: on target, and B misses (its middle).
        r(130, LogEvent::GoalScored {
            scorer: PlayerId::A,
            pos: Vec2::new(0.05, 1.80),
        }),
        r(130, LogEvent::from(Announcement {
            scorer: PlayerId::A,
            score: [2, 0],
        })),
    ]
}

pub fn expected() -> [PlayerStats; 2] {
    let a = PlayerStats {
        goals: 1,
        shots_on_target: 1,
        hits: 2,
        misses: 0,
        zone_hits: ZoneCounts { left: 1, middle: 0, right: 1 },
        rallies: 1,
        balls_sent: 2,
        balls_approaching: 1,
        ..PlayerStats::default()
    };
    let b = PlayerStats {
        hits: 1,
        misses: 1,
        zone_hits: ZoneCounts { left: 0, middle: 1, right: 0 },
        zone_misses: ZoneCounts { left: 0, middle: 1, right: 0 },
        rallies: 1,
        balls_sent: 1,
        balls_approaching: 2,
        ..PlayerStats::default()
    };
    [a, b]
}
