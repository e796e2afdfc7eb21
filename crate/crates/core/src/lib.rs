//! Deterministic engine for an audio-only showdown table game.

pub mod agent;
pub mod audio;
pub mod config;
pub mod geometry;
pub mod harness;
pub mod log;
pub mod metrics;
pub mod netcode;
pub mod physics;
pub mod rules;
pub mod scalar;
pub mod study;

pub use geometry::{PlayerId, Zone};
pub use scalar::Scalar;

/// Scalar used by the simulation.
pub type Real = f64;
pub type Vec2 = geometry::Vec2<Real>;
pub type TableGeometry = geometry::TableGeometry<Real>;
pub type HeadPose = geometry::HeadPose<Real>;
pub type PhysicsConfig = physics::PhysicsConfig<Real>;
pub type BallState = physics::BallState<Real>;
pub type RacketState = physics::RacketState<Real>;
pub type World = physics::World<Real>;
pub type CueParams = audio::CueParams<Real>;
pub type BinauralFrame = audio::BinauralFrame<Real>;
