//! Deterministic lossy, delayed link used to exercise the protocol in tests
//! and bot matches.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::TICK_HZ;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("loss rate {0} outside [0, 1)")]
    LossRate(f64),
    #[error("delay and jitter must be finite and non-negative")]
    Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkModel {
    pub one_way_delay_ms: f64,
    /// Upper bound of the uniform extra delay drawn per message.
    pub jitter_ms: f64,
    pub loss_rate: f64,
    pub seed: u64,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl LinkModel {
    pub fn ideal() -> Self {
        Self {
            one_way_delay_ms: 0.0,
            jitter_ms: 0.0,
            loss_rate: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        if !(0.0..1.0).contains(&self.loss_rate) {
            return Err(LinkError::LossRate(self.loss_rate));
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.one_way_delay_ms) || !ok(self.jitter_ms) {
            return Err(LinkError::Timing);
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

fn ms_to_ticks(ms: f64) -> u64 {
    (ms * TICK_HZ as f64 / 1000.0).round() as u64
}

/// Incremental form of [`link_deliver`]: messages go in with [`LinkSim::send`]
/// and come out of [`LinkSim::poll`] once their delivery tick is reached.
#[derive(Debug, Clone)]
pub struct LinkSim<T> {
    model: LinkModel,
    rng: ChaCha8Rng,
    in_flight: VecDeque<(u64, T)>,
    last_delivery: u64,
    sent: u64,
    dropped: u64,
}

impl<T> LinkSim<T> {
    pub fn new(model: LinkModel) -> Result<Self, LinkError> {
        model.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            model,
            in_flight: VecDeque::new(),
            last_delivery: 0,
            sent: 0,
            dropped: 0,
        })
    }

    /// Schedules `msg` sent at `tick`. Sends must be in tick order.
    pub fn send(&mut self, tick: u64, msg: T) {
        self.sent += 1;
        let lost = self.model.loss_rate > 0.0 && self.rng.random_bool(self.model.loss_rate);
        let jitter = if self.model.jitter_ms > 0.0 {
            self.rng.random_range(0.0..=self.model.jitter_ms)
        } else {
            0.0
        };
        if lost {
            self.dropped += 1;
            return;
        }
        let at = tick + ms_to_ticks(self.model.one_way_delay_ms + jitter);
        // Monotone schedule: never deliver before an earlier message.
        let at = at.max(self.last_delivery);
        self.last_delivery = at;
        self.in_flight.push_back((at, msg));
    }

    /// Messages due at or before `now`, in send order.
    pub fn poll(&mut self, now: u64) -> Vec<T> {
        let mut out = Vec::new();
        while self.in_flight.front().is_some_and(|(at, _)| *at <= now) {
            out.push(self.in_flight.pop_front().expect("front checked").1);
        }
        out
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

/// Applies `link` to a tick-ordered list of sends, returning the surviving
/// messages with their delivery ticks.
pub fn link_deliver<T>(link: &LinkModel, sent: Vec<(u64, T)>) -> Result<Vec<(u64, T)>, LinkError> {
    let mut sim = LinkSim::new(*link)?;
    let mut out = Vec::with_capacity(sent.len());
    for (tick, msg) in sent {
        sim.send(tick, msg);
    }
    while let Some((at, msg)) = sim.in_flight.pop_front() {
        out.push((at, msg));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_link_is_identity() {
        let sent: Vec<(u64, u32)> = (0..100).map(|i| (i / 3, i as u32)).collect();
        assert_eq!(link_deliver(&LinkModel::ideal(), sent.clone()).unwrap(), sent);
    }

    #[test]
    fn delay_is_rounded_to_ticks() {
        let link = LinkModel {
            one_way_delay_ms: 100.0,
            ..LinkModel::ideal()
        };
        let out = link_deliver(&link, vec![(10, 'a')]).unwrap();
        assert_eq!(out, vec![(16, 'a')]);
    }

    #[test]
    fn jitter_never_reorders() {
        let link = LinkModel {
            one_way_delay_ms: 20.0,
            jitter_ms: 80.0,
            loss_rate: 0.1,
            seed: 3,
        };
        let sent: Vec<(u64, usize)> = (0..2000).map(|i| (i as u64, i)).collect();
        let out = link_deliver(&link, sent).unwrap();
        for w in out.windows(2) {
            assert!(w[0].0 <= w[1].0 && w[0].1 < w[1].1);
        }
        for (at, i) in &out {
            assert!(*at > *i as u64);
        }
    }

    #[test]
    fn same_seed_same_schedule() {
        let link = LinkModel {
            one_way_delay_ms: 50.0,
            jitter_ms: 30.0,
            loss_rate: 0.2,
            seed: 11,
        };
        let sent: Vec<(u64, usize)> = (0..500).map(|i| (i as u64, i)).collect();
        assert_eq!(
            link_deliver(&link, sent.clone()).unwrap(),
            link_deliver(&link, sent.clone()).unwrap()
        );
        assert_ne!(
            link_deliver(&link, sent.clone()).unwrap(),
            link_deliver(&link.with_seed(12), sent).unwrap()
        );
    }

    #[test]
    fn near_total_loss_matches_rate() {
        let eps = 0.05;
        let link = LinkModel {
            loss_rate: 1.0 - eps,
            seed: 99,
            ..LinkModel::ideal()
        };
        let sent: Vec<(u64, usize)> = (0..10_000).map(|i| (i as u64, i)).collect();
        let delivered = link_deliver(&link, sent).unwrap().len() as f64 / 10_000.0;
        assert!((delivered - eps).abs() <= 0.01, "{delivered}");
    }

    #[test]
    fn rejects_bad_models() {
        let bad = LinkModel {
            loss_rate: 1.0,
            ..LinkModel::ideal()
        };
        assert_eq!(bad.validate(), Err(LinkError::LossRate(1.0)));
        let bad = LinkModel {
            jitter_ms: -1.0,
            ..LinkModel::ideal()
        };
        assert_eq!(bad.validate(), Err(LinkError::Timing));
    }

    #[test]
    fn incremental_poll_matches_batch() {
        let link = LinkModel {
            one_way_delay_ms: 40.0,
            jitter_ms: 25.0,
            loss_rate: 0.05,
            seed: 5,
        };
        let batch = link_deliver(&link, (0..300u64).map(|i| (i, i)).collect()).unwrap();
        let mut sim = LinkSim::new(link).unwrap();
        let mut got = Vec::new();
        for now in 0..400u64 {
            if now < 300 {
                sim.send(now, now);
            }
            got.extend(sim.poll(now).into_iter().map(|m| (now, m)));
        }
        assert_eq!(got, batch);
    }
}
