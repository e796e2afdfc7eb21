//! Per-listener binaural cue synthesis.
//!
//! The engine does not render audio. For every sound it emits the parameters
//! a client needs to place it: interaural time difference from a spherical
//! head (Woodworth), an interaural level difference proportional to the sine
//! of the azimuth, and inverse-distance attenuation clamped in the near field.
//! Clients turn a [`BinauralFrame`] into per-ear gain and delay.
//!
//! The module also decodes straight-line ball routes from cue streams, which
//! is how localization accuracy is measured without a listener.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geometry::{mps_to_kmh, HeadPose, PlayerId, TableGeometry, Vec2, Vec3, Zone};
use crate::physics::{EventKind, PhysicsEvent};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AudioError {
    #[error(transparent)]
    HeadPose(#[from] crate::geometry::GeometryError),
    #[error("listener {0} has no head pose")]
    MissingHeadPose(PlayerId),
    #[error("cue stream has {0} frames; at least 4 are needed")]
    StreamTooShort(usize),
    #[error("cue stream shows no distance trend")]
    NoTrend,
    #[error("ball track has no sample for tick {0}")]
    TrackGap(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Rolling,
    WallHit,
    RacketHit,
    Goal,
    Announcement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RollingGainModel {
    /// `gain = speed_kmh / knee` below the knee.
    Linear,
    /// `gain = 0.9^(knee - speed_kmh)` below the knee, silent at rest.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
#[serde(deny_unknown_fields, default)]
pub struct CueParams<S> {
    pub head_radius_m: S,
    pub sound_speed_mps: S,
    pub ild_slope_db: S,
    pub near_clamp_m: S,
    pub rolling_knee_kmh: S,
    pub rolling_model: RollingGainModel,
}

impl<S: Scalar> Default for CueParams<S> {
    fn default() -> Self {
        Self {
            head_radius_m: S::of(0.0875),
            sound_speed_mps: S::of(343.0),
            ild_slope_db: S::of(10.0),
            near_clamp_m: S::of(0.2),
            rolling_knee_kmh: S::of(10.0),
            rolling_model: RollingGainModel::Linear,
        }
    }
}

impl<S: Scalar> CueParams<S> {
    /// Largest ITD the head model produces, reached at ±90°.
    pub fn max_itd(&self) -> S {
        woodworth_itd(S::FRAC_PI_2(), self)
    }
}

/// Cue packet for one sound as heard by one listener.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinauralFrame<S> {
    /// Radians in the head frame, positive to the right.
    pub azimuth: S,
    pub elevation: S,
    pub distance: S,
    /// Seconds, positive when the right ear leads.
    pub itd: S,
    /// dB, positive when the right ear is louder.
    pub ild_db: S,
    pub left_gain: S,
    pub right_gain: S,
    pub source_kind: SourceKind,
}

impl<S: Scalar> BinauralFrame<S> {
    /// Non-spatial frame used for sounds both players hear identically.
    pub fn common(kind: SourceKind) -> Self {
        Self {
            azimuth: S::zero(),
            elevation: S::zero(),
            distance: S::zero(),
            itd: S::zero(),
            ild_db: S::zero(),
            left_gain: S::one(),
            right_gain: S::one(),
            source_kind: kind,
        }
    }

    pub fn with_gain(mut self, g: S) -> Self {
        self.left_gain *= g;
        self.right_gain *= g;
        self
    }
}

#[derive(Serialize, Deserialize)]
struct FrameWire<S> {
    az: S,
    el: S,
    dist: S,
    itd_us: S,
    ild_db: S,
    gl: S,
    gr: S,
    kind: SourceKind,
}

impl<S: Scalar + Serialize> Serialize for BinauralFrame<S> {
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        FrameWire {
            az: self.azimuth,
            el: self.elevation,
            dist: self.distance,
            itd_us: self.itd * S::of(1e6),
            ild_db: self.ild_db,
            gl: self.left_gain,
            gr: self.right_gain,
            kind: self.source_kind,
        }
        .serialize(serializer)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for BinauralFrame<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let w = FrameWire::<S>::deserialize(deserializer)?;
        Ok(Self {
            azimuth: w.az,
            elevation: w.el,
            distance: w.dist,
            itd: w.itd_us / S::of(1e6),
            ild_db: w.ild_db,
            left_gain: w.gl,
            right_gain: w.gr,
            source_kind: w.kind,
        })
    }
}

/// Woodworth spherical-head ITD for a lateral angle in `[-π/2, π/2]`.
pub fn woodworth_itd<S: Scalar>(lateral: S, params: &CueParams<S>) -> S {
    params.head_radius_m / params.sound_speed_mps * (lateral + lateral.sin())
}

/// Inverts [`woodworth_itd`]: the lateral angle whose ITD magnitude is `itd`.
/// Values beyond the model's range saturate at ±π/2.
pub fn lateral_from_itd<S: Scalar>(itd: S, params: &CueParams<S>) -> S {
    let scale = params.sound_speed_mps / params.head_radius_m;
    let target = (itd.abs() * scale).min(S::FRAC_PI_2() + S::one());
    // theta + sin(theta) is increasing on [0, π/2]; Newton from the linear guess.
    let mut theta = (target * S::of(0.5)).min(S::FRAC_PI_2());
    for _ in 0..30 {
        let f = theta + theta.sin() - target;
        let df = S::one() + theta.cos();
        let next = (theta - f / df).max(S::zero()).min(S::FRAC_PI_2());
        if (next - theta).abs() <= S::epsilon() {
            theta = next;
            break;
        }
        theta = next;
    }
    if itd < S::zero() {
        -theta
    } else {
        theta
    }
}

/// Cues for a table-height source as heard from `head`.
///
/// A source at the head center is clamped to the near-field distance with
/// azimuth 0.
pub fn binaural_cues<S: Scalar>(
    source: Vec2<S>,
    head: &HeadPose<S>,
    params: &CueParams<S>,
    kind: SourceKind,
) -> Result<BinauralFrame<S>, AudioError> {
    head.validate()?;
    let rel = Vec3::on_table(source).sub(head.position);
    let range = rel.norm();
    let (azimuth, elevation) = if range <= S::of(1e-12) {
        (S::zero(), S::zero())
    } else {
        let f = rel.dot(head.forward);
        let r = rel.dot(head.right());
        let u = rel.dot(head.up);
        (r.atan2(f), u.atan2(f.hypot(r)))
    };
    let sin_az = azimuth.sin();
    // Front/back folded onto the lateral angle; computed on the magnitude so
    // the cue is exactly antisymmetric in azimuth.
    let lateral = sin_az.abs().min(S::one()).asin();
    let itd_mag = woodworth_itd(lateral, params);
    let ild_mag = params.ild_slope_db * sin_az.abs();
    let (itd, ild_db) = if sin_az < S::zero() {
        (-itd_mag, -ild_mag)
    } else {
        (itd_mag, ild_mag)
    };

    let distance = range.max(params.near_clamp_m);
    let g = params.near_clamp_m / distance;
    let quiet = S::of(10.0).powf(-ild_mag / S::of(20.0));
    let (left_gain, right_gain) = if ild_db >= S::zero() {
        (g * quiet, g)
    } else {
        (g, g * quiet)
    };
    Ok(BinauralFrame {
        azimuth,
        elevation,
        distance,
        itd,
        ild_db,
        left_gain,
        right_gain,
        source_kind: kind,
    })
}

/// Loudness of the rolling sound at a given ball speed (m/s).
pub fn rolling_gain<S: Scalar>(speed: S, params: &CueParams<S>) -> S {
    let kmh = mps_to_kmh(speed.max(S::zero()));
    let knee = params.rolling_knee_kmh;
    if kmh >= knee {
        return S::one();
    }
    if kmh <= S::zero() {
        return S::zero();
    }
    match params.rolling_model {
        RollingGainModel::Linear => kmh / knee,
        RollingGainModel::Geometric => S::of(0.9).powf(knee - kmh),
    }
}

/// One sample of the authoritative ball track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint<S> {
    pub tick: u64,
    pub pos: Vec2<S>,
    pub vel: Vec2<S>,
}

/// A sound-producing occurrence: a physics event or a shared announcement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SoundEvent<S> {
    Physics(PhysicsEvent<S>),
    Announcement { tick: u64 },
}

impl<S> SoundEvent<S> {
    pub fn tick(&self) -> u64 {
        match self {
            SoundEvent::Physics(e) => e.tick,
            SoundEvent::Announcement { tick } => *tick,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Listener<S> {
    pub player: PlayerId,
    /// Head pose in the listener's own frame.
    pub head: Option<HeadPose<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedFrame<S> {
    pub tick: u64,
    pub frame: BinauralFrame<S>,
}

/// Cue stream for one listener.
///
/// Every tick with an audible rolling ball yields a `Rolling` frame; every
/// wall or racket contact yields a spatial frame at the contact point. Goals
/// and announcements yield the same non-spatial frame for both listeners.
/// Positions are taken into the listener's own frame before cue synthesis.
pub fn render_listener_stream<S: Scalar>(
    events: &[SoundEvent<S>],
    track: &[TrackPoint<S>],
    listener: &Listener<S>,
    params: &CueParams<S>,
) -> Result<Vec<TimedFrame<S>>, AudioError> {
    let head = listener
        .head
        .ok_or(AudioError::MissingHeadPose(listener.player))?;
    head.validate()?;
    let (first, last) = match (track.first(), track.last()) {
        (Some(f), Some(l)) => (f.tick, l.tick),
        _ => (u64::MAX, 0),
    };
    if let Some(e) = events.iter().find(|e| e.tick() < first || e.tick() > last) {
        return Err(AudioError::TrackGap(e.tick()));
    }

    let own = |p: Vec2<S>| listener.player.frame(p);
    let mut out = Vec::with_capacity(track.len() + events.len());
    let mut ev = events.iter().peekable();
    for point in track {
        let gain = rolling_gain(point.vel.norm(), params);
        if gain > S::zero() {
            let frame = binaural_cues(own(point.pos), &head, params, SourceKind::Rolling)?;
            out.push(TimedFrame {
                tick: point.tick,
                frame: frame.with_gain(gain),
            });
        }
        while let Some(e) = ev.next_if(|e| e.tick() <= point.tick) {
            let frame = match e {
                SoundEvent::Physics(p) => match p.kind {
                    EventKind::WallHit { pos, .. } => {
                        Some(binaural_cues(own(pos), &head, params, SourceKind::WallHit)?)
                    }
                    EventKind::RacketHit { pos, .. } => {
                        Some(binaural_cues(own(pos), &head, params, SourceKind::RacketHit)?)
                    }
                    EventKind::GoalScored { .. } => Some(BinauralFrame::common(SourceKind::Goal)),
                    _ => None,
                },
                SoundEvent::Announcement { .. } => {
                    Some(BinauralFrame::common(SourceKind::Announcement))
                }
            };
            if let Some(frame) = frame {
                out.push(TimedFrame {
                    tick: e.tick(),
                    frame,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Away from the listener, near side to far side.
    Departure,
    /// Toward the listener, far side to near side.
    Arrival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RouteLabel {
    pub start_zone: Zone,
    pub end_zone: Zone,
    pub direction: Direction,
}

impl RouteLabel {
    /// The six routes of one direction class: three near areas × two far areas.
    pub fn all(direction: Direction) -> [RouteLabel; 6] {
        let mut routes = [RouteLabel {
            start_zone: Zone::NearLeft,
            end_zone: Zone::FarLeft,
            direction,
        }; 6];
        let mut i = 0;
        for near in Zone::NEAR {
            for far in Zone::FAR {
                routes[i] = match direction {
                    Direction::Departure => RouteLabel {
                        start_zone: near,
                        end_zone: far,
                        direction,
                    },
                    Direction::Arrival => RouteLabel {
                        start_zone: far,
                        end_zone: near,
                        direction,
                    },
                };
                i += 1;
            }
        }
        routes
    }

    pub fn near_zone(&self) -> Zone {
        match self.direction {
            Direction::Departure => self.start_zone,
            Direction::Arrival => self.end_zone,
        }
    }

    pub fn far_zone(&self) -> Zone {
        match self.direction {
            Direction::Departure => self.end_zone,
            Direction::Arrival => self.start_zone,
        }
    }
}

fn near_zone_at<S: Scalar>(x: S, table: &TableGeometry<S>) -> Zone {
    let third = table.width_m / S::of(6.0);
    if x <= -third {
        Zone::NearLeft
    } else if x <= third {
        Zone::NearMiddle
    } else {
        Zone::NearRight
    }
}

fn far_zone_at<S: Scalar>(x: S) -> Zone {
    if x <= S::zero() {
        Zone::FarLeft
    } else {
        Zone::FarRight
    }
}

/// Estimated lateral offset of a source from the listener's midline, using
/// only the binaural cues and the perceived range.
fn lateral_estimate<S: Scalar>(frame: &BinauralFrame<S>, params: &CueParams<S>) -> S {
    let from_itd = lateral_from_itd(frame.itd, params).sin();
    let from_ild = (frame.ild_db / params.ild_slope_db).max(-S::one()).min(S::one());
    let sin_az = (from_itd + from_ild) * S::of(0.5);
    frame.distance * frame.elevation.cos() * sin_az
}

fn mean<S: Scalar>(xs: impl Iterator<Item = S>) -> S {
    let mut sum = S::zero();
    let mut n = 0usize;
    for x in xs {
        sum += x;
        n += 1;
    }
    sum / S::of(n as f64)
}

/// Decodes a straight-line route from one trial's cue stream.
///
/// Direction comes from the distance trend between the first and last
/// quartiles. Lateral offsets are estimated per frame from ITD and ILD, averaged
/// over each end quartile and extrapolated linearly to the stream's endpoints,
/// which are then binned into near thirds and far halves.
pub fn classify_route<S: Scalar>(
    frames: &[BinauralFrame<S>],
    table: &TableGeometry<S>,
    params: &CueParams<S>,
) -> Result<RouteLabel, AudioError> {
    let n = frames.len();
    if n < 4 {
        return Err(AudioError::StreamTooShort(n));
    }
    let q = n / 4;
    let head = &frames[..q];
    let tail = &frames[n - q..];

    let d_head = mean(head.iter().map(|f| f.distance));
    let d_tail = mean(tail.iter().map(|f| f.distance));
    let trend = d_tail - d_head;
    if trend.abs() <= S::of(1e-9) * d_head.max(S::one()) {
        return Err(AudioError::NoTrend);
    }
    let direction = if trend > S::zero() {
        Direction::Departure
    } else {
        Direction::Arrival
    };

    let x_head = mean(head.iter().map(|f| lateral_estimate(f, params)));
    let x_tail = mean(tail.iter().map(|f| lateral_estimate(f, params)));
    // Quartile means sit at the quartile centers; extrapolate to frames 0 and n-1.
    let c_head = S::of((q - 1) as f64 * 0.5);
    let c_tail = S::of((n - 1) as f64) - c_head;
    let slope = (x_tail - x_head) / (c_tail - c_head).max(S::one());
    let x_start = x_head - slope * c_head;
    let x_end = x_tail + slope * c_head;

    let (start_zone, end_zone) = match direction {
        Direction::Departure => (near_zone_at(x_start, table), far_zone_at(x_end)),
        Direction::Arrival => (far_zone_at(x_start), near_zone_at(x_end, table)),
    };
    Ok(RouteLabel {
        start_zone,
        end_zone,
        direction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mirror;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params() -> CueParams<f64> {
        CueParams::default()
    }

    fn head() -> HeadPose<f64> {
        HeadPose::new(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn source_ahead_is_centered() {
        let f = binaural_cues(Vec2::new(0.0, 2.0), &head(), &params(), SourceKind::Rolling).unwrap();
        assert_eq!(f.itd, 0.0);
        assert_eq!(f.ild_db, 0.0);
        assert_eq!(f.left_gain, f.right_gain);
    }

    #[test]
    fn woodworth_at_ninety_degrees() {
        let f = binaural_cues(Vec2::new(1.0, 0.0), &head(), &params(), SourceKind::Rolling).unwrap();
        assert!((f.azimuth - FRAC_PI_2).abs() < 1e-12);
        let expected = 0.0875 / 343.0 * (FRAC_PI_2 + 1.0);
        assert!((f.itd - expected).abs() < 1e-15);
        assert!((f.itd - 6.56e-4).abs() < 5e-7);
        assert!(f.right_gain > f.left_gain);
    }

    #[test]
    fn mirrored_source_negates_cues_exactly() {
        for &(x, y) in &[(0.3, 1.0), (1.7, 0.2), (0.05, -2.0), (2.0, -0.4)] {
            let l = binaural_cues(Vec2::new(-x, y), &head(), &params(), SourceKind::Rolling).unwrap();
            let r = binaural_cues(Vec2::new(x, y), &head(), &params(), SourceKind::Rolling).unwrap();
            assert_eq!(l.itd, -r.itd);
            assert_eq!(l.ild_db, -r.ild_db);
            assert_eq!(l.left_gain, r.right_gain);
        }
    }

    #[test]
    fn coincident_source_is_clamped() {
        let f = binaural_cues(Vec2::new(0.0, 0.0), &head(), &params(), SourceKind::Rolling).unwrap();
        assert_eq!(f.azimuth, 0.0);
        assert_eq!(f.distance, 0.2);
        assert_eq!(f.left_gain, 1.0);
    }

    #[test]
    fn rear_sources_fold_onto_lateral_angle() {
        let front = binaural_cues(Vec2::new(1.0, 1.0), &head(), &params(), SourceKind::Rolling).unwrap();
        let back = binaural_cues(Vec2::new(1.0, -1.0), &head(), &params(), SourceKind::Rolling).unwrap();
        assert!((front.itd - back.itd).abs() < 1e-15);
        assert!(back.azimuth > FRAC_PI_2 && back.azimuth < PI);
    }

    #[test]
    fn rolling_gain_examples() {
        let p = params();
        assert_eq!(rolling_gain(0.0, &p), 0.0);
        assert_eq!(rolling_gain(10.0 / 3.6, &p), 1.0);
        assert_eq!(rolling_gain(5.0, &p), 1.0);
        assert!((rolling_gain(5.0 / 3.6, &p) - 0.5).abs() < 1e-12);
        let g = CueParams {
            rolling_model: RollingGainModel::Geometric,
            ..p
        };
        assert!((rolling_gain(9.0 / 3.6, &g) - 0.9).abs() < 1e-12);
        assert_eq!(rolling_gain(0.0, &g), 0.0);
    }

    #[test]
    fn itd_inversion_round_trips() {
        let p = params();
        for deg in [-90.0, -45.0, -5.0, 0.0, 3.0, 30.0, 89.0_f64] {
            let th = deg.to_radians();
            let back = lateral_from_itd(woodworth_itd(th, &p), &p);
            assert!((back - th).abs() < 1e-9, "{deg}");
        }
    }

    #[test]
    fn frame_wire_format() {
        let f = binaural_cues(Vec2::new(1.0, 0.0), &head(), &params(), SourceKind::WallHit).unwrap();
        let v: serde_json::Value = serde_json::to_value(f).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["az", "dist", "el", "gl", "gr", "ild_db", "itd_us", "kind"]);
        assert!((v["itd_us"].as_f64().unwrap() - 656.0).abs() < 1.0);
        assert_eq!(v["kind"], "wall_hit");
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.starts_with(r#"{"az":"#));
    }

    fn listener(player: PlayerId) -> Listener<f64> {
        Listener {
            player,
            head: Some(HeadPose::standing(&TableGeometry::default())),
        }
    }

    fn line_track(from: Vec2<f64>, to: Vec2<f64>, n: u64, speed: f64) -> Vec<TrackPoint<f64>> {
        let vel = (to - from).normalized().unwrap() * speed;
        (0..n)
            .map(|i| TrackPoint {
                tick: i,
                pos: from + (to - from) * (i as f64 / (n - 1) as f64),
                vel,
            })
            .collect()
    }

    #[test]
    fn stationary_ball_has_only_event_frames() {
        let track: Vec<_> = (0..10)
            .map(|tick| TrackPoint {
                tick,
                pos: Vec2::new(0.1, 0.2),
                vel: Vec2::zero(),
            })
            .collect();
        let events = [
            SoundEvent::Physics(PhysicsEvent {
                tick: 3,
                kind: EventKind::WallHit {
                    pos: Vec2::new(0.58, 0.2),
                    speed: 1.0,
                },
            }),
            SoundEvent::Announcement { tick: 7 },
        ];
        let frames = render_listener_stream(&events, &track, &listener(PlayerId::A), &params()).unwrap();
        let kinds: Vec<_> = frames.iter().map(|f| f.frame.source_kind).collect();
        assert_eq!(kinds, [SourceKind::WallHit, SourceKind::Announcement]);
        assert_eq!(frames[0].tick, 3);
    }

    #[test]
    fn center_line_roll_toward_listener() {
        let track = line_track(Vec2::new(0.0, 1.5), Vec2::new(0.0, -1.5), 60, 3.0);
        let frames = render_listener_stream(&[], &track, &listener(PlayerId::A), &params()).unwrap();
        assert_eq!(frames.len(), 60);
        for w in frames.windows(2) {
            assert!(w[0].frame.itd.abs() < 1e-12);
            assert!(w[1].frame.left_gain >= w[0].frame.left_gain);
            assert!(w[1].frame.right_gain >= w[0].frame.right_gain);
        }
    }

    #[test]
    fn b_hears_the_mirrored_world() {
        let track = line_track(Vec2::new(0.3, -1.0), Vec2::new(0.3, 1.0), 40, 2.0);
        let a = render_listener_stream(&[], &track, &listener(PlayerId::A), &params()).unwrap();
        let b = render_listener_stream(&[], &track, &listener(PlayerId::B), &params()).unwrap();
        let a_az: Vec<f64> = a.iter().map(|f| f.frame.azimuth).collect();
        let b_az: Vec<f64> = b.iter().map(|f| f.frame.azimuth).collect();
        let expected: Vec<f64> = a_az.iter().rev().map(|z| -z).collect();
        for (got, want) in b_az.iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12);
        }

        // B listening to a track equals A listening to the mirrored track.
        let mirrored: Vec<_> = track
            .iter()
            .map(|p| TrackPoint {
                pos: mirror(p.pos),
                vel: mirror(p.vel),
                ..*p
            })
            .collect();
        let a_m = render_listener_stream(&[], &mirrored, &listener(PlayerId::A), &params()).unwrap();
        assert_eq!(a_m, b);
    }

    #[test]
    fn missing_head_pose_is_an_error() {
        let l = Listener {
            player: PlayerId::B,
            head: None,
        };
        assert_eq!(
            render_listener_stream::<f64>(&[], &[], &l, &params()),
            Err(AudioError::MissingHeadPose(PlayerId::B))
        );
    }

    #[test]
    fn classify_requires_trend_and_length() {
        let t = TableGeometry::default();
        let h = HeadPose::standing(&t);
        let f = binaural_cues(Vec2::new(0.0, 0.0), &h, &params(), SourceKind::Rolling).unwrap();
        assert_eq!(classify_route(&[f; 3], &t, &params()), Err(AudioError::StreamTooShort(3)));
        assert_eq!(classify_route(&[f; 12], &t, &params()), Err(AudioError::NoTrend));
    }

    #[test]
    fn route_sets_have_six_members() {
        let dep = RouteLabel::all(Direction::Departure);
        assert!(dep.iter().all(|r| r.start_zone.is_near() && !r.end_zone.is_near()));
        let arr = RouteLabel::all(Direction::Arrival);
        assert!(arr.iter().all(|r| !r.start_zone.is_near() && r.end_zone.is_near()));
        let mut all: Vec<_> = dep.iter().chain(arr.iter()).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn frame_invariants(x in -3.0..3.0_f64, y in -3.0..3.0_f64) {
                let t = TableGeometry::default();
                let h = HeadPose::standing(&t);
                let f = binaural_cues(Vec2::new(x, y), &h, &params(), SourceKind::Rolling).unwrap();
                let s = f.azimuth.sin();
                prop_assert_eq!(f.itd.signum() * (s != 0.0) as i32 as f64, s.signum() * (s != 0.0) as i32 as f64);
                prop_assert_eq!(f.ild_db.signum() * (s != 0.0) as i32 as f64, s.signum() * (s != 0.0) as i32 as f64);
                prop_assert!((0.0..=1.0).contains(&f.left_gain));
                prop_assert!((0.0..=1.0).contains(&f.right_gain));
                prop_assert!(f.distance >= 0.2);
                prop_assert!(f.itd.abs() <= params().max_itd() + 1e-15);
            }

            #[test]
            fn itd_is_odd_in_azimuth(az in -PI..PI) {
                let p = Vec2::new(az.sin() * 1.5, az.cos() * 1.5);
                let q = Vec2::new(-p.x, p.y);
                let a = binaural_cues(p, &head(), &params(), SourceKind::Rolling).unwrap();
                let b = binaural_cues(q, &head(), &params(), SourceKind::Rolling).unwrap();
                prop_assert_eq!(a.itd, -b.itd);
                prop_assert_eq!(a.ild_db, -b.ild_db);
            }

            #[test]
            fn attenuation_is_monotone_in_distance(az in -PI..PI, d1 in 0.2..5.0_f64, dd in 0.0..5.0_f64) {
                let at = |d: f64| binaural_cues(Vec2::new(az.sin() * d, az.cos() * d), &head(), &params(), SourceKind::Rolling).unwrap();
                let near = at(d1);
                let far = at(d1 + dd);
                prop_assert!(far.left_gain <= near.left_gain + 1e-12);
                prop_assert!(far.right_gain <= near.right_gain + 1e-12);
            }

            #[test]
            fn rotating_source_and_head_together_leaves_cues_unchanged(x in -0.6..0.6_f64, y in -1.8..1.8_f64) {
                let t = TableGeometry::<f64>::default();
                let h = HeadPose::standing(&t);
                let rotated = HeadPose {
                    position: Vec3::new(-h.position.x, -h.position.y, h.position.z),
                    forward: Vec3::new(-h.forward.x, -h.forward.y, h.forward.z),
                    up: h.up,
                };
                let a = binaural_cues(Vec2::new(x, y), &h, &params(), SourceKind::Rolling).unwrap();
                let b = binaural_cues(mirror(Vec2::new(x, y)), &rotated, &params(), SourceKind::Rolling).unwrap();
                prop_assert!((a.itd - b.itd).abs() < 1e-15);
                prop_assert!((a.distance - b.distance).abs() < 1e-12);
            }

            #[test]
            fn rolling_gain_shape(a in 0.0..20.0_f64, b in 0.0..20.0_f64) {
                let p = params();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(rolling_gain(lo, &p) <= rolling_gain(hi, &p));
                prop_assert!((0.0..=1.0).contains(&rolling_gain(a, &p)));
                // Lipschitz with slope 3.6/knee: continuous everywhere.
                prop_assert!((rolling_gain(a, &p) - rolling_gain(b, &p)).abs() <= 0.36 * (a - b).abs() + 1e-12);
            }
        }
    }
}
