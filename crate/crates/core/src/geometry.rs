//! Table coordinate system, zones and unit conversions.
//!
//! The server frame has its origin at the table center. `x` is lateral and
//! grows toward player A's right hand; `y` is longitudinal and grows toward
//! player B. Player A therefore stands at `y = -length/2` and B at
//! `y = +length/2`. Each player's own view of the table is the server frame
//! for A and its 180° rotation ([`mirror`]) for B, so in its own frame every
//! player stands at the negative-`y` end.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("position ({x}, {y}) lies outside the table")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid table geometry: {0}")]
    InvalidTable(&'static str),
    #[error("invalid head pose: {0}")]
    InvalidHeadPose(&'static str),
}

/// A point or velocity on the table plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Vec2<S> {
    #[inline]
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero())
    }

    #[inline]
    pub fn dot(self, other: Self) -> S {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> S {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > S::epsilon() && n.is_finite() {
            Some(self * (S::one() / n))
        } else {
            None
        }
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rescales the vector so its length does not exceed `max`.
    pub fn clamp_norm(self, max: S) -> Self {
        let n = self.norm();
        if n > max {
            self * (max / n)
        } else {
            self
        }
    }

    pub fn cast<T: Scalar>(self) -> Vec2<T> {
        Vec2::new(T::of(self.x.as_f64()), T::of(self.y.as_f64()))
    }
}

impl<S: Scalar> Add for Vec2<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<S: Scalar> AddAssign for Vec2<S> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl<S: Scalar> Sub for Vec2<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<S: Scalar> SubAssign for Vec2<S> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl<S: Scalar> Mul<S> for Vec2<S> {
    type Output = Self;
    #[inline]
    fn mul(self, k: S) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl<S: Scalar> Neg for Vec2<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

// On the wire and in logs a Vec2 is a two-element array `[x, y]`.
impl<S: Serialize> Serialize for Vec2<S> {
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        (&self.x, &self.y).serialize(serializer)
    }
}

impl<'de, S: Scalar + Deserialize<'de>> Deserialize<'de> for Vec2<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (x, y) = <(S, S)>::deserialize(deserializer)?;
        let v = Vec2 { x, y };
        if !v.is_finite() {
            return Err(D::Error::custom("non-finite vector component"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Scalar> Vec3<S> {
    #[inline]
    pub fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn on_table(p: Vec2<S>) -> Self {
        Self::new(p.x, p.y, S::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> S {
        self.dot(self).sqrt()
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

/// One of the two players. A stands at the negative-`y` end of the server frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlayerId {
    A,
    B,
}

impl PlayerId {
    pub const BOTH: [PlayerId; 2] = [PlayerId::A, PlayerId::B];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            PlayerId::A => 0,
            PlayerId::B => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(PlayerId::A),
            1 => Some(PlayerId::B),
            _ => None,
        }
    }

    #[inline]
    pub fn opponent(self) -> Self {
        match self {
            PlayerId::A => PlayerId::B,
            PlayerId::B => PlayerId::A,
        }
    }

    /// Maps a server-frame vector into this player's own frame. The map is an
    /// involution, so the same call converts back.
    #[inline]
    pub fn frame<S: Scalar>(self, v: Vec2<S>) -> Vec2<S> {
        match self {
            PlayerId::A => v,
            PlayerId::B => mirror(v),
        }
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayerId::A => f.write_str("A"),
            PlayerId::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
#[serde(deny_unknown_fields, default)]
pub struct TableGeometry<S> {
    pub length_m: S,
    pub width_m: S,
    #[serde(rename = "restitution")]
    pub wall_restitution: S,
    pub goal_width_m: S,
    pub ball_radius_m: S,
}

impl<S: Scalar> Default for TableGeometry<S> {
    fn default() -> Self {
        Self {
            length_m: S::of(3.66),
            width_m: S::of(1.22),
            wall_restitution: S::of(0.9),
            goal_width_m: S::of(0.30),
            ball_radius_m: S::of(0.03),
        }
    }
}

impl<S: Scalar> TableGeometry<S> {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let finite = [
            self.length_m,
            self.width_m,
            self.wall_restitution,
            self.goal_width_m,
            self.ball_radius_m,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(GeometryError::InvalidTable("non-finite dimension"));
        }
        if self.length_m <= S::zero() || self.width_m <= S::zero() {
            return Err(GeometryError::InvalidTable("length and width must be positive"));
        }
        if self.goal_width_m <= S::zero() || self.goal_width_m >= self.width_m {
            return Err(GeometryError::InvalidTable("goal width must lie in (0, width)"));
        }
        if self.wall_restitution <= S::zero() || self.wall_restitution > S::one() {
            return Err(GeometryError::InvalidTable("restitution must lie in (0, 1]"));
        }
        let two = S::of(2.0);
        if self.ball_radius_m <= S::zero()
            || two * self.ball_radius_m >= self.width_m
            || two * self.ball_radius_m >= self.length_m
        {
            return Err(GeometryError::InvalidTable("ball radius out of range"));
        }
        Ok(())
    }

    #[inline]
    pub fn half_length(&self) -> S {
        self.length_m * S::of(0.5)
    }

    #[inline]
    pub fn half_width(&self) -> S {
        self.width_m * S::of(0.5)
    }

    #[inline]
    pub fn half_goal(&self) -> S {
        self.goal_width_m * S::of(0.5)
    }

    /// Server-frame `y` of the end wall behind `player`.
    pub fn end_y(&self, player: PlayerId) -> S {
        match player {
            PlayerId::A => -self.half_length(),
            PlayerId::B => self.half_length(),
        }
    }

    /// Whether `pos` lies on the table surface (boundary included).
    pub fn contains(&self, pos: Vec2<S>) -> bool {
        pos.is_finite() && pos.x.abs() <= self.half_width() && pos.y.abs() <= self.half_length()
    }

    /// Clamps a ball center into the region it may occupy without overlapping a wall.
    pub fn clamp_ball(&self, pos: Vec2<S>) -> Vec2<S> {
        let hx = self.half_width() - self.ball_radius_m;
        let hy = self.half_length() - self.ball_radius_m;
        Vec2::new(pos.x.max(-hx).min(hx), pos.y.max(-hy).min(hy))
    }

    /// The half of the table `pos` lies on. The center line belongs to A.
    pub fn half_of(&self, pos: Vec2<S>) -> PlayerId {
        if pos.y <= S::zero() {
            PlayerId::A
        } else {
            PlayerId::B
        }
    }
}

/// Table areas relative to one player: thirds of the width on the near half,
/// halves of the width on the far half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    NearLeft,
    NearMiddle,
    NearRight,
    FarLeft,
    FarRight,
}

impl Zone {
    pub const NEAR: [Zone; 3] = [Zone::NearLeft, Zone::NearMiddle, Zone::NearRight];
    pub const FAR: [Zone; 2] = [Zone::FarLeft, Zone::FarRight];

    pub fn is_near(self) -> bool {
        matches!(self, Zone::NearLeft | Zone::NearMiddle | Zone::NearRight)
    }

    pub fn lateral(self) -> Lateral {
        match self {
            Zone::NearLeft | Zone::FarLeft => Lateral::Left,
            Zone::NearMiddle => Lateral::Middle,
            Zone::NearRight | Zone::FarRight => Lateral::Right,
        }
    }

    /// Zone center in the owning player's frame.
    pub fn center<S: Scalar>(self, table: &TableGeometry<S>) -> Vec2<S> {
        let w = table.width_m;
        let ny = -table.half_length() * S::of(0.5);
        let fy = table.half_length() * S::of(0.5);
        match self {
            Zone::NearLeft => Vec2::new(-w / S::of(3.0), ny),
            Zone::NearMiddle => Vec2::new(S::zero(), ny),
            Zone::NearRight => Vec2::new(w / S::of(3.0), ny),
            Zone::FarLeft => Vec2::new(-w / S::of(4.0), fy),
            Zone::FarRight => Vec2::new(w / S::of(4.0), fy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lateral {
    Left,
    Middle,
    Right,
}

/// Classifies a server-frame position into `player`'s zones.
///
/// Boundary points go to the lower-index zone: the center line counts as
/// near, and a lateral boundary counts toward the left.
pub fn zone_of<S: Scalar>(
    pos: Vec2<S>,
    player: PlayerId,
    table: &TableGeometry<S>,
) -> Result<Zone, GeometryError> {
    if !table.contains(pos) {
        return Err(GeometryError::OutOfBounds {
            x: pos.x.as_f64(),
            y: pos.y.as_f64(),
        });
    }
    let own = player.frame(pos);
    if own.y <= S::zero() {
        let third = table.width_m / S::of(6.0);
        Ok(if own.x <= -third {
            Zone::NearLeft
        } else if own.x <= third {
            Zone::NearMiddle
        } else {
            Zone::NearRight
        })
    } else if own.x <= S::zero() {
        Ok(Zone::FarLeft)
    } else {
        Ok(Zone::FarRight)
    }
}

/// 180° rotation about the table center: the map between the two players' frames.
#[inline]
pub fn mirror<S: Scalar>(v: Vec2<S>) -> Vec2<S> {
    Vec2::new(-v.x, -v.y)
}

#[inline]
pub fn kmh_to_mps<S: Scalar>(v: S) -> S {
    v / S::of(3.6)
}

#[inline]
pub fn mps_to_kmh<S: Scalar>(v: S) -> S {
    v * S::of(3.6)
}

/// Listener head position and orientation. `z` is height above the table surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadPose<S> {
    pub position: Vec3<S>,
    pub forward: Vec3<S>,
    pub up: Vec3<S>,
}

impl<S: Scalar> HeadPose<S> {
    pub fn new(position: Vec3<S>, forward: Vec3<S>, up: Vec3<S>) -> Result<Self, GeometryError> {
        let pose = Self {
            position,
            forward,
            up,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let tol = S::of(1e-6);
        let finite = [self.position, self.forward, self.up]
            .iter()
            .all(|v| v.x.is_finite() && v.y.is_finite() && v.z.is_finite());
        if !finite {
            return Err(GeometryError::InvalidHeadPose("non-finite component"));
        }
        if (self.forward.norm() - S::one()).abs() > tol || (self.up.norm() - S::one()).abs() > tol {
            return Err(GeometryError::InvalidHeadPose("forward and up must be unit length"));
        }
        if self.forward.dot(self.up).abs() > tol {
            return Err(GeometryError::InvalidHeadPose("forward and up must be orthogonal"));
        }
        Ok(())
    }

    /// Interaural axis pointing out of the right ear.
    pub fn right(&self) -> Vec3<S> {
        self.forward.cross(self.up)
    }

    /// A standing player looking down the table from behind their own end,
    /// expressed in that player's own frame.
    pub fn standing(table: &TableGeometry<S>) -> Self {
        Self {
            position: Vec3::new(S::zero(), -table.half_length() - S::of(0.25), S::of(0.35)),
            forward: Vec3::new(S::zero(), S::one(), S::zero()),
            up: Vec3::new(S::zero(), S::zero(), S::one()),
        }
    }
}
