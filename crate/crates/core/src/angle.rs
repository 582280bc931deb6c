//! Yaw angles and horizontal bearings.
//!
//! Every angle in this crate is a yaw in degrees, normalized to the
//! half-open interval `[-180, 180)`. Yaw 0 points along the room +x axis and
//! grows counter-clockwise seen from above (right-handed, z up), so +90
//! points along +y. A consequence worth remembering: for subject-relative
//! angles, positive is to the subject's *left*.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalize degrees into `[-180, 180)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// A yaw angle in degrees, kept normalized to `[-180, 180)` by construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub fn from_degrees(deg: f64) -> Angle {
        debug_assert!(deg.is_finite(), "angle must be finite, got {deg}");
        Angle(normalize_degrees(deg))
    }

    pub fn from_radians(rad: f64) -> Angle {
        Angle::from_degrees(rad.to_degrees())
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    /// Unit direction vector (cos, sin) of this yaw in the XY plane.
    pub fn direction(self) -> (f64, f64) {
        let r = self.radians();
        (r.cos(), r.sin())
    }

    /// Signed shortest rotation taking `other` to `self`, in `[-180, 180)`.
    pub fn signed_diff(self, other: Angle) -> f64 {
        normalize_degrees(self.0 - other.0)
    }

    /// Shortest angular distance to `other`, in `[0, 180]`.
    pub fn abs_diff(self, other: Angle) -> f64 {
        self.signed_diff(other).abs()
    }

    pub fn rotated(self, deg: f64) -> Angle {
        Angle::from_degrees(self.0 + deg)
    }

    /// Circular mean of a set of angles (direction of the summed unit
    /// vectors). For two angles this is the bisector of the shorter arc;
    /// e.g. the mean of +170 and -170 is -180. When the summed vector
    /// vanishes (exactly antipodal input) the result falls back to 0 by the
    /// `atan2(0, 0)` convention.
    pub fn circular_mean(angles: &[Angle]) -> Angle {
        let (s, c) = angles
            .iter()
            .fold((0.0, 0.0), |(s, c), a| (s + a.radians().sin(), c + a.radians().cos()));
        Angle::from_radians(s.atan2(c))
    }
}

impl std::fmt::Display for Angle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} deg", self.0)
    }
}

/// Bearing from `from` to `to` in the XY plane.
///
/// Fails when the horizontal separation is 1 mm or less, where the
/// direction is numerically meaningless.
pub fn bearing(from: (f64, f64), to: (f64, f64)) -> Result<Angle> {
    let dx = to.0 - from.0;
    let dy = to.1 - from.1;
    let dist = dx.hypot(dy);
    if dist <= 1.0 {
        return Err(Error::CoincidentPoints(dist));
    }
    Ok(Angle::from_radians(dy.atan2(dx)))
}
