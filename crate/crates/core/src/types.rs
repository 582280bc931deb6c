//! Shared data types for point clouds, detections and sensor poses.
//!
//! All lengths are millimetres in the room frame: z up from the floor,
//! x/y horizontal. Angles follow the convention in [`crate::angle`].

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 3D point in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Point3 {
        Point3 { x, y, z }
    }

    pub fn xy(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dist(&self, o: &Point3) -> f64 {
        self.dist_sq(o).sqrt()
    }

    pub fn dist_sq(&self, o: &Point3) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        dx * dx + dy * dy + dz * dz
    }

    pub fn dist_xy(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }

    /// Bit pattern of the coordinates, used for exact repeat detection.
    pub(crate) fn bits(&self) -> [u64; 3] {
        [self.x.to_bits(), self.y.to_bits(), self.z.to_bits()]
    }
}

/// Per-subject head detection reported by the sensor firmware.
///
/// `cx`/`cy` locate the subject's center of gravity in the room frame and
/// anchor the crop cylinder. `z1`/`z2` are the two sensors' independent
/// estimates of the head height; their mean is the built-in joint estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectDetection {
    #[serde(rename = "id")]
    pub subject_id: String,
    pub cx: f64,
    pub cy: f64,
    pub z1: f64,
    pub z2: f64,
}

impl SubjectDetection {
    /// Built-in joint head-height estimate (mean of the two sensors).
    pub fn builtin_z(&self) -> f64 {
        0.5 * (self.z1 + self.z2)
    }

    pub fn is_finite(&self) -> bool {
        self.cx.is_finite() && self.cy.is_finite() && self.z1.is_finite() && self.z2.is_finite()
    }
}

/// One stitched frame: a timestamp in seconds, the merged room-frame cloud,
/// and the firmware detections for every subject visible in the frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloudFrame {
    pub t: f64,
    pub points: Vec<Point3>,
    pub detections: Vec<SubjectDetection>,
}

impl PointCloudFrame {
    pub fn detection(&self, subject_id: &str) -> Option<&SubjectDetection> {
        self.detections.iter().find(|d| d.subject_id == subject_id)
    }

    /// Exact equality of the point lists, bit for bit. A replayed frame is a
    /// byte-identical copy of its predecessor, so no tolerance is involved.
    pub fn same_points(&self, other: &PointCloudFrame) -> bool {
        self.points.len() == other.points.len()
            && self
                .points
                .iter()
                .zip(&other.points)
                .all(|(a, b)| a.bits() == b.bits())
    }
}

/// Rigid sensor-to-room transform for one sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorExtrinsics {
    pub id: String,
    /// Row-major rotation matrix.
    pub rotation: [[f64; 3]; 3],
    /// Translation in millimetres.
    pub translation: [f64; 3],
}

impl SensorExtrinsics {
    /// Identity pose, useful when a sensor already reports room-frame points.
    pub fn identity(id: &str) -> SensorExtrinsics {
        SensorExtrinsics {
            id: id.to_string(),
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0, 0.0, 0.0],
        }
    }

    fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.rotation[r][c])
    }

    /// Check that the rotation block is a proper rotation (orthonormal
    /// within 1e-9, determinant +1).
    pub fn validate(&self) -> Result<()> {
        let r = self.matrix();
        let gram = r.transpose() * r;
        let dev = (gram - Matrix3::identity()).abs().max();
        if dev > 1e-9 || (r.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::BadExtrinsics(self.id.clone()));
        }
        Ok(())
    }

    /// Map a sensor-frame point into the room frame.
    pub fn apply(&self, p: Point3) -> Point3 {
        let v = self.matrix() * Vector3::new(p.x, p.y, p.z)
            + Vector3::new(self.translation[0], self.translation[1], self.translation[2]);
        Point3::new(v.x, v.y, v.z)
    }
}

/// A parsed session: sensor poses from the header plus the frame sequence,
/// ordered by strictly increasing timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecording {
    pub sensors: Vec<SensorExtrinsics>,
    pub frames: Vec<PointCloudFrame>,
}

impl SessionRecording {
    /// Session length in seconds (first to last timestamp).
    pub fn duration(&self) -> f64 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn subject_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for f in &self.frames {
            for d in &f.detections {
                if !ids.iter().any(|i| i == &d.subject_id) {
                    ids.push(d.subject_id.clone());
                }
            }
        }
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrinsics_validation() {
        let mut e = SensorExtrinsics::identity("s1");
        assert!(e.validate().is_ok());

        // 90 degree yaw is a proper rotation.
        e.rotation = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(e.validate().is_ok());

        // A reflection is orthonormal but not proper.
        e.rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(e.validate().is_err());

        // Scaled axes are not orthonormal.
        e.rotation = [[1.1, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(e.validate().is_err());
    }

    #[test]
    fn apply_rotates_and_translates() {
        let e = SensorExtrinsics {
            id: "s".into(),
            rotation: [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [10.0, 20.0, 30.0],
        };
        let p = e.apply(Point3::new(1.0, 0.0, 0.0));
        assert!((p.x - 10.0).abs() < 1e-12);
        assert!((p.y - 21.0).abs() < 1e-12);
        assert!((p.z - 30.0).abs() < 1e-12);
    }

    #[test]
    fn repeat_detection_is_exact() {
        let f1 = PointCloudFrame {
            t: 0.0,
            points: vec![Point3::new(1.0, 2.0, 3.0)],
            detections: vec![],
        };
        let mut f2 = f1.clone();
        f2.t = 0.7;
        assert!(f1.same_points(&f2));
        f2.points[0].x += 1e-12;
        assert!(!f1.same_points(&f2));
    }
}
