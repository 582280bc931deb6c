//! Fixed per-frame feature schema for head-yaw regression.
//!
//! Features are computed in the subject frame: origin at the body-ellipse
//! center, x along the facing direction, y to the subject's left, z
//! unchanged (room height). Everything except the sensor-frame centroid is
//! therefore invariant to where the subject sits and which way they face,
//! which is what lets one subject's model transfer to another seat.
//!
//! The schema is versioned and content-hashed; models record the hash and
//! refuse feature vectors produced under a different schema. Order is
//! fixed: see [`FeatureSchema::v1`].

use serde::{Deserialize, Serialize};

use crate::angle::normalize_degrees;
use crate::config::FeatureConfig;
use crate::error::{Error, Result};
use crate::geometry::{facing_frame, pca2, pca3, BodyOrientation, EllipseFit, QuadrantPartition};
use crate::types::Point3;

/// Versioned, ordered feature name list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub names: Vec<String>,
}

impl FeatureSchema {
    /// Schema v1: 75 features.
    ///
    /// * 2 sensor-frame centroid coordinates;
    /// * 12 head stats: mean/std/min/max over x, y, z;
    /// * 9 head PCA: 3 eigenvalues plus the first two eigenvectors;
    /// * 24 quadrant stats: mean/std over x, y, z for each of 4 quadrants;
    /// * 20 quadrant PCA: 2 XY eigenvalues, first eigenvector and count
    ///   fraction for each quadrant;
    /// * 3 nose: position and bearing relative to facing;
    /// * 5 head ellipse: semi-axes, orientation, center offset.
    pub fn v1() -> FeatureSchema {
        let mut names: Vec<String> = vec!["sensor_cx".into(), "sensor_cy".into()];
        for stat in ["mean", "std", "min", "max"] {
            for ax in ["x", "y", "z"] {
                names.push(format!("head_{stat}_{ax}"));
            }
        }
        for i in 0..3 {
            names.push(format!("head_pca_eval{i}"));
        }
        for vec in 0..2 {
            for ax in ["x", "y", "z"] {
                names.push(format!("head_pca_evec{vec}_{ax}"));
            }
        }
        for q in 1..=4 {
            for stat in ["mean", "std"] {
                for ax in ["x", "y", "z"] {
                    names.push(format!("q{q}_{stat}_{ax}"));
                }
            }
        }
        for q in 1..=4 {
            names.push(format!("q{q}_pca_eval0"));
            names.push(format!("q{q}_pca_eval1"));
            names.push(format!("q{q}_pca_evec0_x"));
            names.push(format!("q{q}_pca_evec0_y"));
            names.push(format!("q{q}_count_frac"));
        }
        names.push("nose_x".into());
        names.push("nose_y".into());
        names.push("nose_bearing".into());
        names.push("head_ellipse_semi_major".into());
        names.push("head_ellipse_semi_minor".into());
        names.push("head_ellipse_orientation".into());
        names.push("head_ellipse_cx".into());
        names.push("head_ellipse_cy".into());
        FeatureSchema { version: 1, names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Content hash over version and names; recorded with every model.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(self.version.to_le_bytes());
        for n in &self.names {
            hasher.update(n.as_bytes());
            hasher.update([0u8]);
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Nose position estimate on the projected head cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoseEstimate {
    pub x: f64,
    pub y: f64,
    /// Fewer points than requested; centroid of all points was used.
    pub from_all_points: bool,
    /// The furthest points spread over too wide an arc to plausibly be a
    /// nose (threshold in config).
    pub uninformative: bool,
}

/// Nose estimate: centroid of the `nose_points` projected points furthest
/// from the head center. Distance ties at the cutoff keep input order.
pub fn estimate_nose(
    points_xy: &[(f64, f64)],
    head_center: (f64, f64),
    cfg: &FeatureConfig,
) -> NoseEstimate {
    let mut order: Vec<usize> = (0..points_xy.len()).collect();
    let dist = |i: usize| {
        let p = points_xy[i];
        (p.0 - head_center.0).hypot(p.1 - head_center.1)
    };
    order.sort_by(|&a, &b| dist(b).total_cmp(&dist(a)));
    let take = cfg.nose_points.min(order.len());
    let from_all_points = order.len() < cfg.nose_points;
    let chosen = &order[..take];

    let n = chosen.len().max(1) as f64;
    let (sx, sy) = chosen.iter().fold((0.0, 0.0), |(sx, sy), &i| {
        (sx + points_xy[i].0, sy + points_xy[i].1)
    });
    let (x, y) = (sx / n, sy / n);

    // Arc spread of the chosen points as seen from the head center: 360
    // minus the largest angular gap.
    let mut uninformative = false;
    if chosen.len() >= 2 {
        let mut bearings: Vec<f64> = chosen
            .iter()
            .map(|&i| {
                let p = points_xy[i];
                (p.1 - head_center.1).atan2(p.0 - head_center.0).to_degrees()
            })
            .collect();
        bearings.sort_by(f64::total_cmp);
        let mut max_gap = 360.0 - bearings[bearings.len() - 1] + bearings[0];
        for w in bearings.windows(2) {
            max_gap = max_gap.max(w[1] - w[0]);
        }
        let spread = 360.0 - max_gap;
        if spread > cfg.nose_arc_limit_deg {
            uninformative = true;
        }
    }

    NoseEstimate {
        x,
        y,
        from_all_points,
        uninformative,
    }
}

/// Inputs to feature extraction, all in the room frame. `head_ellipse` is a
/// separate fit over the refined head cloud's XY projection (its center
/// doubles as the head center for the nose estimate).
#[derive(Debug)]
pub struct FrameGeometry<'a> {
    pub head: &'a [Point3],
    pub quadrants: &'a QuadrantPartition,
    pub body: &'a BodyOrientation,
    pub head_ellipse: &'a EllipseFit,
    /// Detection centroid in the sensor/room frame.
    pub sensor_centroid: (f64, f64),
}

/// Extracted vector plus quality flags.
#[derive(Debug, Clone)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub nose: NoseEstimate,
}

/// Extract schema v1 features for one subject-frame.
///
/// Empty quadrants impute zeros with a zero count fraction. The output
/// never contains NaN or infinities; geometry bad enough to prevent that
/// (an empty head cloud) is an error.
pub fn extract_features(
    schema: &FeatureSchema,
    geo: &FrameGeometry<'_>,
    cfg: &FeatureConfig,
) -> Result<FeatureVector> {
    if geo.head.is_empty() {
        return Err(Error::EmptySplit("head"));
    }
    let (fwd, left) = facing_frame(geo.body.yaw);
    let center = geo.body.center();
    let to_subject = |p: &Point3| -> Point3 {
        let dx = p.x - center.0;
        let dy = p.y - center.1;
        Point3::new(fwd.0 * dx + fwd.1 * dy, left.0 * dx + left.1 * dy, p.z)
    };
    let to_subject_xy = |x: f64, y: f64| -> (f64, f64) {
        let dx = x - center.0;
        let dy = y - center.1;
        (fwd.0 * dx + fwd.1 * dy, left.0 * dx + left.1 * dy)
    };

    let head: Vec<Point3> = geo.head.iter().map(&to_subject).collect();
    let mut values = Vec::with_capacity(schema.len());

    values.push(geo.sensor_centroid.0);
    values.push(geo.sensor_centroid.1);

    // Head stats: mean/std/min/max per axis.
    let axes = |p: &Point3| [p.x, p.y, p.z];
    let n = head.len() as f64;
    let mut mean = [0.0; 3];
    for p in &head {
        for (m, v) in mean.iter_mut().zip(axes(p)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = [0.0; 3];
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for p in &head {
        for i in 0..3 {
            let v = axes(p)[i];
            var[i] += (v - mean[i]) * (v - mean[i]);
            min[i] = min[i].min(v);
            max[i] = max[i].max(v);
        }
    }
    let denom = (n - 1.0).max(1.0);
    let std: Vec<f64> = var.iter().map(|v| (v / denom).sqrt()).collect();
    values.extend_from_slice(&mean);
    values.extend(std.iter());
    values.extend_from_slice(&min);
    values.extend_from_slice(&max);

    // Head PCA in the subject frame.
    let hp = pca3(&head)?;
    values.extend_from_slice(&hp.eigenvalues);
    values.extend_from_slice(&hp.axes[0]);
    values.extend_from_slice(&hp.axes[1]);

    // Quadrant stats and PCA. Quadrant points arrive in the room frame.
    let total = geo.quadrants.total().max(1) as f64;
    let subject_quadrants: Vec<Vec<Point3>> = geo
        .quadrants
        .quadrants
        .iter()
        .map(|q| q.iter().map(&to_subject).collect())
        .collect();
    for q in &subject_quadrants {
        if q.is_empty() {
            values.extend_from_slice(&[0.0; 6]);
            continue;
        }
        let qn = q.len() as f64;
        let mut qmean = [0.0; 3];
        for p in q {
            for (m, v) in qmean.iter_mut().zip(axes(p)) {
                *m += v;
            }
        }
        for m in &mut qmean {
            *m /= qn;
        }
        let mut qvar = [0.0; 3];
        for p in q {
            for i in 0..3 {
                let v = axes(p)[i];
                qvar[i] += (v - qmean[i]) * (v - qmean[i]);
            }
        }
        let qdenom = (qn - 1.0).max(1.0);
        values.extend_from_slice(&qmean);
        values.extend(qvar.iter().map(|v| (v / qdenom).sqrt()));
    }
    for q in &subject_quadrants {
        if q.is_empty() {
            values.extend_from_slice(&[0.0; 5]);
            continue;
        }
        let xy: Vec<(f64, f64)> = q.iter().map(|p| (p.x, p.y)).collect();
        let qp = pca2(&xy)?;
        values.push(qp.eigenvalues[0]);
        values.push(qp.eigenvalues[1]);
        values.push(qp.axes[0][0]);
        values.push(qp.axes[0][1]);
        values.push(q.len() as f64 / total);
    }

    // Nose, relative to the head-ellipse center, all in the subject frame.
    let head_xy: Vec<(f64, f64)> = head.iter().map(|p| (p.x, p.y)).collect();
    let head_center = to_subject_xy(geo.head_ellipse.cx, geo.head_ellipse.cy);
    let nose = estimate_nose(&head_xy, head_center, cfg);
    values.push(nose.x);
    values.push(nose.y);
    // Bearing of the nose from the head center; facing is the subject +x
    // axis, so this is directly the head-vs-body yaw cue. Degenerate nose
    // positions (at the head center) fall back to 0.
    let bearing = {
        let dx = nose.x - head_center.0;
        let dy = nose.y - head_center.1;
        if dx.hypot(dy) <= f64::EPSILON {
            0.0
        } else {
            dy.atan2(dx).to_degrees()
        }
    };
    values.push(bearing);

    // Head ellipse shape, orientation re-expressed in the subject frame.
    values.push(geo.head_ellipse.semi_major);
    values.push(geo.head_ellipse.semi_minor);
    let mut rel = normalize_degrees(geo.head_ellipse.orientation_deg - geo.body.yaw.degrees());
    if rel >= 90.0 {
        rel -= 180.0;
    } else if rel < -90.0 {
        rel += 180.0;
    }
    values.push(rel);
    values.push(head_center.0);
    values.push(head_center.1);

    debug_assert_eq!(values.len(), schema.len());
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Dataset("non-finite feature value".into()));
    }
    Ok(FeatureVector { values, nose })
}
