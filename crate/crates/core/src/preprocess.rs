//! Per-subject frame preprocessing.
//!
//! For each detected subject, a frame goes through:
//!
//! 1. crop: a cylinder around the detection centroid, keeping only the top
//!    of the body (z at or above a fixed fraction of the head height);
//! 2. denoise: drop points whose mean distance to their k nearest
//!    neighbours is too large. Neighbours are always computed against the
//!    input cloud in a single pass, so removal never cascades and the
//!    result does not depend on point order;
//! 3. initial head/body split at a fixed drop below the built-in head
//!    height, good enough to isolate head points;
//! 4. head position correction: ellipse-fit center of the projected head
//!    points plus a crest rule for the head height;
//! 5. re-crop and re-split against the corrected height, with radial
//!    filters around the head center and body centroid;
//! 6. validation against sensor glitches: replayed frames and large
//!    built-in vs corrected discrepancies are rejected.
//!
//! The built-in head height bootstraps step 1; once the corrected height
//! exists the crop is redone with it.

use serde::{Deserialize, Serialize};

use crate::config::PreprocessConfig;
use crate::error::{Error, Result};
use crate::geometry::fit_ellipse_direct;
use crate::types::{Point3, PointCloudFrame, SubjectDetection};

/// Crop the room-frame cloud to one subject: XY within `crop_radius_mm` of
/// the detection centroid and z at or above `height_keep_fraction` of
/// `z_head`. Fails when too few points survive to say anything about the
/// subject.
pub fn crop_roi(
    points: &[Point3],
    det: &SubjectDetection,
    z_head: f64,
    cfg: &PreprocessConfig,
) -> Result<Vec<Point3>> {
    let z_min = cfg.height_keep_fraction * z_head;
    let kept: Vec<Point3> = points
        .iter()
        .filter(|p| p.z >= z_min && p.dist_xy(det.cx, det.cy) <= cfg.crop_radius_mm)
        .copied()
        .collect();
    if kept.len() < cfg.min_roi_points {
        return Err(Error::TooFewRoiPoints {
            got: kept.len(),
            need: cfg.min_roi_points,
        });
    }
    Ok(kept)
}

#[derive(Debug, Clone)]
pub struct DenoiseOutcome {
    pub points: Vec<Point3>,
    pub removed: usize,
    /// True when the cloud had at most k points and was passed through.
    pub skipped: bool,
}

/// k-nearest-neighbour outlier removal: a point survives iff the mean
/// distance to its k nearest neighbours (within the input cloud) is at most
/// the threshold.
pub fn knn_denoise(points: &[Point3], cfg: &PreprocessConfig) -> DenoiseOutcome {
    let k = cfg.knn_k;
    if points.len() <= k {
        return DenoiseOutcome {
            points: points.to_vec(),
            removed: 0,
            skipped: true,
        };
    }
    let mut scratch: Vec<f64> = Vec::with_capacity(points.len() - 1);
    let mut kept = Vec::with_capacity(points.len());
    let mut removed = 0usize;
    for (i, p) in points.iter().enumerate() {
        scratch.clear();
        scratch.extend(
            points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| p.dist_sq(q)),
        );
        scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
        let mean = scratch[..k].iter().map(|d| d.sqrt()).sum::<f64>() / k as f64;
        if mean <= cfg.knn_threshold_mm {
            kept.push(*p);
        } else {
            removed += 1;
        }
    }
    DenoiseOutcome {
        points: kept,
        removed,
        skipped: false,
    }
}

/// Head and body clouds after a split. Disjoint by construction.
#[derive(Debug, Clone)]
pub struct SplitClouds {
    pub head: Vec<Point3>,
    pub body: Vec<Point3>,
}

/// First head/body split: everything within `initial_split_drop_mm` of the
/// built-in head height is head, the rest is body.
pub fn initial_split(
    points: &[Point3],
    det: &SubjectDetection,
    cfg: &PreprocessConfig,
) -> Result<SplitClouds> {
    let z_split = det.builtin_z() - cfg.initial_split_drop_mm;
    split_at(points, z_split)
}

fn split_at(points: &[Point3], z_split: f64) -> Result<SplitClouds> {
    let (head, body): (Vec<Point3>, Vec<Point3>) =
        points.iter().partition(|p| p.z >= z_split);
    if head.is_empty() {
        return Err(Error::EmptySplit("head"));
    }
    if body.is_empty() {
        return Err(Error::EmptySplit("body"));
    }
    Ok(SplitClouds { head, body })
}

/// Corrected head position. The flags record which fallbacks fired; frames
/// with flags are still usable for geometry but excluded from training
/// data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadPosition {
    pub x: f64,
    pub y: f64,
    pub z_head: f64,
    /// Ellipse fit failed; the center fell back to the point centroid.
    pub center_fallback: bool,
    /// The crest rule never fired; the height fell back to the median of
    /// the top points.
    pub crest_fallback: bool,
}

impl HeadPosition {
    pub fn flagged(&self) -> bool {
        self.center_fallback || self.crest_fallback
    }
}

/// Correct the head position from the initial head cloud.
///
/// Center: ellipse fit over the XY projection (centroid when degenerate).
/// Height: the highest point whose gap to the point `crest_neighbors` ranks
/// below it is at most `crest_gap_mm`; a lone point above that crest is a
/// noise spike and is skipped. When no point qualifies, the median of the
/// top `crest_fallback_top_n` heights is used instead.
pub fn correct_head_position(head: &[Point3], cfg: &PreprocessConfig) -> Result<HeadPosition> {
    if head.len() < cfg.min_head_points {
        return Err(Error::TooFewHeadPoints {
            got: head.len(),
            need: cfg.min_head_points,
        });
    }

    let xy: Vec<(f64, f64)> = head.iter().map(|p| p.xy()).collect();
    let (x, y, center_fallback) = match fit_ellipse_direct(&xy) {
        Ok(fit) => (fit.cx, fit.cy, false),
        Err(_) => {
            let n = xy.len() as f64;
            let (sx, sy) = xy.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.0, sy + p.1));
            (sx / n, sy / n, true)
        }
    };

    let mut zs: Vec<f64> = head.iter().map(|p| p.z).collect();
    zs.sort_by(|a, b| b.total_cmp(a));
    let mut z_head = None;
    for i in 0..zs.len() {
        let Some(&lower) = zs.get(i + cfg.crest_neighbors) else {
            break;
        };
        if zs[i] - lower <= cfg.crest_gap_mm {
            z_head = Some(zs[i]);
            break;
        }
    }
    let (z_head, crest_fallback) = match z_head {
        Some(z) => (z, false),
        None => {
            let top = &zs[..cfg.crest_fallback_top_n.min(zs.len())];
            (median(top), true)
        }
    };

    Ok(HeadPosition {
        x,
        y,
        z_head,
        center_fallback,
        crest_fallback,
    })
}

fn median(sorted_desc: &[f64]) -> f64 {
    let n = sorted_desc.len();
    if n % 2 == 1 {
        sorted_desc[n / 2]
    } else {
        0.5 * (sorted_desc[n / 2 - 1] + sorted_desc[n / 2])
    }
}

/// Refined split against the corrected head height, with radial filters:
/// head points within `head_radius_mm` of the corrected center, body points
/// within `body_radius_mm` of the body centroid. Points outside the filters
/// are dropped entirely.
pub fn refined_split(
    points: &[Point3],
    head_pos: &HeadPosition,
    cfg: &PreprocessConfig,
) -> Result<SplitClouds> {
    let z_split = head_pos.z_head - cfg.refined_split_drop_mm;
    let raw = split_at(points, z_split)?;

    let head: Vec<Point3> = raw
        .head
        .into_iter()
        .filter(|p| p.dist_xy(head_pos.x, head_pos.y) <= cfg.head_radius_mm)
        .collect();

    // Body centroid from the raw below-split points, before filtering.
    let n = raw.body.len() as f64;
    let (bx, by) = raw
        .body
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    let (bx, by) = (bx / n, by / n);
    let body: Vec<Point3> = raw
        .body
        .into_iter()
        .filter(|p| p.dist_xy(bx, by) <= cfg.body_radius_mm)
        .collect();

    if head.is_empty() {
        return Err(Error::EmptySplit("head"));
    }
    if body.is_empty() {
        return Err(Error::EmptySplit("body"));
    }
    Ok(SplitClouds { head, body })
}

/// Why a frame was rejected, in check order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    /// Byte-identical point list to the previous frame (sensor replay).
    Repeat,
    /// Built-in and corrected head centers disagree in XY.
    XyDiscrepancy,
    /// Built-in and corrected head heights disagree.
    ZDiscrepancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameValidation {
    pub repeated: bool,
    pub xy_discrepancy_mm: f64,
    pub z_discrepancy_mm: f64,
    pub reject: Option<RejectReason>,
}

impl FrameValidation {
    pub fn accepted(&self) -> bool {
        self.reject.is_none()
    }
}

/// Validate a frame against its predecessor and the built-in detection.
/// Discrepancies are measured between the built-in head estimate
/// (`cx`,`cy`, mean of `z1`/`z2`) and the corrected head position; either
/// exceeding `discrepancy_mm` rejects the frame, as does an exact replay.
pub fn validate_frame(
    frame: &PointCloudFrame,
    prev: Option<&PointCloudFrame>,
    det: &SubjectDetection,
    head_pos: &HeadPosition,
    cfg: &PreprocessConfig,
) -> FrameValidation {
    let repeated = prev.is_some_and(|p| frame.same_points(p));
    let xy = (det.cx - head_pos.x).hypot(det.cy - head_pos.y);
    let z = (det.builtin_z() - head_pos.z_head).abs();
    let reject = if repeated {
        Some(RejectReason::Repeat)
    } else if xy > cfg.discrepancy_mm {
        Some(RejectReason::XyDiscrepancy)
    } else if z > cfg.discrepancy_mm {
        Some(RejectReason::ZDiscrepancy)
    } else {
        None
    };
    FrameValidation {
        repeated,
        xy_discrepancy_mm: xy,
        z_discrepancy_mm: z,
        reject,
    }
}

/// Everything preprocessing produces for one subject in one frame.
#[derive(Debug, Clone)]
pub struct PreprocessedSubject {
    pub head: Vec<Point3>,
    pub body: Vec<Point3>,
    pub head_position: HeadPosition,
    pub validation: FrameValidation,
    /// Cropped cloud size after the corrected-height crop.
    pub roi_points: usize,
    pub denoise_removed: usize,
}

impl PreprocessedSubject {
    /// Usable for training: accepted by validation and no fallback flags.
    pub fn clean(&self) -> bool {
        self.validation.accepted() && !self.head_position.flagged()
    }
}

/// Run the full preprocessing chain for one subject in one frame.
pub fn preprocess_subject(
    frame: &PointCloudFrame,
    prev: Option<&PointCloudFrame>,
    subject_id: &str,
    cfg: &PreprocessConfig,
) -> Result<PreprocessedSubject> {
    let det = frame
        .detection(subject_id)
        .ok_or_else(|| Error::UnknownSubject(subject_id.to_string()))?;

    // Bootstrap pass with the built-in height.
    let roi = crop_roi(&frame.points, det, det.builtin_z(), cfg)?;
    let den = knn_denoise(&roi, cfg);
    let first = initial_split(&den.points, det, cfg)?;
    let head_position = correct_head_position(&first.head, cfg)?;

    // Re-crop with the corrected height, then the refined split.
    let roi = crop_roi(&frame.points, det, head_position.z_head, cfg)?;
    let den = knn_denoise(&roi, cfg);
    let split = refined_split(&den.points, &head_position, cfg)?;

    let validation = validate_frame(frame, prev, det, &head_position, cfg);
    Ok(PreprocessedSubject {
        head: split.head,
        body: split.body,
        head_position,
        validation,
        roi_points: roi.len(),
        denoise_removed: den.removed,
    })
}
