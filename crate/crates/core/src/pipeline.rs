//! Frame-to-features glue.
//!
//! One call takes a raw frame and a subject id through preprocessing,
//! body orientation, quadrant partitioning, the head ellipse and feature
//! extraction. Session- and benchmark-level helpers fold that over whole
//! recordings, keeping account of every frame they drop and why.

use crate::config::{FeatureConfig, PreprocessConfig};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureSchema, FeatureVector, FrameGeometry};
use crate::geometry::{
    body_orientation, fit_ellipse_direct, partition_quadrants, BodyOrientation, EllipseFit,
    QuadrantPartition,
};
use crate::learn::Dataset;
use crate::preprocess::{preprocess_subject, FrameValidation, PreprocessedSubject, RejectReason};
use crate::synth::BenchmarkSubject;
use crate::types::{PointCloudFrame, SessionRecording};

/// Everything derived from one accepted subject-frame.
#[derive(Debug, Clone)]
pub struct ProcessedFrame {
    pub subject_id: String,
    pub t: f64,
    pub pre: PreprocessedSubject,
    pub body: BodyOrientation,
    pub quadrants: QuadrantPartition,
    pub head_ellipse: EllipseFit,
    pub features: FeatureVector,
}

/// Outcome for one frame: processed, or rejected by validation.
#[derive(Debug, Clone)]
pub enum FrameOutcome {
    Processed(Box<ProcessedFrame>),
    Rejected(FrameValidation),
}

/// Run one subject-frame through the whole chain.
///
/// `prev` is the preceding frame of the same session, used for replay
/// detection. A validation reject is a normal outcome; anything that
/// breaks the geometry (too few points, degenerate fits) is an error.
pub fn process_frame(
    frame: &PointCloudFrame,
    prev: Option<&PointCloudFrame>,
    subject_id: &str,
    schema: &FeatureSchema,
    pre_cfg: &PreprocessConfig,
    feat_cfg: &FeatureConfig,
) -> Result<FrameOutcome> {
    let pre = preprocess_subject(frame, prev, subject_id, pre_cfg)?;
    if !pre.validation.accepted() {
        return Ok(FrameOutcome::Rejected(pre.validation));
    }
    let body = body_orientation(&pre.body, &pre.head)?;
    let quadrants = partition_quadrants(&pre.head, body.center(), body.yaw);
    let head_xy: Vec<(f64, f64)> = pre.head.iter().map(|p| p.xy()).collect();
    let head_ellipse = fit_ellipse_direct(&head_xy)?;
    let det = frame
        .detection(subject_id)
        .ok_or_else(|| Error::UnknownSubject(subject_id.to_string()))?;
    let geo = FrameGeometry {
        head: &pre.head,
        quadrants: &quadrants,
        body: &body,
        head_ellipse: &head_ellipse,
        sensor_centroid: (det.cx, det.cy),
    };
    let features = extract_features(schema, &geo, feat_cfg)?;
    Ok(FrameOutcome::Processed(Box::new(ProcessedFrame {
        subject_id: subject_id.to_string(),
        t: frame.t,
        pre,
        body,
        quadrants,
        head_ellipse,
        features,
    })))
}

/// Why a frame produced no output row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DropReason {
    Validation(RejectReason),
    /// Head-position fallback flags; the frame is usable for inference
    /// but not trusted for training.
    Flagged,
    Pipeline(String),
}

#[derive(Debug, Clone)]
pub struct DroppedFrame {
    pub index: usize,
    pub t: f64,
    pub why: DropReason,
}

/// All accepted frames of one subject across a session, plus the drops.
#[derive(Debug)]
pub struct SessionProcessing {
    pub frames: Vec<(usize, ProcessedFrame)>,
    pub dropped: Vec<DroppedFrame>,
}

/// Process every frame of `session` for one subject.
///
/// Frames the validator rejects and frames whose geometry fails are
/// recorded in `dropped` instead of aborting the run; a subject id that
/// appears in no frame at all is an error.
pub fn process_session(
    session: &SessionRecording,
    subject_id: &str,
    schema: &FeatureSchema,
    pre_cfg: &PreprocessConfig,
    feat_cfg: &FeatureConfig,
) -> Result<SessionProcessing> {
    if !session
        .subject_ids()
        .iter()
        .any(|s| s == subject_id)
    {
        return Err(Error::UnknownSubject(subject_id.to_string()));
    }
    let mut frames = Vec::new();
    let mut dropped = Vec::new();
    let mut prev: Option<&PointCloudFrame> = None;
    for (i, frame) in session.frames.iter().enumerate() {
        match process_frame(frame, prev, subject_id, schema, pre_cfg, feat_cfg) {
            Ok(FrameOutcome::Processed(p)) => frames.push((i, *p)),
            Ok(FrameOutcome::Rejected(v)) => dropped.push(DroppedFrame {
                index: i,
                t: frame.t,
                why: DropReason::Validation(v.reject.expect("rejected frame carries a reason")),
            }),
            Err(e) => dropped.push(DroppedFrame {
                index: i,
                t: frame.t,
                why: DropReason::Pipeline(e.to_string()),
            }),
        }
        prev = Some(frame);
    }
    Ok(SessionProcessing { frames, dropped })
}

/// Dataset build bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub rows: usize,
    pub rejected: usize,
    pub flagged: usize,
    pub failed: usize,
}

/// Turn labelled benchmark sessions into a training table.
///
/// Only clean frames become rows: validation must accept the frame and
/// the head-position correction must not have fallen back. Labels are the
/// true head yaw in degrees.
pub fn dataset_from_benchmark(
    bench: &[BenchmarkSubject],
    schema: &FeatureSchema,
    pre_cfg: &PreprocessConfig,
    feat_cfg: &FeatureConfig,
) -> Result<(Dataset, BuildStats)> {
    let mut ds = Dataset::new(schema.clone());
    let mut stats = BuildStats::default();
    for subject in bench {
        let processed =
            process_session(&subject.session, &subject.subject_id, schema, pre_cfg, feat_cfg)?;
        for d in &processed.dropped {
            match d.why {
                DropReason::Validation(_) => stats.rejected += 1,
                DropReason::Flagged => stats.flagged += 1,
                DropReason::Pipeline(_) => stats.failed += 1,
            }
        }
        for (index, frame) in processed.frames {
            if !frame.pre.clean() {
                stats.flagged += 1;
                continue;
            }
            let label = subject
                .labels
                .iter()
                .find(|l| l.frame == index)
                .ok_or_else(|| {
                    Error::Dataset(format!(
                        "no label for frame {index} of subject {}",
                        subject.subject_id
                    ))
                })?;
            ds.push_row(
                format!("{}/{}", subject.subject_id, index),
                subject.subject_id.clone(),
                label.head_yaw_deg,
                frame.features.values,
            )?;
            stats.rows += 1;
        }
    }
    Ok((ds, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::Angle;
    use crate::config::SynthConfig;
    use crate::synth::{generate_benchmark, generate_subject_frame, SubjectParams};
    use crate::types::SensorExtrinsics;

    fn schema() -> FeatureSchema {
        FeatureSchema::v1()
    }

    #[test]
    fn clean_frame_recovers_body_yaw_and_head_height() {
        let pre = PreprocessConfig::default();
        let feat = FeatureConfig::default();
        let schema = schema();
        let mut worst: f64 = 0.0;
        for (i, yaw) in [-150.0f64, -60.0, -10.0, 0.0, 35.0, 90.0, 170.0]
            .into_iter()
            .enumerate()
        {
            let p = SubjectParams {
                body_yaw: Angle::from_degrees(yaw),
                head_yaw: Angle::from_degrees(yaw),
                noise_sigma: 4.0,
                outlier_fraction: 0.01,
                ..SubjectParams::seated("t", (150.0, -300.0), 40 + i as u64)
            };
            let f = generate_subject_frame(&p).unwrap();
            let frame = PointCloudFrame {
                t: 0.0,
                points: f.points,
                detections: vec![f.detection],
            };
            let out = process_frame(&frame, None, "t", &schema, &pre, &feat).unwrap();
            let FrameOutcome::Processed(p2) = out else {
                panic!("clean frame rejected");
            };
            let err = p2.body.yaw.abs_diff(Angle::from_degrees(yaw));
            worst = worst.max(err);
            assert!(err < 6.0, "yaw {yaw}: body yaw off by {err:.2}");
            assert!(
                (p2.pre.head_position.z_head - p.z_head).abs() < 25.0,
                "z_head off by {:.1}",
                p2.pre.head_position.z_head - p.z_head
            );
        }
        assert!(worst < 6.0);
    }

    #[test]
    fn session_processing_counts_drops() {
        let cfg = SynthConfig {
            benchmark_subjects: 1,
            benchmark_frames_per_subject: 30,
            density: 0.6,
            ..SynthConfig::default()
        };
        let bench = generate_benchmark(&cfg, 4242).unwrap();
        let s = &bench[0];
        let out = process_session(
            &s.session,
            &s.subject_id,
            &schema(),
            &PreprocessConfig::default(),
            &FeatureConfig::default(),
        )
        .unwrap();
        assert_eq!(out.frames.len() + out.dropped.len(), 30);
        let corrupted: Vec<usize> = s
            .labels
            .iter()
            .filter(|l| l.corrupted)
            .map(|l| l.frame)
            .collect();
        for c in &corrupted {
            assert!(
                out.dropped.iter().any(|d| d.index == *c),
                "corrupted frame {c} was not dropped"
            );
        }
    }

    #[test]
    fn unknown_subject_is_an_error() {
        let session = SessionRecording {
            sensors: vec![SensorExtrinsics::identity("room")],
            frames: vec![PointCloudFrame {
                t: 0.0,
                points: vec![],
                detections: vec![],
            }],
        };
        assert!(matches!(
            process_session(
                &session,
                "ghost",
                &schema(),
                &PreprocessConfig::default(),
                &FeatureConfig::default()
            ),
            Err(Error::UnknownSubject(_))
        ));
    }

    #[test]
    fn benchmark_dataset_has_clean_rows_only() {
        let cfg = SynthConfig {
            benchmark_subjects: 2,
            benchmark_frames_per_subject: 25,
            density: 0.6,
            ..SynthConfig::default()
        };
        let bench = generate_benchmark(&cfg, 77).unwrap();
        let (ds, stats) = dataset_from_benchmark(
            &bench,
            &schema(),
            &PreprocessConfig::default(),
            &FeatureConfig::default(),
        )
        .unwrap();
        assert_eq!(ds.n_rows(), stats.rows);
        assert_eq!(ds.n_features(), 75);
        assert!(stats.rows >= 40, "too many drops: {stats:?}");
        assert_eq!(ds.unique_subjects(), vec!["B01".to_string(), "B02".into()]);
        // Labels sit in the configured span.
        assert!(ds
            .labels
            .iter()
            .all(|l| l.abs() <= cfg.benchmark_yaw_span_deg));
    }
}
