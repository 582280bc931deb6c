//! Runtime configuration for the whole pipeline.
//!
//! Every tunable threshold lives here with its default. Config files are
//! accepted in two shapes: a JSON object mirroring [`RunConfig`], or flat
//! `section.key=value` lines (`#` comments allowed). Units are fixed:
//! lengths in millimetres, angles in degrees; there is no unit conversion
//! layer, a value like `0.5` for a crop radius is taken literally and will
//! produce an unusable pipeline rather than being silently reinterpreted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Crop cylinder radius around the detection centroid.
    pub crop_radius_mm: f64,
    /// Keep points with z >= this fraction of the head height.
    pub height_keep_fraction: f64,
    /// Frames whose cropped cloud is smaller than this are unusable.
    pub min_roi_points: usize,
    /// Neighbour count for the denoising filter.
    pub knn_k: usize,
    /// Mean-neighbour-distance threshold for the denoising filter.
    pub knn_threshold_mm: f64,
    /// Initial head/body split: z below the built-in head height by this much.
    pub initial_split_drop_mm: f64,
    /// Refined split: z below the corrected head height by this much.
    pub refined_split_drop_mm: f64,
    /// Radial filter around the corrected head center for the head cloud.
    pub head_radius_mm: f64,
    /// Radial filter around the body centroid for the body cloud.
    pub body_radius_mm: f64,
    /// Minimum head-cloud size for position correction.
    pub min_head_points: usize,
    /// Head-height rule: highest point within this gap of the next
    /// `crest_neighbors` points.
    pub crest_gap_mm: f64,
    pub crest_neighbors: usize,
    /// Fallback when the crest rule never fires: median z of this many top points.
    pub crest_fallback_top_n: usize,
    /// Reject a frame when built-in and corrected head positions disagree by
    /// more than this (XY or |z|).
    pub discrepancy_mm: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            crop_radius_mm: 500.0,
            height_keep_fraction: 0.73,
            min_roi_points: 100,
            knn_k: 10,
            knn_threshold_mm: 50.0,
            initial_split_drop_mm: 150.0,
            refined_split_drop_mm: 175.0,
            head_radius_mm: 150.0,
            body_radius_mm: 250.0,
            min_head_points: 20,
            crest_gap_mm: 1.0,
            crest_neighbors: 5,
            crest_fallback_top_n: 10,
            discrepancy_mm: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Nose estimate: centroid of this many furthest projected head points.
    pub nose_points: usize,
    /// Flag the nose estimate when the furthest points span more than this arc.
    pub nose_arc_limit_deg: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            nose_points: 10,
            nose_arc_limit_deg: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// 0 means unlimited depth.
    pub max_depth: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 25,
            min_samples_split: 5,
            min_samples_leaf: 2,
            max_depth: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Early stopping: give up after this many epochs without validation
    /// improvement and restore the best weights.
    pub patience: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![64, 32],
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 200,
            patience: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnConfig {
    pub forest: ForestConfig,
    pub mlp: MlpConfig,
    /// Fraction of training rows held out for validation, stratified by subject.
    pub val_fraction: f64,
    /// Subjects with fewer rows than this are excluded from cross-validation.
    pub min_subject_rows: usize,
    /// Number of candidate networks trained per fold.
    pub pool_size: usize,
    /// The ensemble starts from this many best-ranked candidates.
    pub ensemble_seed_size: usize,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            forest: ForestConfig::default(),
            mlp: MlpConfig::default(),
            val_fraction: 0.15,
            min_subject_rows: 10,
            pool_size: 20,
            ensemble_seed_size: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorConfig {
    /// Attention region half-width around each reference angle.
    pub region_half_width_deg: f64,
    /// Minimum run length (frames) for a Contact event.
    pub contact_min_frames: usize,
    /// Sliding window length (frames) for Exclusion detection.
    pub exclusion_window: usize,
    /// Minimum frames on the other interviewer within the window.
    pub exclusion_quorum: usize,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        BehaviorConfig {
            region_half_width_deg: 15.0,
            contact_min_frames: 3,
            exclusion_window: 20,
            exclusion_quorum: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Gaussian surface noise, per coordinate.
    pub noise_sigma_mm: f64,
    /// Fraction of extra far-off-surface points.
    pub outlier_fraction: f64,
    /// Drop surface points not facing either sensor.
    pub visibility_culling: bool,
    /// Frame rate of generated sessions.
    pub fps: f64,
    /// Relative sampling density (1.0 is the default surface grid).
    pub density: f64,
    pub benchmark_subjects: usize,
    pub benchmark_frames_per_subject: usize,
    /// Head yaw labels are drawn from [-span, span].
    pub benchmark_yaw_span_deg: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            noise_sigma_mm: 8.0,
            outlier_fraction: 0.02,
            visibility_culling: true,
            fps: 1.5,
            density: 1.0,
            benchmark_subjects: 12,
            benchmark_frames_per_subject: 100,
            benchmark_yaw_span_deg: 90.0,
        }
    }
}

/// Top-level configuration: one instance drives every stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
    pub learn: LearnConfig,
    pub behavior: BehaviorConfig,
    pub synth: SynthConfig,
    /// Master seed; every stage derives its own stream from it.
    pub seed: u64,
}

impl RunConfig {
    /// Load from a file, accepting either a JSON object or flat
    /// `section.key=value` lines.
    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
        } else {
            let mut cfg = RunConfig::default();
            for (no, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!("line {}: expected key=value, got {raw:?}", no + 1))
                })?;
                cfg.set(key.trim(), value.trim())?;
            }
            Ok(cfg)
        }
    }

    /// Assign one dotted key, e.g. `preprocess.knn_k=10` or
    /// `learn.mlp.learning_rate=0.001`. The value is parsed as JSON, with a
    /// bare-string fallback.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut root = serde_json::to_value(&*self).expect("config serializes");
        let pointer = format!("/{}", key.replace('.', "/"));
        let entry = root
            .pointer_mut(&pointer)
            .ok_or_else(|| Error::Config(format!("unknown config key {key:?}")))?;
        *entry = serde_json::from_str(value)
            .unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
        *self = serde_json::from_value(root)
            .map_err(|e| Error::Config(format!("{key}={value}: {e}")))?;
        Ok(())
    }

    /// Pretty JSON snapshot written next to every output set.
    pub fn snapshot(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = RunConfig::default();
        let json = cfg.snapshot();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn key_value_overrides() {
        let text = "\n# comment\npreprocess.knn_k = 12\nlearn.mlp.learning_rate = 0.01\nseed = 99\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.preprocess.knn_k, 12);
        assert_eq!(cfg.learn.mlp.learning_rate, 0.01);
        assert_eq!(cfg.seed, 99);
        // Untouched keys keep their defaults.
        assert_eq!(cfg.preprocess.crop_radius_mm, 500.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("preprocess.bogus = 1\n").is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"behavior":{"exclusion_window":30}}"#).unwrap();
        assert_eq!(cfg.behavior.exclusion_window, 30);
        assert_eq!(cfg.behavior.exclusion_quorum, 15);
    }

    #[test]
    fn list_values_parse() {
        let mut cfg = RunConfig::default();
        cfg.set("learn.mlp.hidden", "[16, 8]").unwrap();
        assert_eq!(cfg.learn.mlp.hidden, vec![16, 8]);
    }
}
