//! Trained model persistence and inference.
//!
//! A [`ModelBundle`] is a single JSON document carrying everything
//! inference needs: the feature schema it was trained against, the
//! selected feature columns, the normaliser, and the ensemble member
//! networks. Serialisation is deterministic, so training twice with the
//! same seed yields byte-identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::angle::{normalize_degrees, Angle};
use crate::config::LearnConfig;
use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::seeding::mix_seed;

use super::dataset::Dataset;
use super::ensemble::EnsembleSelection;
use super::loso::{carve_fold, eligible_subjects, train_pool_on_selection, FoldSplit};
use super::mlp::{Network, Normalizer};
use super::rfe::{run_rfe, RfeTrace};

pub const MODEL_FORMAT: &str = "orient-model/1";

/// Everything needed to turn a full feature row into a yaw estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub schema: FeatureSchema,
    /// Columns of the full schema the model consumes, ascending.
    pub feature_indices: Vec<usize>,
    pub normalizer: Normalizer,
    /// Ensemble member networks, in selection order.
    pub members: Vec<Network>,
    /// Pool indices the members came from, for traceability.
    pub member_pool_indices: Vec<usize>,
    /// Validation MAE of the selected ensemble, degrees.
    pub val_mae: f64,
    pub seed: u64,
    pub trained_rows: usize,
    pub config: LearnConfig,
}

impl ModelBundle {
    /// Estimate yaw from one full-width feature row.
    pub fn predict(&self, features: &[f64]) -> Result<Angle> {
        if features.len() != self.schema.names.len() {
            return Err(Error::SchemaMismatch {
                model: format!("{} features", self.schema.names.len()),
                data: format!("{} features", features.len()),
            });
        }
        let sub: Vec<f64> = self.feature_indices.iter().map(|&i| features[i]).collect();
        let x = self.normalizer.transform(&sub);
        let mean = self
            .members
            .iter()
            .map(|m| self.normalizer.unscale_label(m.predict(&x)))
            .sum::<f64>()
            / self.members.len() as f64;
        Ok(Angle::from_degrees(normalize_degrees(mean)))
    }

    /// Predict a whole dataset; the dataset schema must hash-match the
    /// model's.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<Angle>> {
        if ds.schema.hash() != self.schema.hash() {
            return Err(Error::SchemaMismatch {
                model: self.schema.hash(),
                data: ds.schema.hash(),
            });
        }
        ds.rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| {
            Error::Dataset(format!("model serialization failed: {e}"))
        })?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelBundle> {
        let text = std::fs::read_to_string(path)?;
        let bundle: ModelBundle = serde_json::from_str(&text)
            .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))?;
        bundle.validate()?;
        Ok(bundle)
    }

    /// Structural checks run after deserialisation.
    pub fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Dataset(format!(
                "unsupported model format {:?}, expected {MODEL_FORMAT:?}",
                self.format
            )));
        }
        if self.members.is_empty() {
            return Err(Error::Dataset("model has no ensemble members".into()));
        }
        let d = self.feature_indices.len();
        if d == 0 || self.normalizer.mean.len() != d {
            return Err(Error::Dataset(
                "model feature selection and normalizer disagree".into(),
            ));
        }
        if self.feature_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Dataset(
                "model feature indices must be strictly ascending".into(),
            ));
        }
        if let Some(&max) = self.feature_indices.last() {
            if max >= self.schema.names.len() {
                return Err(Error::Dataset(format!(
                    "model selects feature {max} but the schema has {}",
                    self.schema.names.len()
                )));
            }
        }
        for (k, net) in self.members.iter().enumerate() {
            if net.layers.is_empty() || net.layers[0].in_dim != d {
                return Err(Error::Dataset(format!(
                    "ensemble member {k} expects {} inputs, model selects {d}",
                    net.layers.first().map_or(0, |l| l.in_dim)
                )));
            }
        }
        Ok(())
    }
}

/// Training record returned alongside the bundle.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub rfe: RfeTrace,
    pub ensemble: EnsembleSelection,
    pub n_train: usize,
    pub n_val: usize,
    pub excluded: Vec<(String, usize)>,
}

/// Stratified train/validation split over the whole dataset, with no
/// held-out subject. Shared by full training and the standalone
/// elimination command so both see exactly the same rows.
pub fn full_split(
    ds: &Dataset,
    learn: &LearnConfig,
    seed: u64,
) -> Result<(FoldSplit, Vec<(String, usize)>)> {
    let (eligible, excluded) = eligible_subjects(ds, learn);
    if eligible.is_empty() {
        return Err(Error::Dataset("no subject has enough rows to train on".into()));
    }
    // A test-subject name that matches nobody leaves the test split empty
    // and stratifies every eligible subject into train/val.
    let split = carve_fold(ds, &eligible, "", eligible.len(), learn, seed);
    debug_assert!(split.test.is_empty());
    Ok((split, excluded))
}

/// Feature elimination on the full-dataset split. `train_model` runs the
/// identical computation, so a trace written here matches the one a
/// subsequent training run reports.
pub fn full_rfe(ds: &Dataset, learn: &LearnConfig, seed: u64) -> Result<RfeTrace> {
    let (split, _) = full_split(ds, learn, seed)?;
    let train = ds.select_rows(&split.train);
    let val = ds.select_rows(&split.val);
    run_rfe(
        &train.rows,
        &train.labels,
        &val.rows,
        &val.labels,
        &learn.forest,
        mix_seed(seed, 0x0FE0_FFFF),
    )
}

/// Train a deployable model on the whole dataset.
///
/// The dataset splits into train and validation exactly as one
/// cross-validation fold would, but with no held-out subject; feature
/// elimination, the network pool, and ensemble selection all run on that
/// split. Subjects with too few rows for a stratified carve are excluded
/// and reported.
pub fn train_model(ds: &Dataset, learn: &LearnConfig, seed: u64) -> Result<(ModelBundle, TrainReport)> {
    let (split, excluded) = full_split(ds, learn, seed)?;
    let trace = full_rfe(ds, learn, seed)?;
    let selected = trace.optimal().feature_indices.clone();

    let pool_out = train_pool_on_selection(
        ds,
        &split.train,
        &split.val,
        &selected,
        learn,
        mix_seed(seed, 0x1000_FFFF),
    )?;

    let members: Vec<Network> = pool_out
        .selection
        .members
        .iter()
        .map(|&k| pool_out.pool[k].network.clone())
        .collect();
    let bundle = ModelBundle {
        format: MODEL_FORMAT.to_string(),
        schema: ds.schema.clone(),
        feature_indices: pool_out.feature_indices,
        normalizer: pool_out.normalizer,
        members,
        member_pool_indices: pool_out.selection.members.clone(),
        val_mae: pool_out.selection.val_mae,
        seed,
        trained_rows: split.train.len(),
        config: learn.clone(),
    };
    bundle.validate()?;
    let report = TrainReport {
        rfe: trace,
        ensemble: pool_out.selection,
        n_train: split.train.len(),
        n_val: split.val.len(),
        excluded,
    };
    Ok((bundle, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_dataset(subjects: usize, rows_per: usize, seed: u64) -> Dataset {
        let schema = FeatureSchema {
            version: 1,
            names: (0..5).map(|i| format!("f{i}")).collect(),
        };
        let mut ds = Dataset::new(schema);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in 0..subjects {
            let name = format!("S{s:02}");
            for r in 0..rows_per {
                let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
                let label = 30.0 * x[1] + 15.0 * x[4] + rng.random_range(-0.5..0.5);
                ds.push_row(format!("{name}/{r}"), name.clone(), label, x)
                    .unwrap();
            }
        }
        ds
    }

    fn quick_learn() -> LearnConfig {
        let mut learn = LearnConfig {
            pool_size: 4,
            ..LearnConfig::default()
        };
        learn.mlp.hidden = vec![10];
        learn.mlp.max_epochs = 80;
        learn.forest.n_trees = 15;
        learn
    }

    #[test]
    fn train_save_load_predict_round_trip() {
        let ds = toy_dataset(3, 30, 1);
        let (bundle, report) = train_model(&ds, &quick_learn(), 7).unwrap();
        assert!(report.excluded.is_empty());
        assert!(bundle.members.len() >= 3);
        assert_eq!(bundle.members.len(), bundle.member_pool_indices.len());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        bundle.save(&path).unwrap();
        let back = ModelBundle::load(&path).unwrap();
        assert_eq!(bundle, back);

        // Loaded model predicts identically and tracks the target.
        let preds = back.predict_dataset(&ds).unwrap();
        let mae: f64 = preds
            .iter()
            .zip(&ds.labels)
            .map(|(p, &y)| p.abs_diff(Angle::from_degrees(y)))
            .sum::<f64>()
            / preds.len() as f64;
        assert!(mae < 6.0, "train-set MAE {mae:.2}");
    }

    #[test]
    fn serialization_is_byte_identical_across_runs() {
        let ds = toy_dataset(3, 25, 2);
        let learn = quick_learn();
        let (a, _) = train_model(&ds, &learn, 11).unwrap();
        let (b, _) = train_model(&ds, &learn, 11).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
        let (c, _) = train_model(&ds, &learn, 12).unwrap();
        assert_ne!(ja, serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn predict_rejects_wrong_width_and_schema() {
        let ds = toy_dataset(3, 25, 3);
        let (bundle, _) = train_model(&ds, &quick_learn(), 5).unwrap();
        assert!(bundle.predict(&[0.0; 4]).is_err());

        let other_schema = FeatureSchema {
            version: 1,
            names: (0..5).map(|i| format!("g{i}")).collect(),
        };
        let other = Dataset::new(other_schema);
        assert!(bundle.predict_dataset(&other).is_err());
    }

    #[test]
    fn tampered_bundles_fail_validation() {
        let ds = toy_dataset(3, 25, 4);
        let (bundle, _) = train_model(&ds, &quick_learn(), 5).unwrap();

        let mut bad = bundle.clone();
        bad.format = "orient-model/999".into();
        assert!(bad.validate().is_err());

        let mut bad = bundle.clone();
        bad.members.clear();
        assert!(bad.validate().is_err());

        let mut bad = bundle.clone();
        bad.feature_indices = vec![0, 0];
        assert!(bad.validate().is_err());

        let mut bad = bundle.clone();
        bad.feature_indices = vec![0, 99];
        assert!(bad.validate().is_err());
    }
}
