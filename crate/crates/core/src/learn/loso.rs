//! Leave-one-subject-out evaluation.
//!
//! Each fold holds one subject's rows out as the test set. The remaining
//! rows split into training and validation, stratified per subject
//! (ceil of the validation fraction of each subject's rows, chosen by a
//! seeded shuffle). Every fold runs the full chain: feature elimination
//! on the fold's own train/validation split, a pool of networks on the
//! selected features, greedy ensemble selection, then scoring on the
//! held-out subject. Subjects with too few rows are excluded up front
//! and reported, not silently dropped.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::LearnConfig;
use crate::error::{Error, Result};
use crate::seeding::mix_seed;

use super::dataset::Dataset;
use super::ensemble::{angular_mae, mean_prediction, select_ensemble, EnsembleSelection};
use super::mlp::{train_mlp, Normalizer, TrainedMlp};
use super::rfe::{run_rfe, RfeTrace};

/// Row indices for one fold's three splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Subjects eligible for folds (enough rows), sorted by name, plus the
/// excluded ones with their row counts.
pub fn eligible_subjects(ds: &Dataset, learn: &LearnConfig) -> (Vec<String>, Vec<(String, usize)>) {
    let mut eligible = Vec::new();
    let mut excluded = Vec::new();
    for (name, count) in ds.subject_counts() {
        if count >= learn.min_subject_rows {
            eligible.push(name);
        } else {
            excluded.push((name, count));
        }
    }
    eligible.sort();
    (eligible, excluded)
}

/// Carve one fold deterministically.
///
/// Validation rows are drawn per training subject: shuffle that
/// subject's rows with a stream derived from `seed` and the fold index,
/// then take the first `ceil(val_fraction * n)`.
pub fn carve_fold(
    ds: &Dataset,
    eligible: &[String],
    test_subject: &str,
    fold_index: usize,
    learn: &LearnConfig,
    seed: u64,
) -> FoldSplit {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xF01D_0000 + fold_index as u64));
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for subject in eligible {
        let rows: Vec<usize> = (0..ds.n_rows())
            .filter(|&i| &ds.subjects[i] == subject)
            .collect();
        if subject == test_subject {
            test = rows;
            continue;
        }
        let mut shuffled = rows;
        for i in (1..shuffled.len()).rev() {
            let j = rng.random_range(0..=i);
            shuffled.swap(i, j);
        }
        let n_val = ((learn.val_fraction * shuffled.len() as f64).ceil() as usize)
            .min(shuffled.len().saturating_sub(1));
        val.extend_from_slice(&shuffled[..n_val]);
        train.extend_from_slice(&shuffled[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    FoldSplit { train, val, test }
}

/// Everything recorded about one fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub subject: String,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub rfe: RfeTrace,
    pub ensemble: EnsembleSelection,
    pub test_mae: f64,
}

#[derive(Debug, Clone)]
pub struct LosoReport {
    pub folds: Vec<FoldOutcome>,
    /// Test error over all folds, weighted by fold size.
    pub overall_mae: f64,
    pub excluded: Vec<(String, usize)>,
    pub elapsed_seconds: f64,
}

/// Train a pool of networks and pick an ensemble; shared by LOSO folds
/// and full-dataset training.
pub(crate) struct PoolOutcome {
    pub normalizer: Normalizer,
    pub pool: Vec<TrainedMlp>,
    pub selection: EnsembleSelection,
    pub feature_indices: Vec<usize>,
}

pub(crate) fn train_pool_on_selection(
    ds: &Dataset,
    split_train: &[usize],
    split_val: &[usize],
    feature_indices: &[usize],
    learn: &LearnConfig,
    seed: u64,
) -> Result<PoolOutcome> {
    let sub = ds.select_features(feature_indices)?;
    let train = sub.select_rows(split_train);
    let val = sub.select_rows(split_val);

    let normalizer = Normalizer::fit(&train.rows, &train.labels)?;
    let train_x = normalizer.transform_all(&train.rows);
    let train_y: Vec<f64> = train.labels.iter().map(|&y| normalizer.scale_label(y)).collect();
    let val_x = normalizer.transform_all(&val.rows);
    let val_y: Vec<f64> = val.labels.iter().map(|&y| normalizer.scale_label(y)).collect();

    let pool: Vec<TrainedMlp> = (0..learn.pool_size)
        .into_par_iter()
        .map(|k| {
            train_mlp(
                &train_x,
                &train_y,
                &val_x,
                &val_y,
                &learn.mlp,
                mix_seed(seed, 0x9001_0000 + k as u64),
            )
        })
        .collect::<Result<_>>()?;

    let pool_val_preds: Vec<Vec<f64>> = pool
        .iter()
        .map(|m| {
            val_x
                .iter()
                .map(|r| normalizer.unscale_label(m.network.predict(r)))
                .collect()
        })
        .collect();
    let selection = select_ensemble(&pool_val_preds, &val.labels, learn.ensemble_seed_size)?;

    Ok(PoolOutcome {
        normalizer,
        pool,
        selection,
        feature_indices: feature_indices.to_vec(),
    })
}

/// Run the full leave-one-subject-out evaluation.
pub fn run_loso(ds: &Dataset, learn: &LearnConfig, seed: u64) -> Result<LosoReport> {
    let started = std::time::Instant::now();
    let (eligible, excluded) = eligible_subjects(ds, learn);
    if eligible.len() < 2 {
        return Err(Error::Dataset(format!(
            "leave-one-subject-out needs at least 2 eligible subjects, found {}",
            eligible.len()
        )));
    }

    let mut folds = Vec::with_capacity(eligible.len());
    for (fi, subject) in eligible.iter().enumerate() {
        let split = carve_fold(ds, &eligible, subject, fi, learn, seed);
        let train = ds.select_rows(&split.train);
        let val = ds.select_rows(&split.val);

        let trace = run_rfe(
            &train.rows,
            &train.labels,
            &val.rows,
            &val.labels,
            &learn.forest,
            mix_seed(seed, 0x0FE0_0000 + fi as u64),
        )?;
        let selected = trace.optimal().feature_indices.clone();

        let pool_out = train_pool_on_selection(
            ds,
            &split.train,
            &split.val,
            &selected,
            learn,
            mix_seed(seed, 0x1000_0000 + fi as u64),
        )?;

        // Score the held-out subject with the selected members.
        let sub = ds.select_features(&selected)?;
        let test = sub.select_rows(&split.test);
        let test_x = pool_out.normalizer.transform_all(&test.rows);
        let member_preds: Vec<Vec<f64>> = pool_out
            .selection
            .members
            .iter()
            .map(|&k| {
                test_x
                    .iter()
                    .map(|r| {
                        pool_out
                            .normalizer
                            .unscale_label(pool_out.pool[k].network.predict(r))
                    })
                    .collect()
            })
            .collect();
        let member_refs: Vec<&[f64]> = member_preds.iter().map(|p| p.as_slice()).collect();
        let test_pred = mean_prediction(&member_refs);
        let test_mae = angular_mae(&test_pred, &test.labels);

        folds.push(FoldOutcome {
            subject: subject.clone(),
            n_train: split.train.len(),
            n_val: split.val.len(),
            n_test: split.test.len(),
            rfe: trace,
            ensemble: pool_out.selection,
            test_mae,
        });
    }

    let total_rows: usize = folds.iter().map(|f| f.n_test).sum();
    let overall_mae = folds
        .iter()
        .map(|f| f.test_mae * f.n_test as f64)
        .sum::<f64>()
        / total_rows as f64;
    Ok(LosoReport {
        folds,
        overall_mae,
        excluded,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}
