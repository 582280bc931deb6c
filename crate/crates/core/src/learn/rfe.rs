//! Recursive feature elimination driven by forest importances.
//!
//! Starting from the full feature set, each round trains a forest,
//! scores it on the validation split, then drops the feature with the
//! lowest importance (ties drop the lowest original index). A dropped
//! feature never returns. The optimal set is the one with the lowest
//! validation error; on ties the smaller set wins.

use crate::angle::normalize_degrees;
use crate::config::ForestConfig;
use crate::error::{Error, Result};
use crate::seeding::mix_seed;

use super::forest::train_forest;

/// One elimination round.
#[derive(Debug, Clone, PartialEq)]
pub struct RfeStep {
    /// Features evaluated this round, as original column indices in
    /// ascending order.
    pub feature_indices: Vec<usize>,
    pub val_mae: f64,
    /// The feature removed after this round (`None` on the final
    /// single-feature round).
    pub dropped: Option<usize>,
}

impl RfeStep {
    pub fn n_features(&self) -> usize {
        self.feature_indices.len()
    }
}

/// The whole elimination path, largest set first.
#[derive(Debug, Clone, PartialEq)]
pub struct RfeTrace {
    pub steps: Vec<RfeStep>,
    /// Index into `steps` of the selected set.
    pub optimal_step: usize,
}

impl RfeTrace {
    pub fn optimal(&self) -> &RfeStep {
        &self.steps[self.optimal_step]
    }
}

fn project(rows: &[Vec<f64>], active: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| active.iter().map(|&i| r[i]).collect())
        .collect()
}

fn val_mae(pred: &[f64], labels: &[f64]) -> f64 {
    let s: f64 = pred
        .iter()
        .zip(labels)
        .map(|(p, y)| normalize_degrees(p - y).abs())
        .sum();
    s / labels.len() as f64
}

/// Pick the optimal step: lowest validation error, ties to the smaller
/// set. Steps are ordered largest set first, so a scan that also accepts
/// equal scores ends on the smallest tied set.
fn pick_optimal(steps: &[RfeStep]) -> usize {
    let mut best = 0usize;
    for (i, s) in steps.iter().enumerate() {
        if s.val_mae <= steps[best].val_mae {
            best = i;
        }
    }
    best
}

/// Run the elimination all the way down to one feature.
pub fn run_rfe(
    train_rows: &[Vec<f64>],
    train_labels: &[f64],
    val_rows: &[Vec<f64>],
    val_labels: &[f64],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<RfeTrace> {
    if train_rows.is_empty() || val_rows.is_empty() {
        return Err(Error::Dataset("rfe needs non-empty train and val".into()));
    }
    let d = train_rows[0].len();
    if d == 0 {
        return Err(Error::Dataset("rfe needs at least one feature".into()));
    }
    let mut active: Vec<usize> = (0..d).collect();
    let mut steps = Vec::with_capacity(d);
    for round in 0..d {
        let tr = project(train_rows, &active);
        let va = project(val_rows, &active);
        let forest = train_forest(&tr, train_labels, cfg, mix_seed(seed, round as u64))?;
        let mae = val_mae(&forest.predict_all(&va), val_labels);

        let dropped = if active.len() > 1 {
            // Lowest importance; ties resolve to the lowest original
            // column index (which is also the first occurrence, since
            // `active` stays sorted).
            let mut worst = 0usize;
            for i in 1..active.len() {
                if forest.importances[i] < forest.importances[worst] {
                    worst = i;
                }
            }
            Some(active.remove(worst))
        } else {
            None
        };
        steps.push(RfeStep {
            feature_indices: {
                let mut f = active.clone();
                if let Some(x) = dropped {
                    f.push(x);
                    f.sort_unstable();
                }
                f
            },
            val_mae: mae,
            dropped,
        });
    }
    let optimal_step = pick_optimal(&steps);
    Ok(RfeTrace {
        steps,
        optimal_step,
    })
}
