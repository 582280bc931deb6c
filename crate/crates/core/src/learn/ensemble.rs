//! Greedy forward ensemble selection over a pool of trained networks.
//!
//! The pool is ranked by validation error (ties keep the lower pool
//! index). The ensemble starts as the best few members and grows along
//! the ranking while each addition strictly improves the validation
//! error; the first non-improvement stops the search for good. The
//! ensemble predicts the plain mean of its members' outputs, wrapped
//! back into the angular range.

use crate::angle::normalize_degrees;
use crate::error::{Error, Result};

/// Outcome of the selection.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSelection {
    /// Pool indices ranked by validation error, best first.
    pub ranked: Vec<usize>,
    /// Validation error per pool member, in pool order.
    pub pool_val_mae: Vec<f64>,
    /// Selected members (pool indices, in the order they were added).
    pub members: Vec<usize>,
    /// Validation error of the final ensemble.
    pub val_mae: f64,
    /// Validation error of the starting set, before any growth.
    pub seed_val_mae: f64,
}

/// Mean absolute error between angular predictions and labels, degrees.
pub fn angular_mae(pred: &[f64], labels: &[f64]) -> f64 {
    debug_assert_eq!(pred.len(), labels.len());
    let s: f64 = pred
        .iter()
        .zip(labels)
        .map(|(p, y)| normalize_degrees(p - y).abs())
        .sum();
    s / labels.len() as f64
}

/// Mean of member predictions, renormalised into `[-180, 180)`.
pub fn mean_prediction(member_preds: &[&[f64]]) -> Vec<f64> {
    let n = member_preds[0].len();
    let inv = 1.0 / member_preds.len() as f64;
    (0..n)
        .map(|i| {
            let s: f64 = member_preds.iter().map(|p| p[i]).sum();
            normalize_degrees(s * inv)
        })
        .collect()
}

/// Select ensemble members from per-member validation predictions.
///
/// `pool_val_preds[k]` holds member `k`'s predictions on the validation
/// rows, in label units (degrees).
pub fn select_ensemble(
    pool_val_preds: &[Vec<f64>],
    val_labels: &[f64],
    seed_size: usize,
) -> Result<EnsembleSelection> {
    if pool_val_preds.is_empty() {
        return Err(Error::Dataset("ensemble: empty pool".into()));
    }
    if seed_size == 0 || seed_size > pool_val_preds.len() {
        return Err(Error::Config(format!(
            "ensemble seed size {seed_size} with a pool of {}",
            pool_val_preds.len()
        )));
    }
    if pool_val_preds
        .iter()
        .any(|p| p.len() != val_labels.len())
        || val_labels.is_empty()
    {
        return Err(Error::Dataset(
            "ensemble: predictions and labels must align and be non-empty".into(),
        ));
    }

    let pool_val_mae: Vec<f64> = pool_val_preds
        .iter()
        .map(|p| angular_mae(p, val_labels))
        .collect();
    let mut ranked: Vec<usize> = (0..pool_val_preds.len()).collect();
    ranked.sort_by(|&a, &b| {
        pool_val_mae[a]
            .total_cmp(&pool_val_mae[b])
            .then(a.cmp(&b))
    });

    let ens_mae = |members: &[usize]| {
        let preds: Vec<&[f64]> = members
            .iter()
            .map(|&k| pool_val_preds[k].as_slice())
            .collect();
        angular_mae(&mean_prediction(&preds), val_labels)
    };

    let mut members: Vec<usize> = ranked[..seed_size].to_vec();
    let seed_val_mae = ens_mae(&members);
    let mut val_mae = seed_val_mae;
    for &cand in &ranked[seed_size..] {
        let mut trial = members.clone();
        trial.push(cand);
        let mae = ens_mae(&trial);
        if mae < val_mae {
            members = trial;
            val_mae = mae;
        } else {
            break; // first non-improvement ends the growth phase
        }
    }

    Ok(EnsembleSelection {
        ranked,
        pool_val_mae,
        members,
        val_mae,
        seed_val_mae,
    })
}
