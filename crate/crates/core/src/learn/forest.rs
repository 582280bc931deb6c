//! Bagged regression trees with variance-reduction splits.
//!
//! Each tree trains on a bootstrap resample; at every node a random
//! subset of `ceil(sqrt(d))` features is scanned for the split that
//! removes the most label variance (sum of squared errors). Feature
//! importance is the total variance reduction credited to each feature
//! across the whole forest, normalised to sum to one; it drives the
//! recursive feature elimination in [`super::rfe`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ForestConfig;
use crate::error::{Error, Result};
use crate::seeding::mix_seed;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    #[cfg(test)]
    fn leaf_sizes(&self, rows: &[Vec<f64>]) -> Vec<usize> {
        let mut counts = vec![0usize; self.nodes.len()];
        for row in rows {
            let mut i = 0usize;
            loop {
                match &self.nodes[i] {
                    Node::Leaf { .. } => {
                        counts[i] += 1;
                        break;
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        i = if row[*feature] <= *threshold {
                            *left as usize
                        } else {
                            *right as usize
                        };
                    }
                }
            }
        }
        self.nodes
            .iter()
            .zip(&counts)
            .filter(|(n, _)| matches!(n, Node::Leaf { .. }))
            .map(|(_, c)| *c)
            .collect()
    }
}

/// A trained forest.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionForest {
    trees: Vec<Tree>,
    pub n_features: usize,
    /// Per-feature share of the total variance reduction, summing to 1
    /// (all zeros if no split ever succeeded).
    pub importances: Vec<f64>,
}

impl RegressionForest {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        s / self.trees.len() as f64
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    #[cfg(test)]
    fn all_leaf_sizes(&self, rows: &[Vec<f64>]) -> Vec<usize> {
        self.trees
            .iter()
            .flat_map(|t| t.leaf_sizes(rows))
            .collect()
    }
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [f64],
    cfg: &'a ForestConfig,
    n_features: usize,
    m_try: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    reduction: Vec<f64>,
    // Scratch reused across nodes.
    feature_pool: Vec<usize>,
    sorted: Vec<usize>,
}

impl Builder<'_> {
    fn sums(&self, idx: &[usize]) -> (f64, f64) {
        let mut s = 0.0;
        let mut ss = 0.0;
        for &i in idx {
            let y = self.labels[i];
            s += y;
            ss += y * y;
        }
        (s, ss)
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> u32 {
        let n = idx.len();
        let (sum, sumsq) = self.sums(idx);
        let mean = sum / n as f64;
        let sse_parent = sumsq - sum * sum / n as f64;

        let depth_ok = self.cfg.max_depth == 0 || depth < self.cfg.max_depth;
        if n < self.cfg.min_samples_split || !depth_ok || sse_parent <= 1e-12 {
            self.nodes.push(Node::Leaf { value: mean });
            return (self.nodes.len() - 1) as u32;
        }

        // Sample m_try distinct candidate features.
        self.feature_pool.clear();
        self.feature_pool.extend(0..self.n_features);
        for k in 0..self.m_try {
            let j = self.rng.random_range(k..self.n_features);
            self.feature_pool.swap(k, j);
        }

        let min_leaf = self.cfg.min_samples_leaf.max(1);
        let mut best: Option<(f64, usize, f64, usize)> = None; // reduction, feature, threshold, left count
        for ci in 0..self.m_try {
            let f = self.feature_pool[ci];
            self.sorted.clear();
            self.sorted.extend_from_slice(idx);
            let rows = self.rows;
            self.sorted
                .sort_unstable_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
            let mut sum_l = 0.0;
            let mut sumsq_l = 0.0;
            for p in 1..n {
                let yi = self.labels[self.sorted[p - 1]];
                sum_l += yi;
                sumsq_l += yi * yi;
                if p < min_leaf || n - p < min_leaf {
                    continue;
                }
                let v_prev = rows[self.sorted[p - 1]][f];
                let v_next = rows[self.sorted[p]][f];
                if v_prev >= v_next {
                    continue; // no distinct boundary here
                }
                let sum_r = sum - sum_l;
                let sumsq_r = sumsq - sumsq_l;
                let sse = (sumsq_l - sum_l * sum_l / p as f64)
                    + (sumsq_r - sum_r * sum_r / (n - p) as f64);
                let reduction = sse_parent - sse;
                let better = match best {
                    Some((r, ..)) => reduction > r,
                    None => reduction > 1e-12,
                };
                if better {
                    best = Some((reduction, f, (v_prev + v_next) / 2.0, p));
                }
            }
        }

        let Some((reduction, feature, threshold, _)) = best else {
            self.nodes.push(Node::Leaf { value: mean });
            return (self.nodes.len() - 1) as u32;
        };
        self.reduction[feature] += reduction;

        // Partition in place around the threshold.
        let rows = self.rows;
        idx.sort_unstable_by(|&a, &b| rows[a][feature].total_cmp(&rows[b][feature]));
        let split_at = idx.partition_point(|&i| rows[i][feature] <= threshold);
        debug_assert!(split_at >= min_leaf && n - split_at >= min_leaf);

        let placeholder = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean }); // patched below
        let (l_idx, r_idx) = idx.split_at_mut(split_at);
        let left = self.build(l_idx, depth + 1);
        let right = self.build(r_idx, depth + 1);
        self.nodes[placeholder] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        placeholder as u32
    }
}

/// Train a forest on a row-major table.
pub fn train_forest(
    rows: &[Vec<f64>],
    labels: &[f64],
    cfg: &ForestConfig,
    seed: u64,
) -> Result<RegressionForest> {
    if rows.is_empty() || rows.len() != labels.len() {
        return Err(Error::Dataset(format!(
            "forest needs matching non-empty rows/labels, got {}/{}",
            rows.len(),
            labels.len()
        )));
    }
    let n_features = rows[0].len();
    if n_features == 0 || rows.iter().any(|r| r.len() != n_features) {
        return Err(Error::Dataset("ragged or empty feature rows".into()));
    }
    let m_try = ((n_features as f64).sqrt().ceil() as usize).clamp(1, n_features);

    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut reduction = vec![0.0; n_features];
    for t in 0..cfg.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x8000_0000 + t as u64));
        let mut bootstrap: Vec<usize> = (0..rows.len())
            .map(|_| rng.random_range(0..rows.len()))
            .collect();
        let mut b = Builder {
            rows,
            labels,
            cfg,
            n_features,
            m_try,
            rng,
            nodes: Vec::new(),
            reduction: vec![0.0; n_features],
            feature_pool: Vec::with_capacity(n_features),
            sorted: Vec::with_capacity(rows.len()),
        };
        let root = b.build(&mut bootstrap, 0);
        debug_assert_eq!(root, 0);
        for (acc, r) in reduction.iter_mut().zip(&b.reduction) {
            *acc += r;
        }
        trees.push(Tree { nodes: b.nodes });
    }

    let total: f64 = reduction.iter().sum();
    let importances = if total > 0.0 {
        reduction.iter().map(|r| r / total).collect()
    } else {
        reduction
    };
    Ok(RegressionForest {
        trees,
        n_features,
        importances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> ForestConfig {
        ForestConfig::default()
    }

    /// y = 4 x0 - 2 x2 + noise, x1 pure noise.
    fn make_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x0: f64 = rng.random_range(-1.0..1.0);
            let x1: f64 = rng.random_range(-1.0..1.0);
            let x2: f64 = rng.random_range(-1.0..1.0);
            rows.push(vec![x0, x1, x2]);
            labels.push(4.0 * x0 - 2.0 * x2 + rng.random_range(-0.05..0.05));
        }
        (rows, labels)
    }

    #[test]
    fn learns_a_smooth_function() {
        let (rows, labels) = make_data(400, 1);
        let f = train_forest(&rows, &labels, &cfg(), 9).unwrap();
        let (test_rows, test_labels) = make_data(100, 2);
        let mae: f64 = test_rows
            .iter()
            .zip(&test_labels)
            .map(|(r, y)| (f.predict(r) - y).abs())
            .sum::<f64>()
            / 100.0;
        assert!(mae < 0.45, "test MAE {mae:.3}");
    }

    #[test]
    fn importances_rank_signal_over_noise() {
        let (rows, labels) = make_data(400, 3);
        let f = train_forest(&rows, &labels, &cfg(), 10).unwrap();
        let imp = &f.importances;
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(imp[0] > imp[2], "x0 (slope 4) should beat x2 (slope 2)");
        assert!(imp[2] > imp[1], "x2 should beat pure noise");
        assert!(imp[1] < 0.05, "noise importance {:.4}", imp[1]);
    }

    #[test]
    fn constant_labels_yield_single_leaf_and_zero_importance() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, -(i as f64)]).collect();
        let labels = vec![7.5; 50];
        let f = train_forest(&rows, &labels, &cfg(), 4).unwrap();
        assert!(f.importances.iter().all(|&x| x == 0.0));
        assert_eq!(f.predict(&[123.0, 5.0]), 7.5);
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let (rows, labels) = make_data(150, 5);
        let a = train_forest(&rows, &labels, &cfg(), 77).unwrap();
        let b = train_forest(&rows, &labels, &cfg(), 77).unwrap();
        assert_eq!(a, b);
        let c = train_forest(&rows, &labels, &cfg(), 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn leaves_respect_minimum_size_on_training_rows() {
        let (rows, labels) = make_data(300, 6);
        let cfg = ForestConfig {
            min_samples_leaf: 5,
            min_samples_split: 12,
            ..ForestConfig::default()
        };
        let f = train_forest(&rows, &labels, &cfg, 11).unwrap();
        // Bootstrap resamples can make a training-row count per leaf
        // smaller than min_samples_leaf counted over the original rows,
        // but a leaf can never cover zero original rows when duplicates
        // were drawn from them. Check the structural guarantee instead:
        // no leaf trained on fewer than min_samples_leaf bootstrap rows
        // exists, which bounds the total leaf count.
        let sizes = f.all_leaf_sizes(&rows);
        let leaves_per_tree = sizes.len() as f64 / cfg.n_trees as f64;
        assert!(
            leaves_per_tree <= (300.0_f64 / 5.0).ceil(),
            "too many leaves per tree: {leaves_per_tree}"
        );
    }

    #[test]
    fn max_depth_limits_tree_size() {
        let (rows, labels) = make_data(300, 8);
        let shallow_cfg = ForestConfig {
            max_depth: 2,
            ..ForestConfig::default()
        };
        let f = train_forest(&rows, &labels, &shallow_cfg, 12).unwrap();
        // Depth 2 allows at most 4 leaves, i.e. 7 nodes.
        for t in &f.trees {
            assert!(t.nodes.len() <= 7, "tree has {} nodes", t.nodes.len());
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(train_forest(&[], &[], &cfg(), 1).is_err());
        assert!(train_forest(&[vec![1.0]], &[1.0, 2.0], &cfg(), 1).is_err());
        assert!(train_forest(&[vec![1.0], vec![]], &[1.0, 2.0], &cfg(), 1).is_err());
    }
}
