//! Random forest regression: bagged axis-aligned trees with per-node
//! candidate column sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{DesignMatrix, FeatureColumn};
use crate::stats;

use super::{ForecastModel, ModelParams, TrainingSummary};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { value: f64 },
    Split { col: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { col, threshold, left, right } => {
                    at = if row[col] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub tree_count: usize,
    /// Candidate columns sampled at each split.
    pub mtry: usize,
    /// Nodes with at most this many samples become leaves.
    pub node_size: usize,
    pub trees: Vec<Tree>,
    pub seed: u64,
    pub columns: Vec<FeatureColumn>,
}

impl ForestParams {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        sum / self.trees.len() as f64
    }
}

struct TreeBuilder<'a> {
    x: &'a DesignMatrix,
    mtry: usize,
    node_size: usize,
    nodes: Vec<Node>,
}

fn sse_of(sum: f64, sum_sq: f64, n: f64) -> f64 {
    (sum_sq - sum * sum / n).max(0.0)
}

impl TreeBuilder<'_> {
    /// Grow a node over `samples` (indices into the bootstrap sample's rows);
    /// returns the node index.
    fn grow(&mut self, samples: &[usize], rng: &mut ChaCha8Rng) -> usize {
        let n = samples.len() as f64;
        let sum: f64 = samples.iter().map(|&i| self.x.target()[i]).sum();
        let sum_sq: f64 = samples.iter().map(|&i| self.x.target()[i].powi(2)).sum();
        let node_sse = sse_of(sum, sum_sq, n);
        let mean = sum / n;

        if samples.len() <= self.node_size || node_sse <= 0.0 {
            self.nodes.push(Node::Leaf { value: mean });
            return self.nodes.len() - 1;
        }

        // Candidate columns without replacement, then sorted so ties in SSE
        // resolve toward the lowest column index.
        let n_cols = self.x.n_cols();
        let mut cols: Vec<usize> = (0..n_cols).collect();
        for i in 0..self.mtry {
            let j = rng.random_range(i..n_cols);
            cols.swap(i, j);
        }
        let mut candidates: Vec<usize> = cols[..self.mtry].to_vec();
        candidates.sort_unstable();

        let mut best: Option<(f64, usize, f64)> = None; // (children SSE, col, threshold)
        let mut order: Vec<usize> = Vec::new();
        for &col in &candidates {
            order.clear();
            order.extend_from_slice(samples);
            order.sort_by(|&a, &b| self.x.row(a)[col].total_cmp(&self.x.row(b)[col]));
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for (pos, &i) in order.iter().enumerate().take(order.len() - 1) {
                let y = self.x.target()[i];
                left_sum += y;
                left_sq += y * y;
                let v = self.x.row(i)[col];
                let v_next = self.x.row(order[pos + 1])[col];
                if v == v_next {
                    continue;
                }
                let n_left = (pos + 1) as f64;
                let n_right = n - n_left;
                let children = sse_of(left_sum, left_sq, n_left)
                    + sse_of(sum - left_sum, sum_sq - left_sq, n_right);
                if best.as_ref().is_none_or(|&(b, ..)| children < b) {
                    best = Some((children, col, 0.5 * (v + v_next)));
                }
            }
        }

        match best {
            Some((children_sse, col, threshold)) if children_sse < node_sse => {
                let left_samples: Vec<usize> =
                    samples.iter().copied().filter(|&i| self.x.row(i)[col] <= threshold).collect();
                let right_samples: Vec<usize> =
                    samples.iter().copied().filter(|&i| self.x.row(i)[col] > threshold).collect();
                let at = self.nodes.len();
                self.nodes.push(Node::Leaf { value: mean }); // placeholder
                let left = self.grow(&left_samples, rng);
                let right = self.grow(&right_samples, rng);
                self.nodes[at] = Node::Split { col, threshold, left, right };
                at
            }
            _ => {
                self.nodes.push(Node::Leaf { value: mean });
                self.nodes.len() - 1
            }
        }
    }
}

/// Fit `tree_count` trees, each on a bootstrap sample drawn by a per-tree
/// generator seeded with `seed + tree_index`.
pub fn fit_random_forest(
    x: &DesignMatrix,
    tree_count: usize,
    mtry: usize,
    node_size: usize,
    seed: u64,
) -> Result<ForecastModel> {
    if tree_count == 0 {
        return Err(Error::Validation("tree count must be positive".into()));
    }
    if node_size == 0 {
        return Err(Error::Validation("node size must be positive".into()));
    }
    if mtry == 0 || mtry > x.n_cols() {
        return Err(Error::Validation(format!(
            "candidate column count {mtry} must be in 1..={}",
            x.n_cols()
        )));
    }
    if x.n_rows() == 0 {
        return Err(Error::Validation("empty design matrix".into()));
    }
    let n = x.n_rows();
    let mut trees = Vec::with_capacity(tree_count);
    for t in 0..tree_count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut builder = TreeBuilder { x, mtry, node_size, nodes: Vec::new() };
        builder.grow(&sample, &mut rng);
        trees.push(Tree { nodes: builder.nodes });
    }
    let params = ForestParams {
        tree_count,
        mtry,
        node_size,
        trees,
        seed,
        columns: x.columns().to_vec(),
    };
    let rss: f64 = (0..n)
        .map(|i| (x.target()[i] - params.predict_row(x.row(i))).powi(2))
        .sum();
    Ok(ForecastModel {
        params: ModelParams::Forest(params),
        summary: TrainingSummary {
            n_train: n,
            train_mean: stats::mean(x.target()),
            residual_variance: rss / n as f64,
            rank_deficient: false,
        },
    })
}

pub fn predict_forest(params: &ForestParams, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    rows.iter()
        .map(|row| {
            if row.len() != params.columns.len() {
                return Err(Error::Dimension(format!(
                    "feature row has {} values, model expects {}",
                    row.len(),
                    params.columns.len()
                )));
            }
            Ok(params.predict_row(row))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{build_features, FeatureSpec};
    use crate::series::{workdays_from, CashFlowSeries};
    use chrono::{Datelike, NaiveDate, Weekday};

    fn forest_params(model: &ForecastModel) -> &ForestParams {
        match model.params() {
            ModelParams::Forest(p) => p,
            other => panic!("expected forest params, got {other:?}"),
        }
    }

    fn lagged_design(values: Vec<f64>, p: usize) -> DesignMatrix {
        let dates = workdays_from(NaiveDate::from_ymd_opt(2016, 1, 4).unwrap(), values.len());
        let s = CashFlowSeries::new(dates, values).unwrap();
        build_features(s.full_view(), &FeatureSpec::lags_only(p)).unwrap()
    }

    #[test]
    fn forced_leaf_predicts_bootstrap_mean() {
        let values: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let x = lagged_design(values, 1);
        let n = x.n_rows();
        let seed = 13;
        let model = fit_random_forest(&x, 1, 1, n, seed).unwrap();
        let params = forest_params(&model);
        assert_eq!(params.trees[0].nodes.len(), 1);

        // Replicate the per-tree generator to get the bootstrap sample.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let expected: f64 =
            sample.iter().map(|&i| x.target()[i]).sum::<f64>() / n as f64;
        match params.trees[0].nodes[0] {
            Node::Leaf { value } => assert_eq!(value, expected),
            ref other => panic!("expected leaf, got {other:?}"),
        }
    }

    #[test]
    fn constant_target_predicts_it_exactly() {
        let x = lagged_design(vec![5.0; 30], 2);
        // Constant target means zero node SSE, so every tree is a single leaf.
        let model = fit_random_forest(&x, 7, 1, 1, 3).unwrap();
        let params = forest_params(&model);
        let rows: Vec<Vec<f64>> = (0..x.n_rows()).map(|i| x.row(i).to_vec()).collect();
        for v in predict_forest(params, &rows).unwrap() {
            assert_eq!(v, 5.0);
        }
    }

    fn wednesday_series(n: usize) -> CashFlowSeries {
        let dates = workdays_from(NaiveDate::from_ymd_opt(2015, 6, 1).unwrap(), n);
        let values = dates
            .iter()
            .map(|d| if d.weekday() == Weekday::Wed { 100.0 } else { 0.0 })
            .collect();
        CashFlowSeries::new(dates, values).unwrap()
    }

    #[test]
    fn learns_noiseless_weekday_rule_on_held_out_rows() {
        let train = wednesday_series(150);
        let x = build_features(train.full_view(), &FeatureSpec::calendar(false, true)).unwrap();
        let model = fit_random_forest(&x, 50, x.n_cols(), 1, 29).unwrap();
        let params = forest_params(&model);

        let held_out = workdays_from(NaiveDate::from_ymd_opt(2016, 2, 1).unwrap(), 40);
        for date in held_out {
            let row = crate::features::feature_row(params.columns.as_slice(), date, &[]);
            let truth = if date.weekday() == Weekday::Wed { 100.0 } else { 0.0 };
            let got = params.predict_row(&row);
            assert!((got - truth).abs() <= 1.0, "{date}: {got} vs {truth}");
        }
    }

    #[test]
    fn single_tree_forest_equals_that_tree() {
        let values: Vec<f64> = (0..60).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let x = lagged_design(values, 2);
        let model = fit_random_forest(&x, 1, 2, 3, 5).unwrap();
        let params = forest_params(&model);
        for i in 0..x.n_rows() {
            assert_eq!(params.predict_row(x.row(i)), params.trees[0].predict(x.row(i)));
        }
    }

    #[test]
    fn ensemble_prediction_stays_in_per_tree_hull() {
        let values: Vec<f64> = (0..80).map(|i| ((i * 11) % 17) as f64 * 1.5 - 10.0).collect();
        let x = lagged_design(values, 3);
        let model = fit_random_forest(&x, 15, 2, 4, 8).unwrap();
        let params = forest_params(&model);
        for i in 0..x.n_rows() {
            let per_tree: Vec<f64> = params.trees.iter().map(|t| t.predict(x.row(i))).collect();
            let min = per_tree.iter().copied().fold(f64::INFINITY, f64::min);
            let max = per_tree.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ens = params.predict_row(x.row(i));
            assert!(ens >= min - 1e-12 && ens <= max + 1e-12);
        }
    }

    #[test]
    fn internal_nodes_exceed_node_size_and_leaves_are_nonempty() {
        let values: Vec<f64> = (0..100).map(|i| ((i * 29) % 23) as f64 - 11.0).collect();
        let x = lagged_design(values, 2);
        let node_size = 8;
        let model = fit_random_forest(&x, 5, 2, node_size, 17).unwrap();
        let params = forest_params(&model);
        // Re-route every bootstrap sample down its tree and count node loads.
        for (t, tree) in params.trees.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(t as u64));
            let n = x.n_rows();
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut load = vec![0usize; tree.nodes.len()];
            for &i in &sample {
                let mut at = 0;
                loop {
                    load[at] += 1;
                    match tree.nodes[at] {
                        Node::Leaf { .. } => break,
                        Node::Split { col, threshold, left, right } => {
                            at = if x.row(i)[col] <= threshold { left } else { right };
                        }
                    }
                }
            }
            for (j, node) in tree.nodes.iter().enumerate() {
                match node {
                    Node::Leaf { .. } => assert!(load[j] >= 1, "empty leaf {j}"),
                    Node::Split { .. } => {
                        assert!(load[j] > node_size, "internal node {j} has {} samples", load[j])
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let x = lagged_design((0..30).map(f64::from).collect(), 2);
        assert!(fit_random_forest(&x, 0, 1, 1, 0).is_err());
        assert!(fit_random_forest(&x, 1, 0, 1, 0).is_err());
        assert!(fit_random_forest(&x, 1, 3, 1, 0).is_err());
        assert!(fit_random_forest(&x, 1, 1, 0, 0).is_err());
        let model = fit_random_forest(&x, 2, 1, 5, 0).unwrap();
        assert!(matches!(
            predict_forest(forest_params(&model), &[vec![1.0]]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn fit_is_deterministic_and_seed_sensitive() {
        let values: Vec<f64> = (0..70).map(|i| ((i * 3) % 11) as f64).collect();
        let x = lagged_design(values, 2);
        let a = fit_random_forest(&x, 10, 2, 3, 99).unwrap();
        let b = fit_random_forest(&x, 10, 2, 3, 99).unwrap();
        assert_eq!(forest_params(&a), forest_params(&b));
        let c = fit_random_forest(&x, 10, 2, 3, 100).unwrap();
        assert_ne!(forest_params(&a).trees, forest_params(&c).trees);
    }
}
