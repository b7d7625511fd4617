//! Gaussian radial basis function network over k-medoids cluster centres.

use crate::error::{Error, Result};
use crate::features::{DesignMatrix, FeatureColumn};
use crate::stats;
use crate::transform::{default_lambda_grid, LambdaTransform, Standardizer};

use super::kmedoids::fit_kmedoids;
use super::linalg;
use super::{ForecastModel, ModelParams, TrainingSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct RbfParams {
    pub cluster_count: usize,
    pub alpha: u32,
    /// Cluster centres in the transformed feature space; exact copies of
    /// training rows.
    pub medoids: Vec<Vec<f64>>,
    /// Mean member-to-medoid distance per cluster.
    pub rho: Vec<f64>,
    /// Intercept followed by one weight per cluster.
    pub weights: Vec<f64>,
    pub transform: LambdaTransform,
    pub standardizer: Standardizer,
    pub columns: Vec<FeatureColumn>,
}

impl RbfParams {
    /// Map a raw feature row into the space the medoids live in: lag
    /// columns are power-transformed and standardized, dummies pass through.
    fn transformed_row(&self, row: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .zip(row)
            .map(|(col, &v)| {
                if col.is_lag() {
                    self.standardizer.apply(self.transform.forward(v))
                } else {
                    v
                }
            })
            .collect()
    }

    pub fn activations(&self, transformed: &[f64]) -> Vec<f64> {
        self.medoids
            .iter()
            .zip(&self.rho)
            .map(|(c, &rho)| {
                let d2: f64 = c.iter().zip(transformed).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (f64::from(self.alpha) * rho)).exp()
            })
            .collect()
    }

    /// Prediction on the standardized transformed scale.
    fn predict_standardized(&self, row: &[f64]) -> f64 {
        let phi = self.activations(&self.transformed_row(row));
        let mut z = self.weights[0];
        for (k, &a) in phi.iter().enumerate() {
            z += self.weights[k + 1] * a;
        }
        z
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let z = self.predict_standardized(row);
        self.transform.inverse(self.standardizer.invert(z))
    }
}

pub fn fit_rbf(x: &DesignMatrix, k: usize, alpha: u32, seed: u64) -> Result<ForecastModel> {
    if k == 0 {
        return Err(Error::Validation("cluster count must be positive".into()));
    }
    if alpha == 0 {
        return Err(Error::Validation("alpha must be positive".into()));
    }
    if x.n_rows() < k + 1 {
        return Err(Error::Validation(format!(
            "RBF with {k} clusters needs at least {} rows, got {}",
            k + 1,
            x.n_rows()
        )));
    }
    let transform = LambdaTransform::fit(x.target(), &default_lambda_grid())?;
    let z_target = transform.forward_slice(x.target());
    let (standardizer, z_std) = Standardizer::fit(&z_target)?;

    // Feature points: lag columns on the standardized transformed scale,
    // calendar dummies as-is.
    let lag_cols: Vec<bool> = x.columns().iter().map(FeatureColumn::is_lag).collect();
    let points: Vec<Vec<f64>> = (0..x.n_rows())
        .map(|i| {
            x.row(i)
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    if lag_cols[j] {
                        standardizer.apply(transform.forward(v))
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();

    let clustering = fit_kmedoids(&points, k, seed)?;

    // Mean member-to-medoid distance; the medoid itself contributes zero.
    let mut rho = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (i, &slot) in clustering.assignments.iter().enumerate() {
        let c = &points[clustering.medoids[slot]];
        let d: f64 = c.iter().zip(&points[i]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        rho[slot] += d;
        counts[slot] += 1;
    }
    for (r, &c) in rho.iter_mut().zip(&counts) {
        *r /= c as f64;
    }
    // Zero spread (singleton or coincident clusters) would put a zero in the
    // activation denominator; borrow the smallest positive spread instead.
    let min_positive = rho.iter().copied().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min);
    let fallback = if min_positive.is_finite() { min_positive } else { 1.0 };
    for r in &mut rho {
        if *r == 0.0 {
            *r = fallback;
        }
    }

    let medoids: Vec<Vec<f64>> = clustering.medoids.iter().map(|&m| points[m].clone()).collect();
    let params = RbfParams {
        cluster_count: k,
        alpha,
        medoids,
        rho,
        weights: vec![0.0; k + 1],
        transform,
        standardizer,
        columns: x.columns().to_vec(),
    };

    let mut phi_rows = Vec::with_capacity(x.n_rows() * k);
    for p in &points {
        phi_rows.extend(params.activations(p));
    }
    let phi = linalg::with_intercept(x.n_rows(), k, &phi_rows);
    let fit = linalg::lstsq_min_norm(&phi, &z_std);
    let rank_deficient = fit.rank < k + 1;
    let params = RbfParams { weights: fit.coefficients, ..params };

    Ok(ForecastModel {
        params: ModelParams::Rbf(params),
        summary: TrainingSummary {
            n_train: x.n_rows(),
            train_mean: stats::mean(x.target()),
            residual_variance: fit.residual_sum_squares / x.n_rows() as f64,
            rank_deficient,
        },
    })
}

pub fn predict_rbf(params: &RbfParams, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    rows.iter()
        .map(|row| {
            if row.len() != params.columns.len() {
                return Err(Error::Dimension(format!(
                    "feature row has {} values, model expects {}",
                    row.len(),
                    params.columns.len()
                )));
            }
            params.predict_row(row)
        })
        .collect()
}
