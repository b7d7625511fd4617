//! Ordinary least-squares regression on calendar/lag features.

use crate::error::{Error, Result};
use crate::features::{DesignMatrix, FeatureColumn};
use crate::stats;

use super::linalg;
use super::{ForecastModel, ModelParams, TrainingSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionParams {
    /// Intercept followed by one coefficient per design column.
    pub coefficients: Vec<f64>,
    pub columns: Vec<FeatureColumn>,
}

impl RegressionParams {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut y = self.coefficients[0];
        for (j, &x) in row.iter().enumerate() {
            y += self.coefficients[j + 1] * x;
        }
        y
    }
}

pub fn fit_regression(x: &DesignMatrix) -> Result<ForecastModel> {
    if x.n_rows() <= x.n_cols() {
        return Err(Error::Validation(format!(
            "regression needs more rows than columns ({} rows, {} columns)",
            x.n_rows(),
            x.n_cols()
        )));
    }
    let a = linalg::with_intercept(x.n_rows(), x.n_cols(), x.raw_values());
    let fit = linalg::lstsq_min_norm(&a, x.target());
    if fit.rank < x.n_cols() + 1 {
        let name = match linalg::first_dependent_column(&a) {
            Some(j) if j >= 1 => x.columns()[j - 1].to_string(),
            _ => "intercept".to_string(),
        };
        return Err(Error::Collinear(name));
    }
    Ok(ForecastModel {
        params: ModelParams::Regression(RegressionParams {
            coefficients: fit.coefficients,
            columns: x.columns().to_vec(),
        }),
        summary: TrainingSummary {
            n_train: x.n_rows(),
            train_mean: stats::mean(x.target()),
            residual_variance: fit.residual_sum_squares / x.n_rows() as f64,
            rank_deficient: false,
        },
    })
}
