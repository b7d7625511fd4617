//! Autoregression with power-transformed inputs and AIC order selection.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stats;
use crate::transform::{default_lambda_grid, LambdaTransform};

use super::linalg;
use super::{ForecastModel, ModelParams, TrainingSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct ArParams {
    pub order_p: usize,
    /// Intercept followed by lag coefficients, on the transformed scale.
    pub coefficients: Vec<f64>,
    pub transform: LambdaTransform,
    pub aic: f64,
}

/// Fit AR(p) for p = 0..=max_p on the transformed, demeaned series and keep
/// the order minimizing AIC = n ln(RSS/n) + 2(p+1). All orders are scored on
/// the same n = len - max_p rows so their AICs are comparable.
pub fn fit_ar(train: &[f64], max_p: usize) -> Result<ForecastModel> {
    if train.len() < max_p + 10 {
        return Err(Error::Validation(format!(
            "AR with max order {max_p} needs at least {} observations, got {}",
            max_p + 10,
            train.len()
        )));
    }
    let transform = LambdaTransform::fit(train, &default_lambda_grid())?;
    let z = transform.forward_slice(train);
    let mu = stats::mean(&z);
    let w: Vec<f64> = z.iter().map(|v| v - mu).collect();
    let n_rows = w.len() - max_p;

    let mut best: Option<(f64, usize, Vec<f64>, f64)> = None; // (aic, p, phi, rss)
    for p in 0..=max_p {
        let (phi, rss) = if p == 0 {
            (Vec::new(), w[max_p..].iter().map(|v| v * v).sum::<f64>())
        } else {
            let a = DMatrix::from_fn(n_rows, p, |i, j| w[max_p + i - 1 - j]);
            let y: Vec<f64> = w[max_p..].to_vec();
            let fit = linalg::lstsq_min_norm(&a, &y);
            (fit.coefficients, fit.residual_sum_squares)
        };
        let n = n_rows as f64;
        let aic = n * (rss / n).ln() + 2.0 * (p as f64 + 1.0);
        if best.as_ref().is_none_or(|(b, ..)| aic < *b) {
            best = Some((aic, p, phi, rss));
        }
    }
    let (aic, order_p, phi, rss) = best.expect("at least p=0 was scored");

    // Fold the mean back in: z_t = b0 + sum(phi_i z_{t-i}) with
    // b0 = mu (1 - sum(phi)).
    let mut coefficients = Vec::with_capacity(order_p + 1);
    coefficients.push(mu * (1.0 - phi.iter().sum::<f64>()));
    coefficients.extend_from_slice(&phi);

    Ok(ForecastModel {
        params: ModelParams::Ar(ArParams { order_p, coefficients, transform, aic }),
        summary: TrainingSummary {
            n_train: train.len(),
            train_mean: stats::mean(train),
            residual_variance: rss / n_rows as f64,
            rank_deficient: false,
        },
    })
}

/// Iterated multi-step forecast: one-step predictions on the transformed
/// scale are fed back as inputs, then everything is mapped back to raw scale.
pub fn predict_ar(params: &ArParams, recent: &[f64], horizon: usize) -> Result<Vec<f64>> {
    if recent.len() < params.order_p {
        return Err(Error::Validation(format!(
            "AR({}) prediction needs {} recent values, got {}",
            params.order_p,
            params.order_p,
            recent.len()
        )));
    }
    let mut state: Vec<f64> = recent.iter().map(|&v| params.transform.forward(v)).collect();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut z = params.coefficients[0];
        for i in 1..=params.order_p {
            z += params.coefficients[i] * state[state.len() - i];
        }
        out.push(params.transform.inverse(z)?);
        state.push(z);
    }
    Ok(out)
}
