//! Naive benchmark: forecast the training mean at every horizon.

use crate::error::{Error, Result};
use crate::stats;

use super::{ForecastModel, ModelParams, TrainingSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct MeanParams {
    pub mean: f64,
}

pub fn fit_mean(train: &[f64]) -> Result<ForecastModel> {
    if train.is_empty() {
        return Err(Error::Validation("mean model needs a nonempty training set".into()));
    }
    let mean = stats::mean(train);
    let residual_variance = train.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / train.len() as f64;
    Ok(ForecastModel {
        params: ModelParams::Mean(MeanParams { mean }),
        summary: TrainingSummary {
            n_train: train.len(),
            train_mean: mean,
            residual_variance,
            rank_deficient: false,
        },
    })
}
