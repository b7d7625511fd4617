//! Forecasting model families under one fit/predict contract.
//!
//! `ModelSpec` names a family plus hyperparameters; fitting yields a
//! `ForecastModel` whose `forecast` produces multi-step predictions by
//! feeding one-step forecasts back into lag features.

mod ar;
mod forest;
pub mod kmedoids;
mod linalg;
mod mean;
mod rbf;
mod regression;

pub use ar::{fit_ar, predict_ar, ArParams};
pub use forest::{fit_random_forest, predict_forest, ForestParams, Node, Tree};
pub use kmedoids::{fit_kmedoids, Clustering};
pub use mean::{fit_mean, MeanParams};
pub use rbf::{fit_rbf, predict_rbf, RbfParams};
pub use regression::{fit_regression, RegressionParams};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::features::{build_features, feature_row, FeatureColumn, FeatureSpec};
use crate::series::SeriesView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Mean,
    Ar,
    Regression,
    Rbf,
    RandomForest,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Mean => "mean",
            Family::Ar => "ar",
            Family::Regression => "reg",
            Family::Rbf => "rbf",
            Family::RandomForest => "rf",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Fit statistics shared by every family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSummary {
    pub n_train: usize,
    /// Mean of the raw training targets; the benchmark forecasters use it.
    pub train_mean: f64,
    /// Mean squared residual on the scale the family was fitted on.
    pub residual_variance: f64,
    /// True when weights came from a minimum-norm solve of a singular system.
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Mean(MeanParams),
    Ar(ArParams),
    Regression(RegressionParams),
    Rbf(RbfParams),
    Forest(ForestParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    params: ModelParams,
    summary: TrainingSummary,
}

/// A model family with its hyperparameters, ready to fit on any window.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Mean,
    Ar { max_p: usize },
    Regression { features: FeatureSpec },
    Rbf { features: FeatureSpec, clusters: usize, alpha: u32 },
    RandomForest { features: FeatureSpec, trees: usize, mtry: usize, node_size: usize },
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Mean => Family::Mean,
            ModelSpec::Ar { .. } => Family::Ar,
            ModelSpec::Regression { .. } => Family::Regression,
            ModelSpec::Rbf { .. } => Family::Rbf,
            ModelSpec::RandomForest { .. } => Family::RandomForest,
        }
    }

    /// Fit on a training window. The seed matters only to the seeded
    /// families (RBF clustering, forest bootstraps).
    pub fn fit(&self, train: SeriesView<'_>, seed: u64) -> Result<ForecastModel> {
        match self {
            ModelSpec::Mean => fit_mean(train.values),
            ModelSpec::Ar { max_p } => fit_ar(train.values, *max_p),
            ModelSpec::Regression { features } => {
                let x = build_features(train, features)?;
                fit_regression(&x)
            }
            ModelSpec::Rbf { features, clusters, alpha } => {
                let x = build_features(train, features)?;
                fit_rbf(&x, *clusters, *alpha, seed)
            }
            ModelSpec::RandomForest { features, trees, mtry, node_size } => {
                let x = build_features(train, features)?;
                fit_random_forest(&x, *trees, *mtry, *node_size, seed)
            }
        }
    }
}

impl ForecastModel {
    pub fn family(&self) -> Family {
        match self.params {
            ModelParams::Mean(_) => Family::Mean,
            ModelParams::Ar(_) => Family::Ar,
            ModelParams::Regression(_) => Family::Regression,
            ModelParams::Rbf(_) => Family::Rbf,
            ModelParams::Forest(_) => Family::RandomForest,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn training_summary(&self) -> &TrainingSummary {
        &self.summary
    }

    /// How many trailing history values `forecast` needs.
    pub fn history_needed(&self) -> usize {
        fn max_lag(columns: &[FeatureColumn]) -> usize {
            columns
                .iter()
                .filter_map(|c| match c {
                    FeatureColumn::Lag(k) => Some(*k),
                    _ => None,
                })
                .max()
                .unwrap_or(0)
        }
        match &self.params {
            ModelParams::Mean(_) => 0,
            ModelParams::Ar(p) => p.order_p,
            ModelParams::Regression(p) => max_lag(&p.columns),
            ModelParams::Rbf(p) => max_lag(&p.columns),
            ModelParams::Forest(p) => max_lag(&p.columns),
        }
    }

    /// Multi-step forecast for the given future dates, using the tail of
    /// `history` for lag features and feeding predictions back as the window
    /// rolls forward.
    pub fn forecast(&self, history: SeriesView<'_>, future_dates: &[NaiveDate]) -> Result<Vec<f64>> {
        let needed = self.history_needed();
        if history.len() < needed {
            return Err(Error::Validation(format!(
                "forecast needs {needed} trailing history values, got {}",
                history.len()
            )));
        }
        match &self.params {
            ModelParams::Mean(p) => Ok(vec![p.mean; future_dates.len()]),
            ModelParams::Ar(p) => {
                let recent = &history.values[history.len() - needed..];
                predict_ar(p, recent, future_dates.len())
            }
            ModelParams::Regression(_) | ModelParams::Rbf(_) | ModelParams::Forest(_) => {
                let columns: &[FeatureColumn] = match &self.params {
                    ModelParams::Regression(p) => &p.columns,
                    ModelParams::Rbf(p) => &p.columns,
                    ModelParams::Forest(p) => &p.columns,
                    _ => unreachable!(),
                };
                // recent[k-1] = value k days back from the date being predicted.
                let mut recent: Vec<f64> =
                    history.values[history.len() - needed..].iter().rev().copied().collect();
                let mut out = Vec::with_capacity(future_dates.len());
                for &date in future_dates {
                    let row = feature_row(columns, date, &recent);
                    let y = match &self.params {
                        ModelParams::Regression(p) => p.predict_row(&row),
                        ModelParams::Rbf(p) => p.predict_row(&row)?,
                        ModelParams::Forest(p) => p.predict_row(&row),
                        _ => unreachable!(),
                    };
                    out.push(y);
                    if needed > 0 {
                        recent.pop();
                        recent.insert(0, y);
                    }
                }
                Ok(out)
            }
        }
    }
}
