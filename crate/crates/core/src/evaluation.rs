//! Forecast accuracy evaluation: squared-error ratio against the training
//! -mean benchmark, and fixed/rolling-origin cross-validation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::seeds;
use crate::series::CashFlowSeries;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvMethod {
    FixedOrigin,
    RollingOrigin,
}

impl CvMethod {
    pub fn label(self) -> &'static str {
        match self {
            CvMethod::FixedOrigin => "fixed_origin",
            CvMethod::RollingOrigin => "rolling_origin",
        }
    }
}

/// Squared-error ratio: how a forecast's pooled squared error compares to
/// always predicting the training mean. 0 is perfect, 1 matches the naive
/// benchmark, above 1 is worse than it.
pub fn error_ratio(forecasts: &[f64], actuals: &[f64], train_mean: f64) -> Result<f64> {
    if forecasts.len() != actuals.len() {
        return Err(Error::Dimension(format!(
            "{} forecasts vs {} actuals",
            forecasts.len(),
            actuals.len()
        )));
    }
    if forecasts.is_empty() {
        return Err(Error::Validation("error ratio needs at least one point".into()));
    }
    let num: f64 = forecasts.iter().zip(actuals).map(|(f, y)| (f - y) * (f - y)).sum();
    let den: f64 = actuals.iter().map(|y| (train_mean - y) * (train_mean - y)).sum();
    if den <= 0.0 {
        return Err(Error::Degenerate(
            "benchmark squared error is zero (actuals equal the training mean)".into(),
        ));
    }
    Ok(num / den)
}

/// Cross-validation controls. `g` is the minimum training length, `horizon`
/// the maximum steps ahead. `stride` evaluates every s-th origin (1 = all;
/// the thinning knob for long series). The seed feeds per-origin model fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub g: usize,
    pub horizon: usize,
    pub fixed_origin: bool,
    pub stride: usize,
    pub seed: u64,
}

impl CvOptions {
    pub fn new(g: usize, horizon: usize) -> Self {
        CvOptions { g, horizon, fixed_origin: true, stride: 1, seed: 0 }
    }

    pub fn method(&self) -> CvMethod {
        if self.fixed_origin {
            CvMethod::FixedOrigin
        } else {
            CvMethod::RollingOrigin
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// Pooled error ratio per horizon, index h-1.
    pub per_horizon_epsilon: Vec<f64>,
    /// Evaluated folds per horizon.
    pub per_horizon_folds: Vec<usize>,
    /// Arithmetic mean of the per-horizon ratios.
    pub mean_epsilon: f64,
    /// Sample standard deviation of the ratio across horizons (0 when H=1).
    pub epsilon_std_dev: f64,
    /// Evaluated forecast origins.
    pub fold_count: usize,
    pub method: CvMethod,
    pub g: usize,
    pub horizon: usize,
}

impl EvaluationReport {
    /// `h,epsilon` rows plus a trailing mean row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,epsilon\n");
        for (h, eps) in self.per_horizon_epsilon.iter().enumerate() {
            out.push_str(&format!("{},{}\n", h + 1, eps));
        }
        out.push_str(&format!("mean,{}\n", self.mean_epsilon));
        out
    }
}

struct OriginErrors {
    /// Squared forecast error per horizon (index h-1), as far as this origin reaches.
    forecast_sq: Vec<f64>,
    /// Squared benchmark error per horizon against this origin's training mean.
    benchmark_sq: Vec<f64>,
}

/// Rolling/fixed-origin backtest. For origin i (1-based, thinned by
/// `stride`), the model trains on the first g+i-1 points (fixed origin) or on
/// the g points ending there (rolling origin), then forecasts up to `horizon`
/// steps; squared errors are pooled per horizon across origins, each origin's
/// benchmark being its own training-window mean.
pub fn cross_validate(
    series: &CashFlowSeries,
    spec: &ModelSpec,
    opts: &CvOptions,
) -> Result<EvaluationReport> {
    let t = series.len();
    let (g, h_max) = (opts.g, opts.horizon);
    if g == 0 || h_max == 0 {
        return Err(Error::Validation("g and horizon must be positive".into()));
    }
    if opts.stride == 0 {
        return Err(Error::Validation("stride must be positive".into()));
    }
    if t < g + h_max + 1 {
        return Err(Error::Validation(format!(
            "cross-validation with g={g}, horizon={h_max} needs at least {} observations, got {t}",
            g + h_max + 1
        )));
    }

    let origins: Vec<usize> = (1..=t - g).step_by(opts.stride).collect();
    let per_origin: Vec<OriginErrors> = origins
        .par_iter()
        .map(|&i| -> Result<OriginErrors> {
            let train_start = if opts.fixed_origin { 0 } else { i - 1 };
            let train_end = g + i - 1;
            let train = series.view(train_start..train_end);
            let train_mean = stats::mean(train.values);
            let reach = h_max.min(t - train_end);
            let model = spec.fit(train, seeds::derive(opts.seed, seeds::CV_FIT + i as u64))?;
            let future = &series.dates()[train_end..train_end + reach];
            let forecasts = model.forecast(train, future)?;
            let mut forecast_sq = Vec::with_capacity(reach);
            let mut benchmark_sq = Vec::with_capacity(reach);
            for h in 1..=reach {
                let y = series.values()[train_end + h - 1];
                forecast_sq.push((forecasts[h - 1] - y) * (forecasts[h - 1] - y));
                benchmark_sq.push((train_mean - y) * (train_mean - y));
            }
            Ok(OriginErrors { forecast_sq, benchmark_sq })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut num = vec![0.0; h_max];
    let mut den = vec![0.0; h_max];
    let mut folds = vec![0usize; h_max];
    for origin in &per_origin {
        for (h_idx, (&f, &b)) in origin.forecast_sq.iter().zip(&origin.benchmark_sq).enumerate() {
            num[h_idx] += f;
            den[h_idx] += b;
            folds[h_idx] += 1;
        }
    }
    let mut per_horizon_epsilon = Vec::with_capacity(h_max);
    for h_idx in 0..h_max {
        if den[h_idx] <= 0.0 {
            return Err(Error::Degenerate(format!(
                "benchmark squared error is zero at horizon {}",
                h_idx + 1
            )));
        }
        per_horizon_epsilon.push(num[h_idx] / den[h_idx]);
    }
    let mean_epsilon = stats::mean(&per_horizon_epsilon);
    let epsilon_std_dev = if h_max >= 2 { stats::sample_std(&per_horizon_epsilon) } else { 0.0 };
    Ok(EvaluationReport {
        per_horizon_epsilon,
        per_horizon_folds: folds,
        mean_epsilon,
        epsilon_std_dev,
        fold_count: origins.len(),
        method: opts.method(),
        g,
        horizon: h_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub chosen_index: usize,
    pub chosen: ModelSpec,
    /// R-squared on the validation tail per candidate; None when the
    /// candidate failed to fit or forecast.
    pub scores: Vec<Option<f64>>,
}

/// Complexity ordering for tie-breaks: fewer fitted parameters first. For
/// forests: fewer trees, then larger node size (shallower), then fewer
/// candidate columns.
fn complexity(spec: &ModelSpec) -> (u64, i64, u64) {
    match spec {
        ModelSpec::Mean => (1, 0, 0),
        ModelSpec::Ar { max_p } => (*max_p as u64 + 1, 0, 0),
        ModelSpec::Regression { features } => {
            let cols = features.lag_count
                + if features.day_of_month { 30 } else { 0 }
                + if features.day_of_week { 4 } else { 0 }
                + if features.month { 11 } else { 0 }
                + if features.week_of_year { 52 } else { 0 };
            (cols as u64 + 1, 0, 0)
        }
        ModelSpec::Rbf { clusters, .. } => (*clusters as u64 + 1, 0, 0),
        ModelSpec::RandomForest { trees, mtry, node_size, .. } => {
            (*trees as u64, -(*node_size as i64), *mtry as u64)
        }
    }
}

/// Pick hyperparameters the way the experiments do: fit each candidate on
/// the oldest 80% of the oldest 65% of the series, forecast the remaining
/// 20% validation tail, and keep the candidate with the highest R-squared
/// (1 - RSS/TSS around the tail mean). Ties go to the simpler model.
pub fn parameter_search(
    series: &CashFlowSeries,
    candidates: &[ModelSpec],
    seed: u64,
) -> Result<SearchResult> {
    if candidates.is_empty() {
        return Err(Error::Validation("empty candidate grid".into()));
    }
    let t = series.len();
    let n65 = (0.65 * t as f64).floor() as usize;
    let split = (0.8 * n65 as f64).floor() as usize;
    if split < 2 || n65 - split < 2 {
        return Err(Error::Validation(format!(
            "series of length {t} is too short for a train/validation split"
        )));
    }
    let train = series.view(0..split);
    let tail = series.view(split..n65);
    let tail_mean = stats::mean(tail.values);
    let tss: f64 = tail.values.iter().map(|y| (y - tail_mean) * (y - tail_mean)).sum();
    if tss <= 0.0 {
        return Err(Error::Degenerate("validation tail is constant".into()));
    }

    let scores: Vec<Option<f64>> = candidates
        .iter()
        .enumerate()
        .map(|(idx, candidate)| {
            let model = candidate.fit(train, seeds::derive(seed, seeds::SEARCH + idx as u64)).ok()?;
            let forecasts = model.forecast(train, tail.dates).ok()?;
            let rss: f64 = forecasts
                .iter()
                .zip(tail.values)
                .map(|(f, y)| (f - y) * (f - y))
                .sum();
            Some(1.0 - rss / tss)
        })
        .collect();

    let mut chosen: Option<usize> = None;
    for (idx, score) in scores.iter().enumerate() {
        let Some(s) = score else { continue };
        let better = match chosen {
            None => true,
            Some(c) => {
                let current = scores[c].expect("chosen candidate has a score");
                *s > current
                    || (*s == current && complexity(&candidates[idx]) < complexity(&candidates[c]))
            }
        };
        if better {
            chosen = Some(idx);
        }
    }
    let chosen_index =
        chosen.ok_or_else(|| Error::Degenerate("every candidate failed to fit".into()))?;
    Ok(SearchResult { chosen_index, chosen: candidates[chosen_index].clone(), scores })
}
