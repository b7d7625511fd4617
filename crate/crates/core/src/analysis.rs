//! Cost comparison against the mean-forecast benchmark, synthetic forecasts
//! with controlled accuracy, and the accuracy-to-savings sweep.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::policy::{derive_parameters, simulate_total, CostStructure, PolicyParameters};
use crate::seeds;
use crate::series::CashFlowSeries;
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSaving {
    pub scenario: String,
    pub max_pct: f64,
    /// Average cost per simulated day using the candidate's forecasts.
    pub candidate_cost: f64,
    /// Average cost per simulated day forecasting the training mean.
    pub mean_cost: f64,
    /// mean_cost - candidate_cost, per day.
    pub absolute_saving: f64,
    /// 1 - candidate/mean; None when the benchmark cost is not positive.
    pub relative_saving: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavingsReport {
    pub rows: Vec<ScenarioSaving>,
    pub forecaster: String,
    pub g: usize,
    pub horizon: usize,
}

impl SavingsReport {
    /// `scenario,risk,cost_candidate,cost_mean,saving_abs,saving_pct` rows.
    /// `saving_pct` is blank when the benchmark cost is not positive.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,risk,cost_candidate,cost_mean,saving_abs,saving_pct\n");
        for row in &self.rows {
            let pct = row
                .relative_saving
                .map(|r| (100.0 * r).to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.scenario, row.max_pct, row.candidate_cost, row.mean_cost,
                row.absolute_saving, pct
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub g: usize,
    pub horizon: usize,
    pub max_pct: f64,
    pub stride: usize,
    pub seed: u64,
    pub workdays_per_year: f64,
}

impl CompareOptions {
    pub fn new(g: usize, horizon: usize, max_pct: f64) -> Self {
        CompareOptions { g, horizon, max_pct, stride: 1, seed: 0, workdays_per_year: 250.0 }
    }
}

struct OriginCosts {
    candidate: Vec<f64>,
    mean: Vec<f64>,
}

/// Backtest the policy cost of a candidate forecaster against the
/// mean-forecast benchmark. For each origin the candidate model and the mean
/// are fitted on the first g+i-1 observations, both forecast the next
/// `horizon` days, the policy limits are derived from the same training
/// window, and each track is simulated against the actual flows from the
/// lower rebalance level. Costs are pooled into per-scenario daily averages.
pub fn compare_savings(
    series: &CashFlowSeries,
    spec: &ModelSpec,
    scenarios: &[CostStructure],
    opts: &CompareOptions,
) -> Result<SavingsReport> {
    let t = series.len();
    let (g, horizon) = (opts.g, opts.horizon);
    if scenarios.is_empty() {
        return Err(Error::Validation("no cost structures to compare".into()));
    }
    if g == 0 || horizon == 0 || opts.stride == 0 {
        return Err(Error::Validation("g, horizon and stride must be positive".into()));
    }
    if t < g + horizon + 1 {
        return Err(Error::Validation(format!(
            "savings comparison with g={g}, horizon={horizon} needs at least {} observations, got {t}",
            g + horizon + 1
        )));
    }

    let origins: Vec<usize> = (1..=t - g - horizon + 1).step_by(opts.stride).collect();
    let per_origin: Vec<OriginCosts> = origins
        .par_iter()
        .map(|&i| -> Result<OriginCosts> {
            let train = series.view(0..g + i - 1);
            let params = derive_parameters(train.values, opts.max_pct)?;
            let model = spec.fit(train, seeds::derive(opts.seed, seeds::COMPARE_FIT + i as u64))?;
            let window = g + i - 1..g + i - 1 + horizon;
            let candidate_track = model.forecast(train, &series.dates()[window.clone()])?;
            let mean_track = vec![stats::mean(train.values); horizon];
            let flows = &series.values()[window];
            let start = params.lower_rebalance;
            let mut candidate = Vec::with_capacity(scenarios.len());
            let mut mean = Vec::with_capacity(scenarios.len());
            for costs in scenarios {
                candidate.push(simulate_total(
                    flows,
                    &candidate_track,
                    &params,
                    costs,
                    start,
                    opts.workdays_per_year,
                )?);
                mean.push(simulate_total(
                    flows,
                    &mean_track,
                    &params,
                    costs,
                    start,
                    opts.workdays_per_year,
                )?);
            }
            Ok(OriginCosts { candidate, mean })
        })
        .collect::<Result<Vec<_>>>()?;

    let simulated_days = (origins.len() * horizon) as f64;
    let rows = scenarios
        .iter()
        .enumerate()
        .map(|(j, costs)| {
            let candidate_total: f64 = per_origin.iter().map(|o| o.candidate[j]).sum();
            let mean_total: f64 = per_origin.iter().map(|o| o.mean[j]).sum();
            let candidate_cost = candidate_total / simulated_days;
            let mean_cost = mean_total / simulated_days;
            let relative_saving =
                (mean_total > 0.0).then(|| 1.0 - candidate_total / mean_total);
            ScenarioSaving {
                scenario: costs.name.clone(),
                max_pct: opts.max_pct,
                candidate_cost,
                mean_cost,
                absolute_saving: mean_cost - candidate_cost,
                relative_saving,
            }
        })
        .collect();
    Ok(SavingsReport {
        rows,
        forecaster: spec.family().label().to_string(),
        g,
        horizon,
    })
}

/// Actuals plus independent Gaussian noise of standard deviation `sigma`;
/// sigma 0 returns the actuals unchanged.
pub fn synthesize_forecasts(actuals: &[f64], sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::Validation(format!("sigma must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(actuals.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    Ok(actuals.iter().map(|y| y + normal.sample(&mut rng)).collect())
}

/// The default noise grid: {0, 0.1, ..., 1.5} x the flows' standard deviation.
pub fn default_sigma_grid(flow_std: f64) -> Vec<f64> {
    (0..=15).map(|k| k as f64 * 0.1 * flow_std).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSaving {
    pub max_pct: f64,
    /// 1 - candidate/mean total cost, pooled over scenarios and origins.
    pub relative_saving: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub sigma: f64,
    pub epsilon_bar: f64,
    pub savings: Vec<RiskSaving>,
    /// Seed that generated this point's synthetic forecasts.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub g: usize,
    pub horizon: usize,
    pub stride: usize,
    pub seed: u64,
    pub workdays_per_year: f64,
}

impl SweepOptions {
    pub fn new(g: usize, horizon: usize) -> Self {
        SweepOptions { g, horizon, stride: 1, seed: 0, workdays_per_year: 250.0 }
    }
}

/// Per-origin state that does not depend on the noise level.
struct SweepOrigin {
    /// 1-based origin index.
    index: usize,
    train_mean: f64,
    params: Vec<PolicyParameters>,
}

/// Trade accuracy for savings on one series: for each noise level, replace
/// model predictions with noisy copies of the actuals over the test region,
/// score them with the mean error ratio over the comparison folds, and run
/// the same policy comparison as `compare_savings`. The mean-forecast
/// benchmark and the policy limits are noise-independent, so they are
/// computed once. Each grid point draws its noise from `seed + grid index`.
pub fn accuracy_savings_sweep(
    series: &CashFlowSeries,
    sigma_grid: &[f64],
    scenarios: &[CostStructure],
    risk_levels: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<SweepPoint>> {
    let t = series.len();
    let (g, horizon) = (opts.g, opts.horizon);
    if sigma_grid.is_empty() {
        return Err(Error::Validation("empty sigma grid".into()));
    }
    if sigma_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Validation("sigma grid must be sorted ascending".into()));
    }
    if sigma_grid.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::Validation("sigma grid values must be nonnegative".into()));
    }
    if risk_levels.is_empty() || scenarios.is_empty() {
        return Err(Error::Validation("need at least one risk level and cost structure".into()));
    }
    if g == 0 || horizon == 0 || opts.stride == 0 {
        return Err(Error::Validation("g, horizon and stride must be positive".into()));
    }
    if t < g + horizon + 1 {
        return Err(Error::Validation(format!(
            "sweep with g={g}, horizon={horizon} needs at least {} observations, got {t}",
            g + horizon + 1
        )));
    }

    let values = series.values();
    let origins: Vec<SweepOrigin> = (1..=t - g - horizon + 1)
        .step_by(opts.stride)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| -> Result<SweepOrigin> {
            let train = &values[0..g + i - 1];
            let params = risk_levels
                .iter()
                .map(|&risk| derive_parameters(train, risk))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepOrigin { index: i, train_mean: stats::mean(train), params })
        })
        .collect::<Result<Vec<_>>>()?;

    // Benchmark squared error per horizon and benchmark policy costs per
    // risk: both are noise-free, shared by every grid point.
    let mut benchmark_sq = vec![0.0; horizon];
    for origin in &origins {
        let base = g + origin.index - 1;
        for h in 1..=horizon {
            let y = values[base + h - 1];
            benchmark_sq[h - 1] += (origin.train_mean - y) * (origin.train_mean - y);
        }
    }
    if benchmark_sq.iter().any(|&d| d <= 0.0) {
        return Err(Error::Degenerate("benchmark squared error is zero at some horizon".into()));
    }
    let mean_cost_by_risk: Vec<f64> = risk_levels
        .iter()
        .enumerate()
        .map(|(r, _)| -> Result<f64> {
            let mut total = 0.0;
            for origin in &origins {
                let base = g + origin.index - 1;
                let flows = &values[base..base + horizon];
                let track = vec![origin.train_mean; horizon];
                let params = &origin.params[r];
                for costs in scenarios {
                    total += simulate_total(
                        flows,
                        &track,
                        params,
                        costs,
                        params.lower_rebalance,
                        opts.workdays_per_year,
                    )?;
                }
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>>>()?;

    sigma_grid
        .par_iter()
        .enumerate()
        .map(|(k, &sigma)| -> Result<SweepPoint> {
            let point_seed = opts.seed.wrapping_add(k as u64);
            let synthetic = synthesize_forecasts(&values[g..], sigma, point_seed)?;
            let track_at = |idx: usize| synthetic[idx - g];

            let mut forecast_sq = vec![0.0; horizon];
            for origin in &origins {
                let base = g + origin.index - 1;
                for h in 1..=horizon {
                    let y = values[base + h - 1];
                    let diff = track_at(base + h - 1) - y;
                    forecast_sq[h - 1] += diff * diff;
                }
            }
            let per_h: Vec<f64> = forecast_sq
                .iter()
                .zip(&benchmark_sq)
                .map(|(num, den)| num / den)
                .collect();
            let epsilon_bar = stats::mean(&per_h);

            let savings = risk_levels
                .iter()
                .enumerate()
                .map(|(r, &risk)| -> Result<RiskSaving> {
                    let mut candidate_total = 0.0;
                    for origin in &origins {
                        let base = g + origin.index - 1;
                        let flows = &values[base..base + horizon];
                        let track = &synthetic[base - g..base - g + horizon];
                        let params = &origin.params[r];
                        for costs in scenarios {
                            candidate_total += simulate_total(
                                flows,
                                track,
                                params,
                                costs,
                                params.lower_rebalance,
                                opts.workdays_per_year,
                            )?;
                        }
                    }
                    let mean_total = mean_cost_by_risk[r];
                    let relative_saving =
                        if mean_total > 0.0 { 1.0 - candidate_total / mean_total } else { 0.0 };
                    Ok(RiskSaving { max_pct: risk, relative_saving })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepPoint { sigma, epsilon_bar, savings, seed: point_seed })
        })
        .collect()
}

/// `sigma,epsilon_bar,risk,savings_pct` rows, one per point and risk level.
pub fn build_sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("sigma,epsilon_bar,risk,savings_pct\n");
    for point in points {
        for saving in &point.savings {
            out.push_str(&format!(
                "{},{},{},{}\n",
                point.sigma,
                point.epsilon_bar,
                saving.max_pct,
                100.0 * saving.relative_saving
            ));
        }
    }
    out
}

const SWEEP_PALETTE: [&str; 5] = ["#1b6ca8", "#d1495b", "#2e933c", "#7b4b94", "#c17817"];

/// Self-contained line plot: mean error ratio on the x-axis, savings percent
/// on the y-axis, one polyline per risk level, optional vertical reference
/// lines at labeled error-ratio values.
pub fn build_sweep_svg(points: &[SweepPoint], references: &[(f64, String)]) -> Result<String> {
    if points.len() < 2 {
        return Err(Error::Validation("sweep plot needs at least two points".into()));
    }
    let risk_count = points[0].savings.len();
    if points.iter().any(|p| p.savings.len() != risk_count) || risk_count == 0 {
        return Err(Error::Validation("sweep points disagree on risk levels".into()));
    }

    let (width, height) = (860.0, 520.0);
    let (left, right, top, bottom) = (70.0, 160.0, 20.0, 60.0);
    let (plot_w, plot_h) = (width - left - right, height - top - bottom);

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = 0.0f64;
    let mut y_max = f64::NEG_INFINITY;
    for p in points {
        x_min = x_min.min(p.epsilon_bar);
        x_max = x_max.max(p.epsilon_bar);
        for s in &p.savings {
            y_min = y_min.min(100.0 * s.relative_saving);
            y_max = y_max.max(100.0 * s.relative_saving);
        }
    }
    for (x, _) in references {
        x_min = x_min.min(*x);
        x_max = x_max.max(*x);
    }
    if x_max - x_min <= 0.0 {
        x_max = x_min + 1.0;
    }
    if y_max - y_min <= 0.0 {
        y_max = y_min + 1.0;
    }
    let x_pad = 0.04 * (x_max - x_min);
    let y_pad = 0.06 * (y_max - y_min);
    let (x_lo, x_hi) = (x_min - x_pad, x_max + x_pad);
    let (y_lo, y_hi) = (y_min - y_pad, y_max + y_pad);
    let sx = move |x: f64| left + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = move |y: f64| top + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    );
    svg.push_str(&format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#444\"/>\n"
    ));

    for tick in 0..=5 {
        let fx = x_lo + (x_hi - x_lo) * tick as f64 / 5.0;
        let px = sx(fx);
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#444\"/>\n\
             <text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{fx:.2}</text>\n",
            top + plot_h,
            top + plot_h + 6.0,
            top + plot_h + 22.0
        ));
        let fy = y_lo + (y_hi - y_lo) * tick as f64 / 5.0;
        let py = sy(fy);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{left}\" y2=\"{py:.1}\" stroke=\"#444\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{fy:.1}</text>\n",
            left - 6.0,
            left - 10.0,
            py + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">mean error ratio</text>\n",
        left + plot_w / 2.0,
        height - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.1})\">savings vs mean forecast (%)</text>\n",
        top + plot_h / 2.0,
        top + plot_h / 2.0
    ));

    for (x, label) in references {
        let px = sx(*x);
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{top}\" x2=\"{px:.1}\" y2=\"{:.1}\" \
             stroke=\"#888\" stroke-dasharray=\"5 4\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" fill=\"#555\">{label}</text>\n",
            top + plot_h,
            px + 4.0,
            top + 14.0
        ));
    }

    for r in 0..risk_count {
        let color = SWEEP_PALETTE[r % SWEEP_PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|p| {
                format!("{:.1},{:.1}", sx(p.epsilon_bar), sy(100.0 * p.savings[r].relative_saving))
            })
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            coords.join(" ")
        ));
        for coord in &coords {
            let (cx, cy) = coord.split_once(',').expect("coord pair");
            svg.push_str(&format!(
                "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"3\" fill=\"{color}\"/>\n"
            ));
        }
        let ly = top + 16.0 + 20.0 * r as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">risk {:.0}%</text>\n",
            width - right + 10.0,
            width - right + 34.0,
            width - right + 40.0,
            ly + 4.0,
            100.0 * points[0].savings[r].max_pct
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Write `sweep.csv` and `sweep.svg` under `out_dir`; returns both paths.
pub fn render_sweep(
    points: &[SweepPoint],
    out_dir: &Path,
    references: &[(f64, String)],
) -> Result<(PathBuf, PathBuf)> {
    let svg = build_sweep_svg(points, references)?;
    let csv = build_sweep_csv(points);
    let csv_path = out_dir.join("sweep.csv");
    let svg_path = out_dir.join("sweep.svg");
    std::fs::write(&csv_path, csv)?;
    std::fs::write(&svg_path, svg)?;
    Ok((csv_path, svg_path))
}
