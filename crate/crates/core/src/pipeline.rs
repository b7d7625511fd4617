//! Configuration-driven pipeline: parse a TOML run description, execute one
//! of the commands, and emit seed- and hash-stamped artifacts.
//!
//! Every artifact starts with one comment line, `# cashcast seed=N
//! config=HASH` (`<!-- ... -->` for SVG), where HASH is the first 16 hex
//! digits of the SHA-256 of the canonical serialized config. Reruns with the
//! same effective config are byte-identical.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    accuracy_savings_sweep, build_sweep_csv, build_sweep_svg, compare_savings, default_sigma_grid,
    CompareOptions, SweepOptions,
};
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate, parameter_search, CvOptions};
use crate::features::FeatureSpec;
use crate::models::{Family, ModelSpec};
use crate::policy::{cost_scenarios, CostStructure};
use crate::series::{CashFlowSeries, Variant};
use crate::{seeds, stats};

/// A knob that takes one value or a list; a list turns the knob into a
/// search grid resolved by [`parameter_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn items(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(vs) => vs.clone(),
        }
    }
}

/// Forecaster selection. Knobs that do not apply to the chosen family are
/// rejected rather than ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// One of `mean`, `ar`, `reg`, `rbf`, `rf`.
    pub family: String,
    pub max_p: Option<OneOrMany<usize>>,
    pub lags: Option<OneOrMany<usize>>,
    pub day_of_month: Option<bool>,
    pub day_of_week: Option<bool>,
    pub month: Option<bool>,
    pub week_of_year: Option<bool>,
    pub clusters: Option<OneOrMany<usize>>,
    pub alpha: Option<OneOrMany<u32>>,
    pub trees: Option<OneOrMany<usize>>,
    pub mtry: Option<OneOrMany<usize>>,
    pub node_size: Option<OneOrMany<usize>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            family: "mean".into(),
            max_p: None,
            lags: None,
            day_of_month: None,
            day_of_week: None,
            month: None,
            week_of_year: None,
            clusters: None,
            alpha: None,
            trees: None,
            mtry: None,
            node_size: None,
        }
    }
}

impl ModelConfig {
    fn family(&self) -> Result<Family> {
        Ok(match self.family.as_str() {
            "mean" => Family::Mean,
            "ar" => Family::Ar,
            "reg" => Family::Regression,
            "rbf" => Family::Rbf,
            "rf" => Family::RandomForest,
            other => {
                return Err(Error::Config(format!(
                    "unknown model family `{other}`; expected mean, ar, reg, rbf, or rf"
                )))
            }
        })
    }

    fn reject_unused(&self, family: Family) -> Result<()> {
        let fields: [(&str, bool); 11] = [
            ("max_p", self.max_p.is_some()),
            ("lags", self.lags.is_some()),
            ("day_of_month", self.day_of_month.is_some()),
            ("day_of_week", self.day_of_week.is_some()),
            ("month", self.month.is_some()),
            ("week_of_year", self.week_of_year.is_some()),
            ("clusters", self.clusters.is_some()),
            ("alpha", self.alpha.is_some()),
            ("trees", self.trees.is_some()),
            ("mtry", self.mtry.is_some()),
            ("node_size", self.node_size.is_some()),
        ];
        let allowed: &[&str] = match family {
            Family::Mean => &[],
            Family::Ar => &["max_p"],
            Family::Regression => &["lags", "day_of_month", "day_of_week", "month", "week_of_year"],
            Family::Rbf => {
                &["lags", "day_of_month", "day_of_week", "month", "week_of_year", "clusters", "alpha"]
            }
            Family::RandomForest => {
                &["lags", "day_of_month", "day_of_week", "month", "week_of_year", "trees", "mtry", "node_size"]
            }
        };
        for (name, set) in fields {
            if set && !allowed.contains(&name) {
                return Err(Error::Config(format!(
                    "`model.{name}` does not apply to the {} family",
                    self.family
                )));
            }
        }
        Ok(())
    }

    fn feature_specs(&self) -> Vec<FeatureSpec> {
        let lags = self.lags.as_ref().map_or(vec![0], OneOrMany::items);
        lags.into_iter()
            .map(|lag_count| FeatureSpec {
                day_of_month: self.day_of_month.unwrap_or(false),
                day_of_week: self.day_of_week.unwrap_or(true),
                month: self.month.unwrap_or(false),
                week_of_year: self.week_of_year.unwrap_or(false),
                lag_count,
                ..FeatureSpec::default()
            })
            .collect()
    }

    /// Expand the configured knobs into the candidate grid. A single
    /// candidate is fitted directly; several go through parameter search.
    pub fn candidates(&self) -> Result<Vec<ModelSpec>> {
        let family = self.family()?;
        self.reject_unused(family)?;
        let mut specs = Vec::new();
        match family {
            Family::Mean => specs.push(ModelSpec::Mean),
            Family::Ar => {
                for max_p in self.max_p.as_ref().map_or(vec![10], OneOrMany::items) {
                    specs.push(ModelSpec::Ar { max_p });
                }
            }
            Family::Regression => {
                for features in self.feature_specs() {
                    specs.push(ModelSpec::Regression { features });
                }
            }
            Family::Rbf => {
                for features in self.feature_specs() {
                    for clusters in self.clusters.as_ref().map_or(vec![25], OneOrMany::items) {
                        for alpha in self.alpha.as_ref().map_or(vec![1], OneOrMany::items) {
                            specs.push(ModelSpec::Rbf { features, clusters, alpha });
                        }
                    }
                }
            }
            Family::RandomForest => {
                for features in self.feature_specs() {
                    for trees in self.trees.as_ref().map_or(vec![100], OneOrMany::items) {
                        for mtry in self.mtry.as_ref().map_or(vec![2], OneOrMany::items) {
                            for node_size in
                                self.node_size.as_ref().map_or(vec![5], OneOrMany::items)
                            {
                                specs.push(ModelSpec::RandomForest {
                                    features,
                                    trees,
                                    mtry,
                                    node_size,
                                });
                            }
                        }
                    }
                }
            }
        }
        if specs.is_empty() {
            return Err(Error::Config("model grid expands to no candidates".into()));
        }
        Ok(specs)
    }
}

fn default_g_fraction() -> f64 {
    0.65
}

fn default_horizon() -> usize {
    100
}

fn default_stride() -> usize {
    1
}

fn default_risk_levels() -> Vec<f64> {
    vec![0.05, 0.10, 0.15]
}

fn default_workdays() -> f64 {
    250.0
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One run description. Unknown keys are rejected; everything except
/// `input` has a documented default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Series CSV (`date,amount` rows, `#` comments ignored).
    pub input: PathBuf,
    /// Optional dataset variant derived from the input before anything runs.
    pub variant: Option<Variant>,
    /// Master seed; every stochastic stage derives its own stream from it.
    #[serde(default)]
    pub seed: u64,
    /// Fraction of the series used as the initial training window.
    #[serde(default = "default_g_fraction")]
    pub g_fraction: f64,
    /// Forecast horizon H.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Evaluate every `stride`-th backtest origin.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// MaxPct risk levels for the policy comparison.
    #[serde(default = "default_risk_levels")]
    pub risk_levels: Vec<f64>,
    /// Cost-structure names to run; empty means all of them.
    #[serde(default)]
    pub scenarios: Vec<String>,
    /// Annual-to-daily conversion for the holding and shortage rates.
    #[serde(default = "default_workdays")]
    pub workdays_per_year: f64,
    /// Sweep noise grid as multiples of the training-window std dev;
    /// defaults to 0.0, 0.1, ..., 1.5.
    pub sigma_scales: Option<Vec<f64>>,
    /// What improving forecast accuracy would cost, as a percentage of the
    /// benchmark policy cost; the sweep reports whether savings exceed it.
    pub improvement_cost_pct: Option<f64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub model: ModelConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input.as_os_str().is_empty() {
            return Err(Error::Config("`input` must not be empty".into()));
        }
        if !(self.g_fraction > 0.0 && self.g_fraction < 1.0) {
            return Err(Error::Config(format!(
                "`g_fraction` must be strictly between 0 and 1, got {}",
                self.g_fraction
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("`horizon` must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("`stride` must be at least 1".into()));
        }
        if self.risk_levels.is_empty() {
            return Err(Error::Config("`risk_levels` must not be empty".into()));
        }
        for &r in &self.risk_levels {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::Config(format!(
                    "`risk_levels` entries must lie strictly between 0 and 1, got {r}"
                )));
            }
        }
        if !(self.workdays_per_year.is_finite() && self.workdays_per_year > 0.0) {
            return Err(Error::Config(format!(
                "`workdays_per_year` must be positive, got {}",
                self.workdays_per_year
            )));
        }
        if let Some(scales) = &self.sigma_scales {
            if scales.is_empty() {
                return Err(Error::Config("`sigma_scales` must not be empty".into()));
            }
            for &s in scales {
                if !(s.is_finite() && s >= 0.0) {
                    return Err(Error::Config(format!(
                        "`sigma_scales` entries must be finite and nonnegative, got {s}"
                    )));
                }
            }
            if scales.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(
                    "`sigma_scales` must be strictly increasing".into(),
                ));
            }
        }
        if let Some(cost) = self.improvement_cost_pct {
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(Error::Config(format!(
                    "`improvement_cost_pct` must be finite and nonnegative, got {cost}"
                )));
            }
        }
        self.selected_scenarios()?;
        self.model.candidates()?;
        Ok(())
    }

    /// The configured cost structures, or all of them when none are named.
    pub fn selected_scenarios(&self) -> Result<Vec<CostStructure>> {
        let all = cost_scenarios();
        if self.scenarios.is_empty() {
            return Ok(all);
        }
        let mut picked = Vec::with_capacity(self.scenarios.len());
        for name in &self.scenarios {
            match all.iter().find(|c| &c.name == name) {
                Some(c) => picked.push(c.clone()),
                None => {
                    return Err(Error::Config(format!(
                        "`scenarios` names unknown cost structure `{name}`"
                    )))
                }
            }
        }
        Ok(picked)
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialized config.
    pub fn hash(&self) -> Result<String> {
        let canonical = toml::to_string(self)
            .map_err(|e| Error::Config(format!("config does not serialize: {e}")))?;
        let digest = Sha256::digest(canonical.as_bytes());
        Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
    }

    /// The comment line stamped at the top of every CSV artifact.
    pub fn header_line(&self) -> Result<String> {
        Ok(format!("# cashcast seed={} config={}", self.seed, self.hash()?))
    }

    fn svg_header(&self) -> Result<String> {
        Ok(format!("<!-- cashcast seed={} config={} -->", self.seed, self.hash()?))
    }

    fn training_length(&self, t: usize) -> usize {
        (self.g_fraction * t as f64).floor() as usize
    }
}

/// Parse and validate a TOML run description, filling documented defaults.
pub fn validate_config(raw: &str) -> Result<PipelineConfig> {
    let config: PipelineConfig =
        toml::from_str(raw).map_err(|e| Error::Config(e.to_string().trim().replace('\n', " ")))?;
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Summarize,
    Derive,
    Cv,
    Compare,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    CsvPlot,
}

/// What a command produced: artifact paths plus report lines for stdout.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl RunOutput {
    fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }
}

/// Execute one command against a validated config.
pub fn run(command: Command, config: &PipelineConfig, format: OutputFormat) -> Result<RunOutput> {
    config.validate()?;
    let series = load_input(config)?;
    log::info!(
        "loaded {} observations ({}) from {}",
        series.len(),
        series.variant(),
        config.input.display()
    );
    std::fs::create_dir_all(&config.out_dir)?;
    match command {
        Command::Summarize => cmd_summarize(config, &series),
        Command::Derive => cmd_derive(config, &series),
        Command::Cv => cmd_cv(config, &series),
        Command::Compare => cmd_compare(config, &series),
        Command::Sweep => cmd_sweep(config, &series, format),
    }
}

fn load_input(config: &PipelineConfig) -> Result<CashFlowSeries> {
    let series = CashFlowSeries::load(&config.input)?;
    match config.variant {
        Some(variant) => {
            series.derive_variant(variant, Some(seeds::derive(config.seed, seeds::VARIANT)))
        }
        None => Ok(series),
    }
}

fn write_artifact(config: &PipelineConfig, name: &str, body: &str) -> Result<PathBuf> {
    let path = config.out_dir.join(name);
    let header = if name.ends_with(".svg") {
        config.svg_header()?
    } else {
        config.header_line()?
    };
    std::fs::write(&path, format!("{header}\n{body}"))?;
    Ok(path)
}

fn cmd_summarize(config: &PipelineConfig, series: &CashFlowSeries) -> Result<RunOutput> {
    let s = series.summarize()?;
    let body = format!(
        "variant,length,mean,std_dev,excess_kurtosis\n{},{},{},{},{}\n",
        series.variant(),
        s.length,
        s.mean,
        s.std_dev,
        s.excess_kurtosis
    );
    let mut out = RunOutput::default();
    out.files.push(write_artifact(config, "summary.csv", &body)?);
    Ok(out)
}

fn cmd_derive(config: &PipelineConfig, series: &CashFlowSeries) -> Result<RunOutput> {
    if config.variant.is_none() {
        return Err(Error::Config("the derive command needs `variant` set".into()));
    }
    let name = format!("series_{}.csv", series.variant());
    let mut out = RunOutput::default();
    out.files.push(write_artifact(config, &name, &series.to_csv())?);
    Ok(out)
}

/// Resolve the model grid: a single candidate is used as-is, a larger grid
/// goes through parameter search on the training region.
fn choose_model(
    config: &PipelineConfig,
    series: &CashFlowSeries,
    out: &mut RunOutput,
) -> Result<ModelSpec> {
    let candidates = config.model.candidates()?;
    if candidates.len() == 1 {
        return Ok(candidates.into_iter().next().unwrap());
    }
    let result = parameter_search(series, &candidates, config.seed)?;
    log::info!("parameter search chose {}", describe_parameters(&result.chosen));
    out.note(format!(
        "parameter search chose candidate {} of {}: {}",
        result.chosen_index + 1,
        result.scores.len(),
        describe_parameters(&result.chosen)
    ));
    Ok(result.chosen)
}

fn describe_inputs(spec: &ModelSpec) -> String {
    let features = match spec {
        ModelSpec::Mean => return "level".into(),
        ModelSpec::Ar { .. } => return "lags".into(),
        ModelSpec::Regression { features } => features,
        ModelSpec::Rbf { features, .. } => features,
        ModelSpec::RandomForest { features, .. } => features,
    };
    let mut parts = Vec::new();
    if features.lag_count > 0 {
        parts.push(format!("lags:{}", features.lag_count));
    }
    if features.day_of_month {
        parts.push("dom".into());
    }
    if features.day_of_week {
        parts.push("dow".into());
    }
    if features.month {
        parts.push("month".into());
    }
    if features.week_of_year {
        parts.push("week".into());
    }
    parts.join("+")
}

fn describe_parameters(spec: &ModelSpec) -> String {
    match spec {
        ModelSpec::Mean => "-".into(),
        ModelSpec::Ar { max_p } => format!("max_p={max_p}"),
        ModelSpec::Regression { .. } => "ols".into(),
        ModelSpec::Rbf { clusters, alpha, .. } => format!("k={clusters} alpha={alpha}"),
        ModelSpec::RandomForest { trees, mtry, node_size, .. } => {
            format!("trees={trees} mtry={mtry} node_size={node_size}")
        }
    }
}

fn cmd_cv(config: &PipelineConfig, series: &CashFlowSeries) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let spec = choose_model(config, series, &mut out)?;
    let opts = CvOptions {
        stride: config.stride,
        seed: config.seed,
        ..CvOptions::new(config.training_length(series.len()), config.horizon)
    };
    let report = cross_validate(series, &spec, &opts)?;
    out.files.push(write_artifact(config, "cv.csv", &report.to_csv())?);
    let summary = format!(
        "model,inputs,parameters,epsilon_bar,std_dev\n{},{},{},{},{}\n",
        spec.family(),
        describe_inputs(&spec),
        describe_parameters(&spec),
        report.mean_epsilon,
        report.epsilon_std_dev
    );
    out.files.push(write_artifact(config, "cv_summary.csv", &summary)?);
    Ok(out)
}

fn cmd_compare(config: &PipelineConfig, series: &CashFlowSeries) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let spec = choose_model(config, series, &mut out)?;
    let scenarios = config.selected_scenarios()?;
    let g = config.training_length(series.len());
    let mut body = String::new();
    for &risk in &config.risk_levels {
        let opts = CompareOptions {
            stride: config.stride,
            seed: config.seed,
            workdays_per_year: config.workdays_per_year,
            ..CompareOptions::new(g, config.horizon, risk)
        };
        let report = compare_savings(series, &spec, &scenarios, &opts)?;
        let csv = report.to_csv();
        let mut lines = csv.lines();
        let header = lines.next().unwrap_or_default();
        if body.is_empty() {
            body.push_str(header);
            body.push('\n');
        }
        for line in lines {
            body.push_str(line);
            body.push('\n');
        }
    }
    out.files.push(write_artifact(config, "savings.csv", &body)?);
    Ok(out)
}

fn cmd_sweep(
    config: &PipelineConfig,
    series: &CashFlowSeries,
    format: OutputFormat,
) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let scenarios = config.selected_scenarios()?;
    let g = config.training_length(series.len());
    if g == 0 || g > series.len() {
        return Err(Error::Config(format!(
            "`g_fraction` {} leaves no training window on {} observations",
            config.g_fraction,
            series.len()
        )));
    }
    let train_std = stats::sample_std(&series.values()[..g]);
    let grid: Vec<f64> = match &config.sigma_scales {
        Some(scales) => scales.iter().map(|s| s * train_std).collect(),
        None => default_sigma_grid(train_std),
    };
    let opts = SweepOptions {
        stride: config.stride,
        seed: config.seed,
        workdays_per_year: config.workdays_per_year,
        ..SweepOptions::new(g, config.horizon)
    };
    let points = accuracy_savings_sweep(series, &grid, &scenarios, &config.risk_levels, &opts)?;
    out.files.push(write_artifact(config, "sweep.csv", &build_sweep_csv(&points))?);
    if format == OutputFormat::CsvPlot {
        let svg = build_sweep_svg(&points, &[])?;
        out.files.push(write_artifact(config, "sweep.svg", &svg)?);
    }
    if let Some(cost) = config.improvement_cost_pct {
        for (r, &risk) in config.risk_levels.iter().enumerate() {
            let peak = points
                .iter()
                .map(|p| 100.0 * p.savings[r].relative_saving)
                .fold(f64::NEG_INFINITY, f64::max);
            let verdict = if peak > cost { "pays off" } else { "does not pay off" };
            out.note(format!(
                "risk {:.0}%: peak savings {peak:.1}% vs accuracy-improvement cost {cost:.1}%: improving accuracy {verdict}",
                100.0 * risk
            ));
        }
    }
    Ok(out)
}
