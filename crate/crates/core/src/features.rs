//! Explanatory-variable construction: calendar dummies and lag embeddings.

use chrono::{Datelike, NaiveDate, Weekday};

use crate::error::{Error, Result};
use crate::series::SeriesView;

/// One named column of a design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureColumn {
    /// Value `k` days back.
    Lag(usize),
    /// Indicator for calendar day-of-month (2..=31; day 1 is the baseline).
    DayOfMonth(u32),
    /// Indicator for a workday (the configured reference day is the baseline).
    DayOfWeek(Weekday),
    /// Indicator for calendar month (2..=12; January is the baseline).
    Month(u32),
    /// Indicator for ISO week of year (2..=53; week 1 is the baseline).
    WeekOfYear(u32),
}

fn weekday_code(day: Weekday) -> &'static str {
    match day {
        Weekday::Mon => "mon",
        Weekday::Tue => "tue",
        Weekday::Wed => "wed",
        Weekday::Thu => "thu",
        Weekday::Fri => "fri",
        Weekday::Sat => "sat",
        Weekday::Sun => "sun",
    }
}

fn weekday_from_code(code: &str) -> Option<Weekday> {
    Some(match code {
        "mon" => Weekday::Mon,
        "tue" => Weekday::Tue,
        "wed" => Weekday::Wed,
        "thu" => Weekday::Thu,
        "fri" => Weekday::Fri,
        "sat" => Weekday::Sat,
        "sun" => Weekday::Sun,
        _ => return None,
    })
}

impl FeatureColumn {
    /// Feature value for a date, given `lags[k-1]` = value k days back.
    pub fn value(&self, date: NaiveDate, lags: &[f64]) -> f64 {
        match *self {
            FeatureColumn::Lag(k) => lags[k - 1],
            FeatureColumn::DayOfMonth(d) => f64::from(date.day() == d),
            FeatureColumn::DayOfWeek(w) => f64::from(date.weekday() == w),
            FeatureColumn::Month(m) => f64::from(date.month() == m),
            FeatureColumn::WeekOfYear(w) => f64::from(date.iso_week().week() == w),
        }
    }

    pub fn is_lag(&self) -> bool {
        matches!(self, FeatureColumn::Lag(_))
    }

    /// Group label used in diagnostics: lag, dom, dow, month, week.
    pub fn group(&self) -> &'static str {
        match self {
            FeatureColumn::Lag(_) => "lag",
            FeatureColumn::DayOfMonth(_) => "dom",
            FeatureColumn::DayOfWeek(_) => "dow",
            FeatureColumn::Month(_) => "month",
            FeatureColumn::WeekOfYear(_) => "week",
        }
    }
}

impl std::fmt::Display for FeatureColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            FeatureColumn::Lag(k) => write!(f, "lag_{k}"),
            FeatureColumn::DayOfMonth(d) => write!(f, "dom_{d}"),
            FeatureColumn::DayOfWeek(w) => write!(f, "dow_{}", weekday_code(w)),
            FeatureColumn::Month(m) => write!(f, "month_{m}"),
            FeatureColumn::WeekOfYear(w) => write!(f, "week_{w}"),
        }
    }
}

impl std::str::FromStr for FeatureColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("`{s}` is not a feature column name"));
        let (kind, arg) = s.split_once('_').ok_or_else(bad)?;
        Ok(match kind {
            "lag" => FeatureColumn::Lag(arg.parse().map_err(|_| bad())?),
            "dom" => FeatureColumn::DayOfMonth(arg.parse().map_err(|_| bad())?),
            "dow" => FeatureColumn::DayOfWeek(weekday_from_code(arg).ok_or_else(bad)?),
            "month" => FeatureColumn::Month(arg.parse().map_err(|_| bad())?),
            "week" => FeatureColumn::WeekOfYear(arg.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        })
    }
}

/// Which explanatory variables to build.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSpec {
    pub day_of_month: bool,
    pub day_of_week: bool,
    pub month: bool,
    pub week_of_year: bool,
    pub lag_count: usize,
    /// Weekday whose dummy is dropped as the baseline.
    #[serde(with = "weekday_serde")]
    pub weekday_reference: Weekday,
}

mod weekday_serde {
    use super::{weekday_code, weekday_from_code};
    use chrono::Weekday;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(day: &Weekday, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(weekday_code(*day))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Weekday, D::Error> {
        let code = String::deserialize(de)?;
        weekday_from_code(&code)
            .ok_or_else(|| D::Error::custom(format!("`{code}` is not a weekday code")))
    }
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            day_of_month: false,
            day_of_week: false,
            month: false,
            week_of_year: false,
            lag_count: 0,
            weekday_reference: Weekday::Mon,
        }
    }
}

impl FeatureSpec {
    pub fn lags_only(lag_count: usize) -> Self {
        FeatureSpec { lag_count, ..Self::default() }
    }

    pub fn calendar(day_of_month: bool, day_of_week: bool) -> Self {
        FeatureSpec { day_of_month, day_of_week, ..Self::default() }
    }

    fn has_any(&self) -> bool {
        self.day_of_month || self.day_of_week || self.month || self.week_of_year || self.lag_count > 0
    }

    /// All candidate columns before zero-column pruning.
    fn candidate_columns(&self) -> Vec<FeatureColumn> {
        let mut cols = Vec::new();
        for k in 1..=self.lag_count {
            cols.push(FeatureColumn::Lag(k));
        }
        if self.day_of_month {
            for d in 2..=31 {
                cols.push(FeatureColumn::DayOfMonth(d));
            }
        }
        if self.day_of_week {
            for day in [Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu, Weekday::Fri] {
                if day != self.weekday_reference {
                    cols.push(FeatureColumn::DayOfWeek(day));
                }
            }
        }
        if self.month {
            for m in 2..=12 {
                cols.push(FeatureColumn::Month(m));
            }
        }
        if self.week_of_year {
            for w in 2..=53 {
                cols.push(FeatureColumn::WeekOfYear(w));
            }
        }
        cols
    }

    pub fn validate(&self) -> Result<()> {
        if !self.has_any() {
            return Err(Error::Validation("feature spec selects no features".into()));
        }
        if matches!(self.weekday_reference, Weekday::Sat | Weekday::Sun) {
            return Err(Error::Validation("weekday reference must be a workday (Mon-Fri)".into()));
        }
        Ok(())
    }
}

/// Row-major regression inputs with named columns and aligned targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    columns: Vec<FeatureColumn>,
    values: Vec<f64>,
    n_rows: usize,
    target: Vec<f64>,
    intercept_included: bool,
}

impl DesignMatrix {
    /// Assemble from raw parts (row-major values); validates dimensions.
    pub fn from_parts(
        columns: Vec<FeatureColumn>,
        values: Vec<f64>,
        n_rows: usize,
        target: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != n_rows * columns.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} rows x {} columns",
                values.len(),
                n_rows,
                columns.len()
            )));
        }
        if target.len() != n_rows {
            return Err(Error::Dimension(format!(
                "{} targets for {} rows",
                target.len(),
                n_rows
            )));
        }
        Ok(DesignMatrix { columns, values, n_rows, target, intercept_included: true })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.to_string()).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.columns.len();
        &self.values[i * w..(i + 1) * w]
    }

    /// All feature values, row-major.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn target_mut(&mut self) -> &mut [f64] {
        &mut self.target
    }

    pub fn intercept_included(&self) -> bool {
        self.intercept_included
    }

    /// Column values as a contiguous vector (for per-column transforms).
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i)[j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        assert_eq!(values.len(), self.n_rows);
        let w = self.columns.len();
        for (i, &v) in values.iter().enumerate() {
            self.values[i * w + j] = v;
        }
    }
}

/// Build the design matrix for a series window: one row per index `t >=
/// lag_count`, lag columns then calendar dummies, all-zero columns pruned.
pub fn build_features(view: SeriesView<'_>, spec: &FeatureSpec) -> Result<DesignMatrix> {
    spec.validate()?;
    let n = view.len();
    if spec.lag_count >= n {
        return Err(Error::Validation(format!(
            "lag count {} needs a series longer than {n}",
            spec.lag_count
        )));
    }
    let candidates = spec.candidate_columns();
    let n_rows = n - spec.lag_count;
    let mut values = Vec::with_capacity(n_rows * candidates.len());
    let mut target = Vec::with_capacity(n_rows);
    let mut lags = vec![0.0; spec.lag_count];
    for t in spec.lag_count..n {
        for k in 1..=spec.lag_count {
            lags[k - 1] = view.values[t - k];
        }
        let date = view.dates[t];
        for col in &candidates {
            values.push(col.value(date, &lags));
        }
        target.push(view.values[t]);
    }

    // Prune columns that are zero on every row (unused calendar levels).
    let keep: Vec<usize> = (0..candidates.len())
        .filter(|&j| (0..n_rows).any(|i| values[i * candidates.len() + j] != 0.0))
        .collect();
    let columns: Vec<FeatureColumn> = keep.iter().map(|&j| candidates[j]).collect();
    let mut pruned = Vec::with_capacity(n_rows * columns.len());
    for i in 0..n_rows {
        let row = &values[i * candidates.len()..(i + 1) * candidates.len()];
        for &j in &keep {
            pruned.push(row[j]);
        }
    }
    Ok(DesignMatrix {
        columns,
        values: pruned,
        n_rows,
        target,
        intercept_included: true,
    })
}

/// Feature row for forecasting a single date, given `recent[k-1]` = value k
/// days back. Levels whose column was pruned at fit time act as baseline.
pub fn feature_row(columns: &[FeatureColumn], date: NaiveDate, recent: &[f64]) -> Vec<f64> {
    columns.iter().map(|c| c.value(date, recent)).collect()
}
