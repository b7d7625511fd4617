//! Bounded simple cash policy: risk-derived balance limits, bank cost
//! structures, and day-by-day balance simulation with a cost ledger.
//!
//! The policy keeps the balance between a lower and an upper limit. Each day
//! the projected balance (prior balance plus that day's forecast) decides the
//! transfer: below the lower limit tops up to the lower rebalance level,
//! above the upper limit sweeps down to the upper rebalance level.

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Bank cost coefficients. Rates are annual; fixed costs are per transfer,
/// variable costs per money unit transferred.
#[derive(Debug, Clone, PartialEq)]
pub struct CostStructure {
    pub name: String,
    pub holding_q: f64,
    pub shortage_u: f64,
    pub fixed_in: f64,
    pub fixed_out: f64,
    pub variable_in: f64,
    pub variable_out: f64,
}

impl CostStructure {
    pub fn new(
        name: impl Into<String>,
        holding_q: f64,
        shortage_u: f64,
        fixed_in: f64,
        fixed_out: f64,
        variable_in: f64,
        variable_out: f64,
    ) -> Result<Self> {
        let s = CostStructure {
            name: name.into(),
            holding_q,
            shortage_u,
            fixed_in,
            fixed_out,
            variable_in,
            variable_out,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.holding_q,
            self.shortage_u,
            self.fixed_in,
            self.fixed_out,
            self.variable_in,
            self.variable_out,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(format!(
                "cost structure {} has a negative or non-finite coefficient",
                self.name
            )));
        }
        Ok(())
    }
}

/// Balance limits and rebalance levels, ordered lower_limit <= lower_rebalance
/// <= upper_rebalance <= upper_limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParameters {
    pub lower_limit: f64,
    pub lower_rebalance: f64,
    pub upper_rebalance: f64,
    pub upper_limit: f64,
    pub max_pct: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl PolicyParameters {
    pub fn new(
        lower_limit: f64,
        lower_rebalance: f64,
        upper_rebalance: f64,
        upper_limit: f64,
        max_pct: f64,
    ) -> Result<Self> {
        if !(0.0 <= lower_limit
            && lower_limit <= lower_rebalance
            && lower_rebalance <= upper_rebalance
            && upper_rebalance <= upper_limit)
        {
            return Err(Error::Validation(format!(
                "policy levels must satisfy 0 <= {lower_limit} <= {lower_rebalance} <= \
                 {upper_rebalance} <= {upper_limit}"
            )));
        }
        Ok(PolicyParameters {
            lower_limit,
            lower_rebalance,
            upper_rebalance,
            upper_limit,
            max_pct,
            alpha1: 0.5,
            alpha2: 0.5,
        })
    }
}

/// Set the lower limit so that only a `max_pct` share of observed daily flows
/// could push the balance below zero from there: the limit is the magnitude
/// of the ceil(N * max_pct)-th smallest flow, which must be negative. The
/// upper limit is 1.5x the lower, and the rebalance levels sit halfway into
/// each band (alpha1 = alpha2 = 0.5).
pub fn derive_parameters(train_flows: &[f64], max_pct: f64) -> Result<PolicyParameters> {
    if train_flows.is_empty() {
        return Err(Error::Validation("cannot derive policy limits from no flows".into()));
    }
    if !(max_pct > 0.0 && max_pct < 1.0) {
        return Err(Error::Validation(format!("max_pct must be in (0, 1), got {max_pct}")));
    }
    let mut sorted = train_flows.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Small backoff so an index that is an integer up to float error does not
    // ceil one slot too far.
    let index = ((n as f64 * max_pct - 1e-9).ceil() as usize).clamp(1, n);
    let statistic = sorted[index - 1];
    if statistic >= 0.0 {
        return Err(Error::Degenerate(format!(
            "order statistic {statistic} at index {index} is not negative; no downside risk to bound"
        )));
    }
    let lower_limit = statistic.abs();
    let upper_limit = 1.5 * lower_limit;
    let lower_rebalance = lower_limit + 0.5 * (upper_limit - lower_limit);
    let upper_rebalance = upper_limit - 0.5 * (upper_limit - lower_rebalance);
    PolicyParameters::new(lower_limit, lower_rebalance, upper_rebalance, upper_limit, max_pct)
}

/// Convert an annual rate to a per-workday rate. `convention` is the number
/// of workdays per year and must be positive.
pub fn daily_rate(annual: f64, convention: f64) -> f64 {
    annual / convention
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayRecord {
    /// Signed transfer: positive into the account, negative out of it.
    pub transfer: f64,
    pub transfer_cost: f64,
    pub holding_cost: f64,
    pub shortage_cost: f64,
    /// End-of-day balance.
    pub balance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostLedger {
    pub days: Vec<DayRecord>,
    pub total_transfer_cost: f64,
    pub total_holding_cost: f64,
    pub total_shortage_cost: f64,
}

impl CostLedger {
    pub fn total_cost(&self) -> f64 {
        self.total_transfer_cost + self.total_holding_cost + self.total_shortage_cost
    }

    pub fn day_count(&self) -> usize {
        self.days.len()
    }

    /// One row per day: `date,transfer,transfer_cost,holding_cost,shortage_cost,balance`.
    pub fn to_csv(&self, dates: &[NaiveDate]) -> Result<String> {
        if dates.len() != self.days.len() {
            return Err(Error::Dimension(format!(
                "{} dates vs {} ledger days",
                dates.len(),
                self.days.len()
            )));
        }
        let mut out = String::from("date,transfer,transfer_cost,holding_cost,shortage_cost,balance\n");
        for (date, day) in dates.iter().zip(&self.days) {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                date, day.transfer, day.transfer_cost, day.holding_cost, day.shortage_cost,
                day.balance
            ));
        }
        Ok(out)
    }
}

struct DayRates {
    holding: f64,
    shortage: f64,
}

fn step(
    prior_balance: f64,
    forecast: f64,
    flow: f64,
    params: &PolicyParameters,
    costs: &CostStructure,
    rates: &DayRates,
) -> DayRecord {
    let projected = prior_balance + forecast;
    let (transfer, transfer_cost) = if projected < params.lower_limit {
        let amount = params.lower_rebalance - projected;
        (amount, costs.fixed_in + costs.variable_in * amount)
    } else if projected > params.upper_limit {
        let amount = projected - params.upper_rebalance;
        (-amount, costs.fixed_out + costs.variable_out * amount)
    } else {
        (0.0, 0.0)
    };
    let balance = prior_balance + transfer + flow;
    let (holding_cost, shortage_cost) = if balance >= 0.0 {
        (rates.holding * balance, 0.0)
    } else {
        (0.0, rates.shortage * -balance)
    };
    DayRecord { transfer, transfer_cost, holding_cost, shortage_cost, balance }
}

/// Run the policy day by day: decide the transfer from the projected balance
/// (prior + forecast), settle the transfer, apply the actual flow, then
/// charge holding or shortage cost on the end-of-day balance.
pub fn simulate(
    flows: &[f64],
    forecasts: &[f64],
    params: &PolicyParameters,
    costs: &CostStructure,
    initial_balance: f64,
    workdays_per_year: f64,
) -> Result<CostLedger> {
    check_lengths(flows, forecasts, workdays_per_year)?;
    let rates = DayRates {
        holding: daily_rate(costs.holding_q, workdays_per_year),
        shortage: daily_rate(costs.shortage_u, workdays_per_year),
    };
    let mut days = Vec::with_capacity(flows.len());
    let mut balance = initial_balance;
    let (mut transfer_total, mut holding_total, mut shortage_total) = (0.0, 0.0, 0.0);
    for (flow, forecast) in flows.iter().zip(forecasts) {
        let day = step(balance, *forecast, *flow, params, costs, &rates);
        balance = day.balance;
        transfer_total += day.transfer_cost;
        holding_total += day.holding_cost;
        shortage_total += day.shortage_cost;
        days.push(day);
    }
    Ok(CostLedger {
        days,
        total_transfer_cost: transfer_total,
        total_holding_cost: holding_total,
        total_shortage_cost: shortage_total,
    })
}

/// Total cost of a simulation without materializing the per-day ledger; the
/// hot path for sweeps that run many thousands of simulations.
pub fn simulate_total(
    flows: &[f64],
    forecasts: &[f64],
    params: &PolicyParameters,
    costs: &CostStructure,
    initial_balance: f64,
    workdays_per_year: f64,
) -> Result<f64> {
    check_lengths(flows, forecasts, workdays_per_year)?;
    let rates = DayRates {
        holding: daily_rate(costs.holding_q, workdays_per_year),
        shortage: daily_rate(costs.shortage_u, workdays_per_year),
    };
    let mut balance = initial_balance;
    // Three separate accumulators so the result is bitwise identical to the
    // full ledger's total.
    let (mut transfer_total, mut holding_total, mut shortage_total) = (0.0, 0.0, 0.0);
    for (flow, forecast) in flows.iter().zip(forecasts) {
        let day = step(balance, *forecast, *flow, params, costs, &rates);
        balance = day.balance;
        transfer_total += day.transfer_cost;
        holding_total += day.holding_cost;
        shortage_total += day.shortage_cost;
    }
    Ok(transfer_total + holding_total + shortage_total)
}

fn check_lengths(flows: &[f64], forecasts: &[f64], workdays_per_year: f64) -> Result<()> {
    if flows.len() != forecasts.len() {
        return Err(Error::Validation(format!(
            "{} flows vs {} forecasts",
            flows.len(),
            forecasts.len()
        )));
    }
    if workdays_per_year <= 0.0 {
        return Err(Error::Validation("workday convention must be positive".into()));
    }
    Ok(())
}

/// The 21 benchmark cost structures: a 15-structure grid over holding rates
/// and fixed transfer fees (the most likely banking scenario), 3 structures
/// varying the shortage rate, and 3 introducing per-unit transfer costs.
pub fn cost_scenarios() -> Vec<CostStructure> {
    let mut out = Vec::with_capacity(21);
    for q_pct in [10u32, 15, 20] {
        for fee in [1u32, 2, 3, 4, 5] {
            let fee_f = fee as f64;
            out.push(
                CostStructure::new(
                    format!("ml_q{q_pct}_f{fee}"),
                    q_pct as f64 / 100.0,
                    0.30,
                    fee_f,
                    fee_f,
                    0.0,
                    0.0,
                )
                .expect("grid coefficients are nonnegative"),
            );
        }
    }
    for u_pct in [10u32, 20, 40] {
        out.push(
            CostStructure::new(
                format!("shortage_u{u_pct}"),
                0.15,
                u_pct as f64 / 100.0,
                3.0,
                3.0,
                0.0,
                0.0,
            )
            .expect("grid coefficients are nonnegative"),
        );
    }
    for per_mille in ["0.1", "0.2", "0.4"] {
        let rate: f64 = per_mille.parse::<f64>().unwrap() / 1000.0;
        out.push(
            CostStructure::new(format!("variable_g{per_mille}"), 0.15, 0.30, 3.0, 3.0, rate, rate)
                .expect("grid coefficients are nonnegative"),
        );
    }
    out
}
