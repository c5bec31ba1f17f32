//! Discounting arithmetic: discount factors, annuity conversion and salvage value.
//!
//! All windows are indexed from the investment year, which is period `0` and is
//! never discounted. A technology's annuity stream therefore occupies periods
//! `0..=lifetime-1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when both cost representations of a technology are given.
pub const COST_CONSISTENCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinanceError {
    #[error("discount rate {0} is outside [0, 1)")]
    RateOutOfRange(f64),
    #[error("cannot parse discount rate `{0}`")]
    RateSyntax(String),
    #[error("lifetime must be at least one year")]
    ZeroLifetime,
    #[error("annuity window [{first}, {last}] lies outside the lifetime of {lifetime} years")]
    WindowOutOfRange { first: u32, last: u32, lifetime: u32 },
    #[error("investment year {invest_year} is after the last modelled year {last_year}")]
    InvestAfterHorizon { invest_year: u32, last_year: u32 },
    #[error("technology `{name}`: {field} must be finite and non-negative, got {value}")]
    InvalidCost {
        name: String,
        field: &'static str,
        value: f64,
    },
    #[error("technology `{name}` needs an overnight or an annualised cost")]
    MissingCost { name: String },
    #[error(
        "technology `{name}`: overnight cost {overnight} and annualised cost {annualised} \
         are inconsistent (annualised cost implies {implied})"
    )]
    InconsistentCosts {
        name: String,
        overnight: f64,
        annualised: f64,
        implied: f64,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RateRepr {
    Number(f64),
    Text(String),
}

/// A per-year discount rate stored as a fraction (`0.02` for 2%).
///
/// Used both for the social discount rate and for technology WACCs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "RateRepr", into = "f64")]
pub struct DiscountRate(f64);

impl DiscountRate {
    pub const ZERO: DiscountRate = DiscountRate(0.0);

    pub fn new(value: f64) -> Result<Self, FinanceError> {
        if (0.0..1.0).contains(&value) {
            Ok(DiscountRate(value))
        } else {
            Err(FinanceError::RateOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl FromStr for DiscountRate {
    type Err = FinanceError;

    /// Accepts a plain fraction (`0.02`) or a percentage (`2%`, `2.5 %`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        let syntax = || FinanceError::RateSyntax(s.to_string());
        let value = match text.strip_suffix('%') {
            Some(percent) => {
                let percent = percent.trim();
                // validate the mantissa, then let the float parser shift the
                // decimal point so "2%" becomes exactly the double nearest 0.02
                percent.parse::<f64>().map_err(|_| syntax())?;
                if percent.contains(['e', 'E']) {
                    percent.parse::<f64>().map_err(|_| syntax())? / 100.0
                } else {
                    format!("{percent}e-2").parse::<f64>().map_err(|_| syntax())?
                }
            }
            None => text.parse::<f64>().map_err(|_| syntax())?,
        };
        DiscountRate::new(value)
    }
}

impl TryFrom<RateRepr> for DiscountRate {
    type Error = FinanceError;

    fn try_from(repr: RateRepr) -> Result<Self, Self::Error> {
        match repr {
            RateRepr::Number(v) => DiscountRate::new(v),
            RateRepr::Text(s) => s.parse(),
        }
    }
}

impl From<DiscountRate> for f64 {
    fn from(rate: DiscountRate) -> f64 {
        rate.0
    }
}

impl fmt::Display for DiscountRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Economic lifetime of an asset in whole years, at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Lifetime(u32);

impl Lifetime {
    pub fn new(years: u32) -> Result<Self, FinanceError> {
        if years == 0 {
            Err(FinanceError::ZeroLifetime)
        } else {
            Ok(Lifetime(years))
        }
    }

    pub fn years(self) -> u32 {
        self.0
    }

    /// Last annuity period, `lifetime - 1`.
    pub fn last_period(self) -> u32 {
        self.0 - 1
    }
}

impl TryFrom<u32> for Lifetime {
    type Error = FinanceError;

    fn try_from(years: u32) -> Result<Self, Self::Error> {
        Lifetime::new(years)
    }
}

impl From<Lifetime> for u32 {
    fn from(lifetime: Lifetime) -> u32 {
        lifetime.0
    }
}

impl fmt::Display for Lifetime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `(1 + rate)^-periods`; exactly `1.0` for zero periods.
pub fn discount_factor(rate: DiscountRate, periods: u32) -> f64 {
    if periods == 0 {
        return 1.0;
    }
    let base = 1.0 + rate.0;
    match i32::try_from(periods) {
        Ok(n) => base.powi(n).recip(),
        Err(_) => base.powf(-(periods as f64)),
    }
}

/// Sum of discount factors over `first..=last`; empty (zero) when `first > last`.
fn window_sum(rate: DiscountRate, first: u32, last: u32) -> f64 {
    (first..=last).map(|n| discount_factor(rate, n)).sum()
}

/// Present value, at the investment year, of one unit of annuity paid in each
/// period of `first_period..=last_period`.
///
/// The window must lie inside the annuity stream `0..=lifetime-1`.
pub fn annuity_factor(
    wacc: DiscountRate,
    lifetime: Lifetime,
    first_period: u32,
    last_period: u32,
) -> Result<f64, FinanceError> {
    if first_period > last_period || last_period > lifetime.last_period() {
        return Err(FinanceError::WindowOutOfRange {
            first: first_period,
            last: last_period,
            lifetime: lifetime.0,
        });
    }
    Ok(window_sum(wacc, first_period, last_period))
}

/// Converts an overnight cost into the constant annuity whose discounted sum over
/// the lifetime (first payment undiscounted) equals it.
///
/// At zero WACC the closed form is 0/0; the analytic limit `total / lifetime` is used.
pub fn annualise(total_cost: f64, wacc: DiscountRate, lifetime: Lifetime) -> f64 {
    let r = wacc.0;
    let n = lifetime.0 as f64;
    if r == 0.0 {
        return total_cost / n;
    }
    // 1 - (1+r)^-n without cancellation for small r
    let retained = -(-n * r.ln_1p()).exp_m1();
    total_cost * r / ((1.0 + r) * retained)
}

/// Inverse of [`annualise`]: discounted sum of the annuity stream over the lifetime.
pub fn totalise(annualised_cost: f64, wacc: DiscountRate, lifetime: Lifetime) -> f64 {
    annualised_cost * window_sum(wacc, 0, lifetime.last_period())
}

/// Cost data that applies to investments made in one particular year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearCosts {
    pub overnight_cost: f64,
    pub annualised_cost: f64,
    pub wacc: DiscountRate,
    pub variable_cost: f64,
    /// `None` means unbounded.
    pub max_invest: Option<f64>,
}

/// Partial replacement of a technology's costs for one investment year.
///
/// When neither cost is given the base overnight cost is kept and the annuity is
/// recomputed with the (possibly overridden) WACC.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostOverride {
    pub overnight_cost: Option<f64>,
    pub annualised_cost: Option<f64>,
    pub wacc: Option<DiscountRate>,
    pub variable_cost: Option<f64>,
    pub max_invest: Option<f64>,
}

/// Everything needed to build a [`TechnologyParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct TechnologySpec {
    pub name: String,
    pub overnight_cost: Option<f64>,
    pub annualised_cost: Option<f64>,
    pub wacc: DiscountRate,
    pub lifetime: Lifetime,
    pub max_invest: Option<f64>,
    pub variable_cost: f64,
    pub overrides: BTreeMap<u32, CostOverride>,
}

impl TechnologySpec {
    pub fn overnight(name: impl Into<String>, cost: f64, wacc: DiscountRate, lifetime: Lifetime) -> Self {
        TechnologySpec {
            name: name.into(),
            overnight_cost: Some(cost),
            annualised_cost: None,
            wacc,
            lifetime,
            max_invest: None,
            variable_cost: 0.0,
            overrides: BTreeMap::new(),
        }
    }
}

/// Validated cost and financing data of one technology.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TechnologyParams {
    name: String,
    lifetime: Lifetime,
    base: YearCosts,
    overrides: BTreeMap<u32, YearCosts>,
}

fn check_cost(name: &str, field: &'static str, value: f64) -> Result<f64, FinanceError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(FinanceError::InvalidCost {
            name: name.to_string(),
            field,
            value,
        })
    }
}

fn resolve_costs(
    name: &str,
    overnight: Option<f64>,
    annualised: Option<f64>,
    wacc: DiscountRate,
    lifetime: Lifetime,
) -> Result<(f64, f64), FinanceError> {
    let overnight = overnight.map(|v| check_cost(name, "overnight_cost", v)).transpose()?;
    let annualised = annualised.map(|v| check_cost(name, "annualised_cost", v)).transpose()?;
    match (overnight, annualised) {
        (Some(t), None) => Ok((t, annualise(t, wacc, lifetime))),
        (None, Some(a)) => Ok((totalise(a, wacc, lifetime), a)),
        (Some(t), Some(a)) => {
            let implied = totalise(a, wacc, lifetime);
            let scale = t.abs().max(implied.abs());
            if (t - implied).abs() <= COST_CONSISTENCY_TOLERANCE * scale {
                Ok((t, a))
            } else {
                Err(FinanceError::InconsistentCosts {
                    name: name.to_string(),
                    overnight: t,
                    annualised: a,
                    implied,
                })
            }
        }
        (None, None) => Err(FinanceError::MissingCost {
            name: name.to_string(),
        }),
    }
}

impl TechnologyParams {
    pub fn new(spec: TechnologySpec) -> Result<Self, FinanceError> {
        let name = spec.name;
        let (overnight_cost, annualised_cost) =
            resolve_costs(&name, spec.overnight_cost, spec.annualised_cost, spec.wacc, spec.lifetime)?;
        let max_invest = spec
            .max_invest
            .map(|v| check_cost(&name, "max_invest", v))
            .transpose()?;
        let base = YearCosts {
            overnight_cost,
            annualised_cost,
            wacc: spec.wacc,
            variable_cost: check_cost(&name, "variable_cost", spec.variable_cost)?,
            max_invest,
        };

        let mut overrides = BTreeMap::new();
        for (year, o) in spec.overrides {
            let wacc = o.wacc.unwrap_or(base.wacc);
            let (overnight_cost, annualised_cost) = match (o.overnight_cost, o.annualised_cost) {
                (None, None) => resolve_costs(&name, Some(base.overnight_cost), None, wacc, spec.lifetime)?,
                (t, a) => resolve_costs(&name, t, a, wacc, spec.lifetime)?,
            };
            let variable_cost = match o.variable_cost {
                Some(v) => check_cost(&name, "variable_cost", v)?,
                None => base.variable_cost,
            };
            let max_invest = match o.max_invest {
                Some(v) => Some(check_cost(&name, "max_invest", v)?),
                None => base.max_invest,
            };
            overrides.insert(
                year,
                YearCosts {
                    overnight_cost,
                    annualised_cost,
                    wacc,
                    variable_cost,
                    max_invest,
                },
            );
        }

        Ok(TechnologyParams {
            name,
            lifetime: spec.lifetime,
            base,
            overrides,
        })
    }

    /// Technology with a single overnight cost, unbounded investment and no variable cost.
    pub fn from_overnight(
        name: impl Into<String>,
        overnight_cost: f64,
        wacc: DiscountRate,
        lifetime: Lifetime,
    ) -> Result<Self, FinanceError> {
        TechnologyParams::new(TechnologySpec::overnight(name, overnight_cost, wacc, lifetime))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lifetime(&self) -> Lifetime {
        self.lifetime
    }

    /// Costs for an investment made (or production happening) in `year`.
    pub fn costs_at(&self, year: u32) -> &YearCosts {
        self.overrides.get(&year).unwrap_or(&self.base)
    }

    pub fn overnight_cost(&self, year: u32) -> f64 {
        self.costs_at(year).overnight_cost
    }

    pub fn annualised_cost(&self, year: u32) -> f64 {
        self.costs_at(year).annualised_cost
    }

    pub fn wacc(&self, year: u32) -> DiscountRate {
        self.costs_at(year).wacc
    }

    pub fn variable_cost(&self, year: u32) -> f64 {
        self.costs_at(year).variable_cost
    }

    pub fn max_invest(&self, year: u32) -> Option<f64> {
        self.costs_at(year).max_invest
    }

    /// Years carrying their own cost data.
    pub fn override_years(&self) -> impl Iterator<Item = u32> + '_ {
        self.overrides.keys().copied()
    }

    /// Same technology with every monetary quantity multiplied by `factor`.
    pub fn scale_costs(&self, factor: f64) -> TechnologyParams {
        let scale = |c: &YearCosts| YearCosts {
            overnight_cost: c.overnight_cost * factor,
            annualised_cost: c.annualised_cost * factor,
            variable_cost: c.variable_cost * factor,
            ..*c
        };
        TechnologyParams {
            name: self.name.clone(),
            lifetime: self.lifetime,
            base: scale(&self.base),
            overrides: self.overrides.iter().map(|(y, c)| (*y, scale(c))).collect(),
        }
    }
}

/// Discounted (to the investment year) value of the annuities that fall after
/// `last_modelled_year`.
///
/// Zero when the asset's lifetime ends at or before the last modelled year.
pub fn salvage_value(
    tech: &TechnologyParams,
    invest_year: u32,
    last_modelled_year: u32,
) -> Result<f64, FinanceError> {
    if invest_year > last_modelled_year {
        return Err(FinanceError::InvestAfterHorizon {
            invest_year,
            last_year: last_modelled_year,
        });
    }
    let costs = tech.costs_at(invest_year);
    let first = last_modelled_year - invest_year + 1;
    let last = tech.lifetime.last_period();
    if first > last {
        return Ok(0.0);
    }
    Ok(costs.annualised_cost * window_sum(costs.wacc, first, last))
}
