//! Planning LP assembly: investment and production variables, production limits,
//! demand rows and the five investment-cost objective variants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finance::{discount_factor, salvage_value, DiscountRate, FinanceError, TechnologyParams};
use crate::horizon::{capacity_window, Horizon, HorizonError};
use crate::simplex::{self, LpError, Sense, SolveResult, SolverOptions, StandardFormLp};

/// Absolute tolerance for accepting a solution in [`cost_breakdown`].
pub const SOLUTION_FEASIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("scenario has no technologies")]
    NoTechnologies,
    #[error("technology `{0}` is defined twice")]
    DuplicateTechnology(String),
    #[error("technology `{technology}` overrides year {year}, beyond the last modelled year {end}")]
    OverrideOutsideHorizon { technology: String, year: u32, end: u32 },
    #[error("number of representative periods and timesteps must be positive")]
    EmptyOperationalGrid,
    #[error("{what} key (year {year}, period {period}, timestep {timestep}) is outside the scenario grid")]
    KeyOutOfBounds {
        what: &'static str,
        year: u32,
        period: u32,
        timestep: u32,
    },
    #[error("{what} for year {year} given, but only milestone years are modelled")]
    NotAMilestone { what: &'static str, year: u32 },
    #[error("demand at (year {year}, period {period}, timestep {timestep}) must be finite and non-negative, got {value}")]
    InvalidDemand {
        year: u32,
        period: u32,
        timestep: u32,
        value: f64,
    },
    #[error("operational weight at (year {year}, period {period}) must be finite and positive, got {value}")]
    InvalidOperationalWeight { year: u32, period: u32, value: f64 },
    #[error("variant {0} needs every modelled year to be a milestone")]
    VariantNeedsYearlyHorizon(ObjectiveVariant),
    #[error("{what}: expected {expected} values, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("solution violates the program by {violation:e}")]
    InfeasibleSolution { violation: f64 },
    #[error(transparent)]
    Horizon(#[from] HorizonError),
    #[error(transparent)]
    Finance(#[from] FinanceError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// How investment costs enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveVariant {
    /// Discounted overnight cost of every investment.
    Total,
    /// Discounted annuities inside the horizon, one per modelled year.
    Annualised,
    /// Overnight cost minus the salvage value beyond the last modelled year.
    TotalSalvage,
    /// Annuities at milestone years only, each scaled by the milestone's weight.
    AnnualisedMilestone,
    /// Salvage-corrected overnight cost on a milestone horizon.
    TotalSalvageMilestone,
}

impl ObjectiveVariant {
    pub const ALL: [ObjectiveVariant; 5] = [
        ObjectiveVariant::Total,
        ObjectiveVariant::Annualised,
        ObjectiveVariant::TotalSalvage,
        ObjectiveVariant::AnnualisedMilestone,
        ObjectiveVariant::TotalSalvageMilestone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveVariant::Total => "total",
            ObjectiveVariant::Annualised => "annualised",
            ObjectiveVariant::TotalSalvage => "total-salvage",
            ObjectiveVariant::AnnualisedMilestone => "annualised-milestone",
            ObjectiveVariant::TotalSalvageMilestone => "total-salvage-milestone",
        }
    }

    pub fn requires_yearly(self) -> bool {
        matches!(
            self,
            ObjectiveVariant::Total | ObjectiveVariant::Annualised | ObjectiveVariant::TotalSalvage
        )
    }

    pub fn check_horizon(self, horizon: &Horizon) -> Result<(), ModelError> {
        if self.requires_yearly() && !horizon.is_yearly() {
            Err(ModelError::VariantNeedsYearlyHorizon(self))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for ObjectiveVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown objective variant `{0}`")]
pub struct UnknownVariant(pub String);

impl FromStr for ObjectiveVariant {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalised = s.trim().to_ascii_lowercase().replace('_', "-");
        ObjectiveVariant::ALL
            .into_iter()
            .find(|v| v.name() == normalised)
            .ok_or_else(|| UnknownVariant(s.to_string()))
    }
}

/// Technologies, time structure, discounting and operational data of a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    technologies: Vec<TechnologyParams>,
    horizon: Horizon,
    social_rate: DiscountRate,
    periods: u32,
    timesteps: u32,
    demand: BTreeMap<(u32, u32, u32), f64>,
    operational_weights: BTreeMap<(u32, u32), f64>,
}

pub struct ScenarioBuilder {
    scenario: Scenario,
}

impl ScenarioBuilder {
    pub fn technology(mut self, tech: TechnologyParams) -> Self {
        self.scenario.technologies.push(tech);
        self
    }

    /// Number of representative periods and timesteps per period (both default to 1).
    pub fn grid(mut self, periods: u32, timesteps: u32) -> Self {
        self.scenario.periods = periods;
        self.scenario.timesteps = timesteps;
        self
    }

    /// Demand in MW; unset keys have zero demand.
    pub fn demand(mut self, year: u32, period: u32, timestep: u32, value: f64) -> Self {
        self.scenario.demand.insert((year, period, timestep), value);
        self
    }

    /// Operational weight of a representative period; unset keys weigh 1.
    pub fn operational_weight(mut self, year: u32, period: u32, weight: f64) -> Self {
        self.scenario.operational_weights.insert((year, period), weight);
        self
    }

    pub fn build(self) -> Result<Scenario, ModelError> {
        let s = self.scenario;
        if s.technologies.is_empty() {
            return Err(ModelError::NoTechnologies);
        }
        let mut names = BTreeSet::new();
        for tech in &s.technologies {
            if !names.insert(tech.name()) {
                return Err(ModelError::DuplicateTechnology(tech.name().to_string()));
            }
            if let Some(year) = tech.override_years().find(|&y| y > s.horizon.end()) {
                return Err(ModelError::OverrideOutsideHorizon {
                    technology: tech.name().to_string(),
                    year,
                    end: s.horizon.end(),
                });
            }
        }
        if s.periods == 0 || s.timesteps == 0 {
            return Err(ModelError::EmptyOperationalGrid);
        }
        for (&(year, period, timestep), &value) in &s.demand {
            if period >= s.periods || timestep >= s.timesteps || year > s.horizon.end() {
                return Err(ModelError::KeyOutOfBounds {
                    what: "demand",
                    year,
                    period,
                    timestep,
                });
            }
            if !s.horizon.is_milestone(year) {
                return Err(ModelError::NotAMilestone { what: "demand", year });
            }
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::InvalidDemand {
                    year,
                    period,
                    timestep,
                    value,
                });
            }
        }
        for (&(year, period), &value) in &s.operational_weights {
            if period >= s.periods || year > s.horizon.end() {
                return Err(ModelError::KeyOutOfBounds {
                    what: "operational weight",
                    year,
                    period,
                    timestep: 0,
                });
            }
            if !s.horizon.is_milestone(year) {
                return Err(ModelError::NotAMilestone {
                    what: "operational weight",
                    year,
                });
            }
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidOperationalWeight { year, period, value });
            }
        }
        Ok(s)
    }
}

impl Scenario {
    pub fn builder(horizon: Horizon, social_rate: DiscountRate) -> ScenarioBuilder {
        ScenarioBuilder {
            scenario: Scenario {
                technologies: Vec::new(),
                horizon,
                social_rate,
                periods: 1,
                timesteps: 1,
                demand: BTreeMap::new(),
                operational_weights: BTreeMap::new(),
            },
        }
    }

    pub fn technologies(&self) -> &[TechnologyParams] {
        &self.technologies
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn social_rate(&self) -> DiscountRate {
        self.social_rate
    }

    pub fn periods(&self) -> u32 {
        self.periods
    }

    pub fn timesteps(&self) -> u32 {
        self.timesteps
    }

    pub fn demand(&self, year: u32, period: u32, timestep: u32) -> f64 {
        self.demand.get(&(year, period, timestep)).copied().unwrap_or(0.0)
    }

    pub fn operational_weight(&self, year: u32, period: u32) -> f64 {
        self.operational_weights.get(&(year, period)).copied().unwrap_or(1.0)
    }

    /// Number of investment decisions (technologies × milestones).
    pub fn num_invest(&self) -> usize {
        self.technologies.len() * self.horizon.milestones().len()
    }

    /// Number of production decisions (technologies × milestones × periods × timesteps).
    pub fn num_production(&self) -> usize {
        self.num_invest() * self.periods as usize * self.timesteps as usize
    }

    /// Non-fatal findings, such as a technology financed below the social rate.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        for tech in &self.technologies {
            for &m in self.horizon.milestones() {
                let wacc = tech.wacc(m);
                if wacc < self.social_rate {
                    out.push(format!(
                        "technology `{}` year {m}: WACC {} is below the social discount rate {}",
                        tech.name(),
                        wacc,
                        self.social_rate
                    ));
                }
            }
        }
        out
    }

    /// Same scenario with all monetary inputs multiplied by `factor`.
    pub fn scale_costs(&self, factor: f64) -> Scenario {
        Scenario {
            technologies: self.technologies.iter().map(|t| t.scale_costs(factor)).collect(),
            ..self.clone()
        }
    }

    fn invest_column(&self, tech: usize, milestone_index: usize) -> usize {
        tech * self.horizon.milestones().len() + milestone_index
    }

    fn production_column(&self, tech: usize, milestone_index: usize, period: u32, timestep: u32) -> usize {
        let slot = (self.invest_column(tech, milestone_index) * self.periods as usize + period as usize)
            * self.timesteps as usize
            + timestep as usize;
        self.num_invest() + slot
    }
}

/// Present value at year `m` of the annuities of an investment made at `m`, each
/// counted with the given multiplicity.
fn annuity_stream(tech: &TechnologyParams, m: u32, years: impl Iterator<Item = (u32, f64)>) -> f64 {
    let costs = tech.costs_at(m);
    let factor: f64 = years.map(|(j, w)| w * discount_factor(costs.wacc, j - m)).sum();
    costs.annualised_cost * factor
}

/// Annualised coefficient with every year of the truncated lifetime counted once.
/// This is the yearly-resolution value of an investment at `year`, whatever the
/// horizon's milestone layout.
pub fn exact_annualised_coefficient(scenario: &Scenario, tech: usize, year: u32) -> f64 {
    let t = &scenario.technologies[tech];
    let last = year.saturating_add(t.lifetime().last_period()).min(scenario.horizon.end());
    discount_factor(scenario.social_rate, year) * annuity_stream(t, year, (year..=last).map(|j| (j, 1.0)))
}

/// Objective coefficient of the investment decision of `tech` at milestone `year`.
pub fn investment_coefficient(scenario: &Scenario, variant: ObjectiveVariant, tech: usize, year: u32) -> Result<f64, ModelError> {
    let t = &scenario.technologies[tech];
    let social = discount_factor(scenario.social_rate, year);
    let end = scenario.horizon.end();
    Ok(match variant {
        ObjectiveVariant::Total => social * t.overnight_cost(year),
        ObjectiveVariant::Annualised => exact_annualised_coefficient(scenario, tech, year),
        ObjectiveVariant::TotalSalvage | ObjectiveVariant::TotalSalvageMilestone => {
            social * (t.overnight_cost(year) - salvage_value(t, year, end)?)
        }
        ObjectiveVariant::AnnualisedMilestone => {
            let window = capacity_window(year, t.lifetime(), &scenario.horizon)?;
            let weighted = window.active_milestones().iter().map(|&j| {
                let w = scenario.horizon.weight(j).expect("active milestones are milestones");
                (j, w as f64)
            });
            social * annuity_stream(t, year, weighted)
        }
    })
}

/// Objective coefficient of one production decision; the same for every variant.
pub fn operational_coefficient(scenario: &Scenario, tech: usize, year: u32, period: u32) -> f64 {
    let weight = scenario.horizon.weight(year).unwrap_or(1) as f64;
    discount_factor(scenario.social_rate, year)
        * weight
        * scenario.technologies[tech].variable_cost(year)
        * scenario.operational_weight(year, period)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarKey {
    Invest {
        technology: usize,
        year: u32,
    },
    Production {
        technology: usize,
        year: u32,
        period: u32,
        timestep: u32,
    },
}

/// Bidirectional map between decision variables and LP columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableDirectory {
    keys: Vec<VarKey>,
    #[serde(skip)]
    index: BTreeMap<VarKey, usize>,
    num_invest: usize,
}

impl VariableDirectory {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, column: usize) -> VarKey {
        self.keys[column]
    }

    pub fn column(&self, key: &VarKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn keys(&self) -> &[VarKey] {
        &self.keys
    }

    /// Investment columns come first, production columns after.
    pub fn num_invest(&self) -> usize {
        self.num_invest
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowKind {
    /// Production of one technology bounded by its alive capacity.
    ProductionLimit { production: usize },
    Demand { year: u32, period: u32, timestep: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearProgram {
    variant: ObjectiveVariant,
    program: StandardFormLp,
    directory: VariableDirectory,
    rows: Vec<RowKind>,
}

impl LinearProgram {
    pub fn variant(&self) -> ObjectiveVariant {
        self.variant
    }

    pub fn program(&self) -> &StandardFormLp {
        &self.program
    }

    pub fn objective(&self) -> &[f64] {
        self.program.objective()
    }

    pub fn directory(&self) -> &VariableDirectory {
        &self.directory
    }

    pub fn row_kinds(&self) -> &[RowKind] {
        &self.rows
    }

    /// Splits a column vector into investment and production levels.
    pub fn split<'a>(&self, values: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        values.split_at(self.directory.num_invest)
    }

    /// True when both programs share variables, rows, and bounds.
    pub fn same_structure(&self, other: &LinearProgram) -> bool {
        self.directory == other.directory
            && self.rows == other.rows
            && self.program.constraints() == other.program.constraints()
            && self.program.lower() == other.program.lower()
            && self.program.upper() == other.program.upper()
    }
}

/// Assembles the planning LP for `variant`.
pub fn build_lp(scenario: &Scenario, variant: ObjectiveVariant) -> Result<LinearProgram, ModelError> {
    variant.check_horizon(&scenario.horizon)?;
    let horizon = &scenario.horizon;
    let milestones = horizon.milestones();

    let mut keys = Vec::with_capacity(scenario.num_invest() + scenario.num_production());
    let mut objective = Vec::with_capacity(keys.capacity());
    for (a, _) in scenario.technologies.iter().enumerate() {
        for &m in milestones {
            keys.push(VarKey::Invest { technology: a, year: m });
            objective.push(investment_coefficient(scenario, variant, a, m)?);
        }
    }
    for (a, _) in scenario.technologies.iter().enumerate() {
        for &m in milestones {
            for k in 0..scenario.periods {
                for t in 0..scenario.timesteps {
                    keys.push(VarKey::Production {
                        technology: a,
                        year: m,
                        period: k,
                        timestep: t,
                    });
                    objective.push(operational_coefficient(scenario, a, m, k));
                }
            }
        }
    }

    let mut program = StandardFormLp::new(objective);
    let mut rows = Vec::new();
    for (a, tech) in scenario.technologies.iter().enumerate() {
        for (i, &m) in milestones.iter().enumerate() {
            let upper = tech.max_invest(m).unwrap_or(f64::INFINITY);
            program.set_bounds(scenario.invest_column(a, i), 0.0, upper)?;
        }
    }

    // investments alive at each milestone, per technology
    for (a, tech) in scenario.technologies.iter().enumerate() {
        let mut alive: Vec<Vec<usize>> = vec![Vec::new(); milestones.len()];
        for (j, &invest_year) in milestones.iter().enumerate() {
            let window = capacity_window(invest_year, tech.lifetime(), horizon)?;
            for &m in window.active_milestones() {
                let i = horizon.milestone_index(m).expect("milestone");
                alive[i].push(scenario.invest_column(a, j));
            }
        }
        for (i, _) in milestones.iter().enumerate() {
            for k in 0..scenario.periods {
                for t in 0..scenario.timesteps {
                    let p = scenario.production_column(a, i, k, t);
                    let mut terms = vec![(p, 1.0)];
                    terms.extend(alive[i].iter().map(|&x| (x, -1.0)));
                    program.add_constraint(terms, Sense::Le, 0.0)?;
                    rows.push(RowKind::ProductionLimit { production: p });
                }
            }
        }
    }

    for (i, &m) in milestones.iter().enumerate() {
        for k in 0..scenario.periods {
            for t in 0..scenario.timesteps {
                let terms = (0..scenario.technologies.len())
                    .map(|a| (scenario.production_column(a, i, k, t), 1.0))
                    .collect();
                program.add_constraint(terms, Sense::Ge, scenario.demand(m, k, t))?;
                rows.push(RowKind::Demand {
                    year: m,
                    period: k,
                    timestep: t,
                });
            }
        }
    }

    let index = keys.iter().enumerate().map(|(c, k)| (*k, c)).collect();
    Ok(LinearProgram {
        variant,
        program,
        directory: VariableDirectory {
            keys,
            index,
            num_invest: scenario.num_invest(),
        },
        rows,
    })
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ModelError> {
    if expected == got {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch { what, expected, got })
    }
}

/// `C^I + C^O` for fixed decisions, without optimising.
///
/// `invest` is ordered technology-major over milestones; `production` is ordered
/// technology, milestone, period, timestep. This is the column order of [`build_lp`].
pub fn objective_value(scenario: &Scenario, variant: ObjectiveVariant, invest: &[f64], production: &[f64]) -> Result<f64, ModelError> {
    let (ci, co) = cost_terms(scenario, variant, invest, production)?;
    Ok(ci.iter().map(|c| c.cost).sum::<f64>() + co.iter().map(|c| c.cost).sum::<f64>())
}

fn cost_terms(
    scenario: &Scenario,
    variant: ObjectiveVariant,
    invest: &[f64],
    production: &[f64],
) -> Result<(Vec<InvestmentCost>, Vec<OperationalCost>), ModelError> {
    variant.check_horizon(&scenario.horizon)?;
    check_len("investment levels", scenario.num_invest(), invest.len())?;
    check_len("production levels", scenario.num_production(), production.len())?;
    let milestones = scenario.horizon.milestones();

    let mut investment = Vec::with_capacity(invest.len());
    for (a, tech) in scenario.technologies.iter().enumerate() {
        for (i, &m) in milestones.iter().enumerate() {
            let capacity = invest[scenario.invest_column(a, i)];
            let coefficient = investment_coefficient(scenario, variant, a, m)?;
            investment.push(InvestmentCost {
                technology: tech.name().to_string(),
                year: m,
                capacity,
                cost: coefficient * capacity,
            });
        }
    }

    let offset = scenario.num_invest();
    let mut operational = Vec::with_capacity(milestones.len());
    for (i, &m) in milestones.iter().enumerate() {
        let mut cost = 0.0;
        for a in 0..scenario.technologies.len() {
            for k in 0..scenario.periods {
                let coefficient = operational_coefficient(scenario, a, m, k);
                for t in 0..scenario.timesteps {
                    cost += coefficient * production[scenario.production_column(a, i, k, t) - offset];
                }
            }
        }
        operational.push(OperationalCost { year: m, cost });
    }
    Ok((investment, operational))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvestmentCost {
    pub technology: String,
    pub year: u32,
    pub capacity: f64,
    /// Discounted to year 0.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationalCost {
    pub year: u32,
    /// Discounted to year 0, summed over technologies.
    pub cost: f64,
}

/// Itemised discounted costs of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub variant: ObjectiveVariant,
    pub investment: Vec<InvestmentCost>,
    pub operational: Vec<OperationalCost>,
    pub total_investment: f64,
    pub total_operational: f64,
    pub total: f64,
}

/// Decomposes the objective at `values` (LP column order) after checking that
/// the point is feasible for the variant's program.
pub fn cost_breakdown(scenario: &Scenario, variant: ObjectiveVariant, values: &[f64]) -> Result<CostBreakdown, ModelError> {
    let lp = build_lp(scenario, variant)?;
    check_len("solution", lp.directory.len(), values.len())?;
    let violation = lp
        .program
        .max_row_violation(values)
        .max(lp.program.max_bound_violation(values));
    if violation.is_nan() || violation > SOLUTION_FEASIBILITY_TOLERANCE {
        return Err(ModelError::InfeasibleSolution { violation });
    }
    let (invest, production) = lp.split(values);
    let (investment, operational) = cost_terms(scenario, variant, invest, production)?;
    let total_investment: f64 = investment.iter().map(|c| c.cost).sum();
    let total_operational: f64 = operational.iter().map(|c| c.cost).sum();
    Ok(CostBreakdown {
        variant,
        investment,
        operational,
        total_investment,
        total_operational,
        total: total_investment + total_operational,
    })
}

/// A built, solved and (when optimal) costed planning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub lp: LinearProgram,
    pub result: SolveResult,
    pub breakdown: Option<CostBreakdown>,
}

impl Plan {
    pub fn variant(&self) -> ObjectiveVariant {
        self.lp.variant
    }

    /// `(key, level)` for every column of an optimal solution.
    pub fn levels(&self) -> impl Iterator<Item = (VarKey, f64)> + '_ {
        self.result
            .values
            .iter()
            .enumerate()
            .map(|(c, &v)| (self.lp.directory.key(c), v))
    }
}

/// Builds and solves the planning LP for `variant`.
pub fn plan(scenario: &Scenario, variant: ObjectiveVariant, options: &SolverOptions) -> Result<Plan, ModelError> {
    let lp = build_lp(scenario, variant)?;
    let result = simplex::solve_with(&lp.program, options)?;
    let breakdown = if result.is_optimal() {
        Some(cost_breakdown(scenario, variant, &result.values)?)
    } else {
        None
    };
    Ok(Plan { lp, result, breakdown })
}
