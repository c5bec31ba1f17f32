//! Cross-checks between objective variants and the error introduced by
//! milestone-year weighting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finance::discount_factor;
use crate::horizon::{detect_lifetime_gap, LifetimeGap};
use crate::model::{
    build_lp, exact_annualised_coefficient, investment_coefficient, plan, ModelError, ObjectiveVariant,
    Scenario,
};
use crate::simplex::{self, SolveStatus, SolverOptions};

pub const DEFAULT_EQUIVALENCE_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("variants {a} and {b} do not share variables and constraints")]
    StructuralMismatch { a: ObjectiveVariant, b: ObjectiveVariant },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] simplex::LpError),
}

/// `|a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub variant_a: ObjectiveVariant,
    pub variant_b: ObjectiveVariant,
    pub threshold: f64,
    /// Columns whose coefficients were compared; columns fixed at zero are skipped.
    pub compared_columns: usize,
    pub max_coefficient_deviation: f64,
    pub status_a: SolveStatus,
    pub status_b: SolveStatus,
    pub objective_a: Option<f64>,
    pub objective_b: Option<f64>,
    /// `None` unless both programs solved to optimality.
    pub max_objective_deviation: Option<f64>,
    pub verdict: Verdict,
}

/// Compares the objective coefficients of two variants on the same scenario, then
/// solves both programs and compares their optima.
///
/// The verdict passes when coefficient and objective deviations are both within
/// `threshold`. When neither program has an optimum, the verdict passes only if
/// both fail the same way.
pub fn certify_equivalence(
    scenario: &Scenario,
    variant_a: ObjectiveVariant,
    variant_b: ObjectiveVariant,
    threshold: f64,
    options: &SolverOptions,
) -> Result<EquivalenceReport, AnalysisError> {
    let lp_a = build_lp(scenario, variant_a)?;
    let lp_b = build_lp(scenario, variant_b)?;
    if !lp_a.same_structure(&lp_b) {
        return Err(AnalysisError::StructuralMismatch {
            a: variant_a,
            b: variant_b,
        });
    }

    let upper = lp_a.program().upper();
    let mut compared_columns = 0;
    let mut max_coefficient_deviation: f64 = 0.0;
    for (j, (ca, cb)) in lp_a.objective().iter().zip(lp_b.objective()).enumerate() {
        // a column pinned at zero cannot contribute to either objective
        if upper[j] == 0.0 {
            continue;
        }
        compared_columns += 1;
        max_coefficient_deviation = max_coefficient_deviation.max(relative_deviation(*ca, *cb));
    }

    let ra = simplex::solve_with(lp_a.program(), options)?;
    let rb = simplex::solve_with(lp_b.program(), options)?;
    let max_objective_deviation = match (ra.objective, rb.objective) {
        (Some(a), Some(b)) => Some(relative_deviation(a, b)),
        _ => None,
    };
    let objectives_agree = match max_objective_deviation {
        Some(d) => d <= threshold,
        None => ra.status == rb.status,
    };
    let verdict = if max_coefficient_deviation <= threshold && objectives_agree {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(EquivalenceReport {
        variant_a,
        variant_b,
        threshold,
        compared_columns,
        max_coefficient_deviation,
        status_a: ra.status,
        status_b: rb.status,
        objective_a: ra.objective,
        objective_b: rb.objective,
        max_objective_deviation,
        verdict,
    })
}

/// Investment coefficient of one decision under both milestone methods against
/// its yearly-resolution value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvestmentBias {
    pub technology: String,
    pub year: u32,
    pub exact: f64,
    pub annualised_milestone: f64,
    pub total_salvage_milestone: f64,
    /// `annualised_milestone - exact`
    pub annualised_gap: f64,
    /// `total_salvage_milestone - exact`
    pub total_salvage_gap: f64,
    pub lifetime_gap: LifetimeGap,
}

/// Discount multiplier applied to one unit of operational cost at a milestone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationalBias {
    pub year: u32,
    /// `W_m (1+R)^-m`
    pub weighted: f64,
    /// Sum of `(1+R)^-y` over the years the milestone represents.
    pub exact: f64,
    pub gap: f64,
}

/// Objective of a solved milestone plan against the same plan re-costed year by year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanBias {
    pub variant: ObjectiveVariant,
    pub status: SolveStatus,
    pub milestone_objective: Option<f64>,
    pub exact_objective: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub investment: Vec<InvestmentBias>,
    pub operational: Vec<OperationalBias>,
    pub plans: Vec<PlanBias>,
}

impl BiasReport {
    pub fn lifetime_gaps(&self) -> impl Iterator<Item = &InvestmentBias> {
        self.investment.iter().filter(|b| b.lifetime_gap.is_gap())
    }
}

/// Yearly-resolution multiplier for operation at milestone index `i`: the
/// milestone's production and unit costs are carried into every year of its
/// block, each discounted at its own year.
fn exact_operational_multiplier(scenario: &Scenario, index: usize) -> f64 {
    scenario
        .horizon()
        .block(index)
        .map(|y| discount_factor(scenario.social_rate(), y))
        .sum()
}

/// Quantifies how far the milestone formulations drift from a yearly-resolution
/// costing of the same decisions.
pub fn quantify_milestone_bias(scenario: &Scenario, options: &SolverOptions) -> Result<BiasReport, AnalysisError> {
    let horizon = scenario.horizon();

    let mut investment = Vec::new();
    for (a, tech) in scenario.technologies().iter().enumerate() {
        for &m in horizon.milestones() {
            let exact = exact_annualised_coefficient(scenario, a, m);
            let annualised_milestone = investment_coefficient(scenario, ObjectiveVariant::AnnualisedMilestone, a, m)?;
            let total_salvage_milestone =
                investment_coefficient(scenario, ObjectiveVariant::TotalSalvageMilestone, a, m)?;
            investment.push(InvestmentBias {
                technology: tech.name().to_string(),
                year: m,
                exact,
                annualised_milestone,
                total_salvage_milestone,
                annualised_gap: annualised_milestone - exact,
                total_salvage_gap: total_salvage_milestone - exact,
                lifetime_gap: detect_lifetime_gap(m, tech.lifetime(), horizon).map_err(ModelError::from)?,
            });
        }
    }

    let operational = horizon
        .milestones()
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let weighted = horizon.weights()[i] as f64 * discount_factor(scenario.social_rate(), m);
            let exact = exact_operational_multiplier(scenario, i);
            OperationalBias {
                year: m,
                weighted,
                exact,
                gap: weighted - exact,
            }
        })
        .collect();

    let mut plans = Vec::new();
    for variant in [ObjectiveVariant::AnnualisedMilestone, ObjectiveVariant::TotalSalvageMilestone] {
        let p = plan(scenario, variant, options)?;
        let exact_objective = p.result.is_optimal().then(|| exact_plan_cost(scenario, &p.result.values));
        let milestone_objective = p.result.objective;
        plans.push(PlanBias {
            variant,
            status: p.result.status,
            milestone_objective,
            exact_objective,
            gap: milestone_objective.zip(exact_objective).map(|(m, e)| m - e),
        });
    }

    Ok(BiasReport {
        investment,
        operational,
        plans,
    })
}

/// Yearly-resolution cost of a milestone solution (LP column order).
fn exact_plan_cost(scenario: &Scenario, values: &[f64]) -> f64 {
    let horizon = scenario.horizon();
    let milestones = horizon.milestones();
    let n_tech = scenario.technologies().len();
    let (periods, timesteps) = (scenario.periods() as usize, scenario.timesteps() as usize);

    let mut cost = 0.0;
    for a in 0..n_tech {
        for (i, &m) in milestones.iter().enumerate() {
            cost += exact_annualised_coefficient(scenario, a, m) * values[a * milestones.len() + i];
        }
    }
    let offset = scenario.num_invest();
    for a in 0..n_tech {
        for (i, &m) in milestones.iter().enumerate() {
            let multiplier = exact_operational_multiplier(scenario, i) * scenario.technologies()[a].variable_cost(m);
            for k in 0..periods {
                let w = scenario.operational_weight(m, k as u32);
                for t in 0..timesteps {
                    let col = offset + ((a * milestones.len() + i) * periods + k) * timesteps + t;
                    cost += multiplier * w * values[col];
                }
            }
        }
    }
    cost
}
