use std::path::Path;

use capplan_core::{
    annualise, certify_equivalence, derive_milestone_weights, plan, quantify_milestone_bias, salvage_value, totalise,
    DiscountRate, Lifetime, ObjectiveVariant, Scenario, SolveStatus, SolverOptions, TechnologyParams, Verdict,
};

use crate::report::{MilestoneWeight, Quantity, RunReport, SolveSection};
use crate::{CliError, Exit, ScenarioFile};

fn scalar(command: &str, name: &str, value: f64) -> RunReport {
    let mut r = RunReport::new(command);
    r.quantities.push(Quantity {
        name: name.to_string(),
        value,
    });
    r
}

pub fn annuity(total_cost: f64, wacc: DiscountRate, lifetime: Lifetime) -> RunReport {
    scalar("annuity", "annualised_cost", annualise(total_cost, wacc, lifetime))
}

pub fn totalise_cost(annualised_cost: f64, wacc: DiscountRate, lifetime: Lifetime) -> RunReport {
    scalar("totalise", "overnight_cost", totalise(annualised_cost, wacc, lifetime))
}

pub fn salvage(
    total_cost: f64,
    wacc: DiscountRate,
    lifetime: Lifetime,
    invest_year: u32,
    last_year: u32,
) -> Result<RunReport, CliError> {
    let tech = TechnologyParams::from_overnight("asset", total_cost, wacc, lifetime).map_err(CliError::validation)?;
    let sv = salvage_value(&tech, invest_year, last_year).map_err(CliError::validation)?;
    Ok(scalar("salvage", "salvage_value", sv))
}

pub fn weights(milestones: &[u32], end: u32) -> Result<RunReport, CliError> {
    let w = derive_milestone_weights(milestones, end).map_err(CliError::validation)?;
    let mut r = RunReport::new("weights");
    r.weights = milestones
        .iter()
        .zip(w)
        .map(|(&milestone, weight)| MilestoneWeight { milestone, weight })
        .collect();
    Ok(r)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    Ok(ScenarioFile::load(path)?.to_scenario()?)
}

pub fn solve(scenario: &Scenario, variants: &[ObjectiveVariant], options: &SolverOptions) -> Result<RunReport, CliError> {
    let mut r = RunReport::new("solve");
    for &v in variants {
        let p = plan(scenario, v, options).map_err(CliError::validation)?;
        r.solves.push(SolveSection::from_plan(scenario, &p));
    }
    Ok(r)
}

pub fn compare(
    scenario: &Scenario,
    a: ObjectiveVariant,
    b: ObjectiveVariant,
    threshold: f64,
    options: &SolverOptions,
) -> Result<RunReport, CliError> {
    let mut r = RunReport::new("compare");
    r.equivalence = Some(certify_equivalence(scenario, a, b, threshold, options).map_err(CliError::validation)?);
    r.bias = Some(quantify_milestone_bias(scenario, options).map_err(CliError::validation)?);
    Ok(r)
}

pub fn bias(scenario: &Scenario, options: &SolverOptions) -> Result<RunReport, CliError> {
    let mut r = RunReport::new("bias");
    r.bias = Some(quantify_milestone_bias(scenario, options).map_err(CliError::validation)?);
    Ok(r)
}

/// Exit status implied by a finished report.
pub fn outcome(report: &RunReport) -> Result<(), CliError> {
    for s in &report.solves {
        let exit = match s.status {
            SolveStatus::Optimal => continue,
            SolveStatus::Infeasible => Exit::Infeasible,
            SolveStatus::Unbounded => Exit::Unbounded,
            SolveStatus::SolverFailure => Exit::SolverFailure,
        };
        return Err(CliError::new(exit, format!("{} program: {}", s.variant, exit.kind())));
    }
    if let Some(e) = &report.equivalence {
        if e.verdict == Verdict::Fail {
            return Err(CliError::new(
                Exit::NotEquivalent,
                format!(
                    "{} and {} differ (coefficient deviation {:e}, objective deviation {})",
                    e.variant_a,
                    e.variant_b,
                    e.max_coefficient_deviation,
                    e.max_objective_deviation.map_or("n/a".to_string(), |d| format!("{d:e}"))
                ),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate(s: &str) -> DiscountRate {
        s.parse().unwrap()
    }

    #[test]
    fn scalar_commands() {
        let lt = Lifetime::new(5).unwrap();
        let r = annuity(100.0, rate("2%"), lt);
        assert_eq!(format!("{:.2}", r.quantities[0].value), "20.80");
        let back = totalise_cost(r.quantities[0].value, rate("2%"), lt);
        assert!((back.quantities[0].value - 100.0).abs() < 1e-9);
        let sv = salvage(100.0, rate("5%"), Lifetime::new(8).unwrap(), 0, 4).unwrap();
        assert_eq!(format!("{:.2}", sv.quantities[0].value), "33.01");
    }

    #[test]
    fn argument_errors_are_validation_failures() {
        let err = salvage(100.0, rate("5%"), Lifetime::new(8).unwrap(), 5, 4).unwrap_err();
        assert_eq!(err.exit, Exit::Validation);
        let err = weights(&[1, 3], 5).unwrap_err();
        assert_eq!(err.exit, Exit::Validation);
    }

    #[test]
    fn weights_pair_up_with_milestones() {
        let r = weights(&[0, 2, 5], 5).unwrap();
        let w: Vec<(u32, u32)> = r.weights.iter().map(|w| (w.milestone, w.weight)).collect();
        assert_eq!(w, vec![(0, 2), (2, 3), (5, 1)]);
    }
}
