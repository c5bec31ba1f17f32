//! Exit criteria for the planning toolkit. Runs every criterion, prints one
//! PASS/FAIL line each and exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use capplan_core::analysis::{certify_equivalence, Verdict};
use capplan_core::model::{build_lp, exact_annualised_coefficient, investment_coefficient, objective_value};
use capplan_core::{
    annualise, derive_milestone_weights, salvage_value, simplex, totalise, Horizon, ObjectiveVariant, Scenario,
    SolveStatus, SolverOptions, TechnologyParams, VarKey,
};
use common::*;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1_annuity_reproduction() -> Outcome {
    let a = annualise(100.0, rate(0.02), life(5));
    let b = annualise(100.0, rate(0.05), life(8));
    ensure((a - 20.80).abs() <= 0.005, || format!("annualise(100, 2%, 5) = {a}"))?;
    ensure((b - 14.74).abs() <= 0.005, || format!("annualise(100, 5%, 8) = {b}"))?;
    Ok(format!("{a:.6} ≈ 20.80, {b:.6} ≈ 14.74"))
}

fn ac2_salvage_reproduction() -> Outcome {
    let tech = TechnologyParams::from_overnight("t", 100.0, rate(0.05), life(8)).unwrap();
    let sv = salvage_value(&tech, 0, 4).unwrap();
    ensure((sv - 33.01).abs() <= 0.005, || format!("salvage = {sv}"))?;
    Ok(format!("{sv:.6} ≈ 33.01"))
}

fn ac3_milestone_weights() -> Outcome {
    let w = derive_milestone_weights(&[0, 2, 5], 5).map_err(|e| e.to_string())?;
    ensure(w == vec![2, 3, 1], || format!("weights = {w:?}"))?;
    Ok(format!("{w:?}"))
}

fn ac4_coefficient_reproduction() -> Outcome {
    let mut worst: f64 = 0.0;
    for wacc in [0.0, 0.02, 0.05] {
        let tech = TechnologyParams::from_overnight("t", 100.0, rate(wacc), life(6)).unwrap();
        let s = Scenario::builder(Horizon::new(vec![0, 2, 5], 5).unwrap(), rate(0.03))
            .technology(tech)
            .build()
            .unwrap();
        let lp = build_lp(&s, ObjectiveVariant::AnnualisedMilestone).map_err(|e| e.to_string())?;
        let col = lp
            .directory()
            .column(&VarKey::Invest { technology: 0, year: 0 })
            .unwrap();
        let ca = annuity_of(100.0, wacc, 6);
        let oracle = ca * (2.0 + 3.0 * discount(wacc, 2) + discount(wacc, 5));
        let dev = rel(lp.objective()[col], oracle);
        worst = worst.max(dev);
        ensure(dev <= 1e-12, || format!("wacc {wacc}: {} vs {oracle} (rel {dev:e})", lp.objective()[col]))?;
    }
    Ok(format!("WACC ∈ {{0, 2%, 5%}}, max rel dev {worst:.1e}"))
}

fn max_free_coefficient_deviation(s: &Scenario, a: ObjectiveVariant, b: ObjectiveVariant) -> Result<f64, String> {
    let la = build_lp(s, a).map_err(|e| e.to_string())?;
    let lb = build_lp(s, b).map_err(|e| e.to_string())?;
    Ok(la
        .objective()
        .iter()
        .zip(lb.objective())
        .zip(la.program().upper())
        .filter(|(_, &u)| u > 0.0)
        .map(|((x, y), _)| rel(*x, *y))
        .fold(0.0, f64::max))
}

fn ac5_equivalence_full_horizon() -> Outcome {
    let mut r = rng(5);
    let shape = ScenarioShape {
        full_lifetimes_only: true,
        ..Default::default()
    };
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    let mut optimal = 0;
    for i in 0..200 {
        let s = random_scenario(&mut r, shape);
        let dev = max_free_coefficient_deviation(&s, ObjectiveVariant::Total, ObjectiveVariant::Annualised)?;
        worst = worst.max(dev);
        ensure(dev <= 1e-9, || format!("scenario {i}: coefficient deviation {dev:e}"))?;
        let report = certify_equivalence(&s, ObjectiveVariant::Total, ObjectiveVariant::Annualised, 1e-9, &opts)
            .map_err(|e| e.to_string())?;
        ensure(report.verdict == Verdict::Pass, || format!("scenario {i}: {report:?}"))?;
        if report.status_a == SolveStatus::Optimal {
            optimal += 1;
        }
    }
    Ok(format!("200 scenarios ({optimal} solved to optimality), max rel dev {worst:.1e}"))
}

fn ac6_equivalence_truncated() -> Outcome {
    let tech = TechnologyParams::from_overnight("t", 100.0, rate(0.05), life(8)).unwrap();
    let net = 100.0 - salvage_value(&tech, 0, 4).unwrap();
    ensure((net - 66.99).abs() <= 0.01, || format!("C^T - SV = {net}"))?;
    let fixture = Scenario::builder(Horizon::yearly(4), rate(0.0)).technology(tech).build().unwrap();
    let fixture_dev =
        max_free_coefficient_deviation(&fixture, ObjectiveVariant::TotalSalvage, ObjectiveVariant::Annualised)?;
    ensure(fixture_dev <= 1e-9, || format!("fixture deviation {fixture_dev:e}"))?;

    let mut r = rng(6);
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let s = random_scenario(&mut r, ScenarioShape::default());
        let report = certify_equivalence(&s, ObjectiveVariant::TotalSalvage, ObjectiveVariant::Annualised, 1e-9, &opts)
            .map_err(|e| e.to_string())?;
        worst = worst.max(report.max_coefficient_deviation);
        ensure(report.verdict == Verdict::Pass, || format!("scenario {i}: {report:?}"))?;
    }
    Ok(format!("fixture C^T-SV = {net:.4}; 200 scenarios, max rel dev {worst:.1e}"))
}

fn ac7_degeneration() -> Outcome {
    let mut r = rng(7);
    let opts = SolverOptions::default();
    let pairs = [
        (ObjectiveVariant::AnnualisedMilestone, ObjectiveVariant::Annualised),
        (ObjectiveVariant::TotalSalvageMilestone, ObjectiveVariant::TotalSalvage),
    ];
    let mut worst: f64 = 0.0;
    let mut solved = 0;
    for i in 0..100 {
        let s = random_scenario(&mut r, ScenarioShape::default());
        // random feasible-or-not decision levels
        let invest: Vec<f64> = (0..s.num_invest()).map(|_| r.random_range(0.0..10.0)).collect();
        let production: Vec<f64> = (0..s.num_production()).map(|_| r.random_range(0.0..10.0)).collect();
        for (milestone, yearly) in pairs {
            let a = objective_value(&s, milestone, &invest, &production).map_err(|e| e.to_string())?;
            let b = objective_value(&s, yearly, &invest, &production).map_err(|e| e.to_string())?;
            worst = worst.max(rel(a, b));
            ensure(rel(a, b) <= 1e-12, || format!("scenario {i} {milestone}: {a} vs {b}"))?;

            let ra = simplex::solve_with(build_lp(&s, milestone).unwrap().program(), &opts).unwrap();
            let rb = simplex::solve_with(build_lp(&s, yearly).unwrap().program(), &opts).unwrap();
            ensure(ra.status == rb.status, || format!("scenario {i}: status {:?} vs {:?}", ra.status, rb.status))?;
            if let (Some(a), Some(b)) = (ra.objective, rb.objective) {
                solved += 1;
                worst = worst.max(rel(a, b));
                ensure(rel(a, b) <= 1e-12, || format!("scenario {i} {milestone} optimum: {a} vs {b}"))?;
            }
        }
    }
    Ok(format!("100 scenarios, {solved} optima compared, max rel dev {worst:.1e}"))
}

fn ac8_solver_oracle() -> Outcome {
    let run = || -> Result<(Vec<(SolveStatus, Option<u64>, Vec<u64>)>, usize, f64), String> {
        let mut r = rng(8);
        let mut fingerprints = Vec::new();
        let mut optimal = 0;
        let mut worst: f64 = 0.0;
        for i in 0..500 {
            let lp = random_lp(&mut r, 8);
            let got = simplex::solve(&lp).map_err(|e| e.to_string())?;
            match (vertex_enumeration(&lp), got.status) {
                (OracleOutcome::Optimal(best), SolveStatus::Optimal) => {
                    let obj = got.objective.unwrap();
                    let dev = (obj - best).abs() / best.abs().max(obj.abs()).max(1.0);
                    worst = worst.max(dev);
                    ensure(dev <= 1e-7, || format!("lp {i}: simplex {obj} vs oracle {best}"))?;
                    ensure(lp.max_row_violation(&got.values) <= 1e-7, || format!("lp {i}: row violation"))?;
                    ensure(lp.max_bound_violation(&got.values) <= 1e-9, || format!("lp {i}: bound violation"))?;
                    optimal += 1;
                }
                (OracleOutcome::Infeasible, SolveStatus::Infeasible) => {}
                (expected, status) => return Err(format!("lp {i}: oracle {expected:?}, simplex {status:?}")),
            }
            fingerprints.push((
                got.status,
                got.objective.map(f64::to_bits),
                got.values.iter().map(|v| v.to_bits()).collect(),
            ));
        }
        Ok((fingerprints, optimal, worst))
    };
    let (first, optimal, worst) = run()?;
    for repeat in 1..3 {
        let (again, _, _) = run()?;
        ensure(again == first, || format!("run {repeat} differs from run 0"))?;
    }
    Ok(format!("500 LPs ({optimal} optimal), max rel dev {worst:.1e}, 3 identical runs"))
}

fn ac9_bias_sign() -> Outcome {
    let mut r = rng(9);
    let shape = ScenarioShape {
        yearly: false,
        min_wacc: 0.001,
        require_sparse: true,
        ..Default::default()
    };
    let mut checked = 0;
    for i in 0..200 {
        let s = random_scenario(&mut r, shape);
        let end = s.horizon().end();
        let social = s.social_rate().value();
        let mut strict = false;
        for (a, tech) in s.technologies().iter().enumerate() {
            for &m in s.horizon().milestones() {
                let wacc = tech.wacc(m).value();
                let last = (m + tech.lifetime().years() - 1).min(end);
                let exact = discount(social, m) * tech.annualised_cost(m) * annuity_sum(wacc, 0, last - m);
                let lib_exact = exact_annualised_coefficient(&s, a, m);
                ensure(rel(exact, lib_exact) <= 1e-12, || format!("scenario {i}: exact coefficient {lib_exact} vs {exact}"))?;
                let weighted = investment_coefficient(&s, ObjectiveVariant::AnnualisedMilestone, a, m).unwrap();
                ensure(weighted >= exact * (1.0 - 1e-12), || {
                    format!("scenario {i} tech {a} year {m}: weighted {weighted} < exact {exact}")
                })?;
                if weighted > exact * (1.0 + 1e-12) {
                    strict = true;
                }
                checked += 1;
            }
        }
        ensure(strict, || format!("scenario {i}: no strictly overestimated coefficient"))?;
    }
    Ok(format!("200 sparse scenarios, {checked} coefficients, each with a strict overestimate"))
}

fn ac10_roundtrip() -> Outcome {
    let mut r = rng(10);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let cost = r.random_range(0.0..1e6);
        let wacc = rate(r.random_range(0.0..=0.2));
        let lt = life(r.random_range(1..=60));
        let back = totalise(annualise(cost, wacc, lt), wacc, lt);
        worst = worst.max(rel(back, cost));
        ensure(rel(back, cost) <= 1e-9, || format!("cost {cost}, wacc {wacc}, lt {lt}: {back}"))?;
    }
    for lt in [1u32, 30, 60] {
        let back = totalise(annualise(500.0, rate(0.0), life(lt)), rate(0.0), life(lt));
        ensure(rel(back, 500.0) <= 1e-9, || format!("zero rate lt {lt}: {back}"))?;
    }
    Ok(format!("10000 samples, max rel dev {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1 annuity reproduction", ac1_annuity_reproduction),
        ("AC2 salvage reproduction", ac2_salvage_reproduction),
        ("AC3 milestone weights", ac3_milestone_weights),
        ("AC4 coefficient reproduction", ac4_coefficient_reproduction),
        ("AC5 equivalence, full horizon", ac5_equivalence_full_horizon),
        ("AC6 equivalence, truncated horizon", ac6_equivalence_truncated),
        ("AC7 milestone degeneration", ac7_degeneration),
        ("AC8 solver vs vertex enumeration", ac8_solver_oracle),
        ("AC9 milestone bias sign", ac9_bias_sign),
        ("AC10 annuity roundtrip", ac10_roundtrip),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let start = Instant::now();
        let outcome = criterion();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name}: {detail} ({secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail} ({secs:.2}s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
