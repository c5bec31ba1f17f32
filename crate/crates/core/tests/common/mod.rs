//! Shared oracles and random instance generators for the integration suites.
//!
//! Nothing here calls into the solver or the coefficient code it is used to check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use capplan_core::finance::{CostOverride, TechnologySpec};
use capplan_core::{DiscountRate, Horizon, Lifetime, Scenario, Sense, StandardFormLp, TechnologyParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn rate(v: f64) -> DiscountRate {
    DiscountRate::new(v).unwrap()
}

pub fn life(n: u32) -> Lifetime {
    Lifetime::new(n).unwrap()
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `(1 + r)^-n` by repeated division.
pub fn discount(r: f64, n: u32) -> f64 {
    let mut f = 1.0;
    for _ in 0..n {
        f /= 1.0 + r;
    }
    f
}

/// Term-by-term annuity factor over `first..=last`.
pub fn annuity_sum(r: f64, first: u32, last: u32) -> f64 {
    (first..=last).map(|n| discount(r, n)).sum()
}

/// Overnight-to-annuity conversion by inverting the term-by-term sum.
pub fn annuity_of(total: f64, r: f64, lifetime: u32) -> f64 {
    total / annuity_sum(r, 0, lifetime - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOutcome {
    Optimal(f64),
    Infeasible,
}

/// Minimum of `lp` over all of its vertices. Every variable must have a finite
/// upper bound so the feasible region is a polytope.
///
/// Each candidate vertex fixes every variable at its lower bound, its upper bound
/// or leaves it free, and makes a subset of the inequality rows tight (equality
/// rows always are). When the number of tight rows equals the number of free
/// variables the square system is solved and the point kept if feasible.
pub fn vertex_enumeration(lp: &StandardFormLp) -> OracleOutcome {
    let n = lp.num_vars();
    assert!(lp.upper().iter().all(|u| u.is_finite()), "oracle needs bounded variables");
    let rows: Vec<(Vec<f64>, Sense, f64)> = lp
        .constraints()
        .iter()
        .map(|c| {
            let mut dense = vec![0.0; n];
            for &(j, a) in &c.terms {
                dense[j] += a;
            }
            (dense, c.sense, c.rhs)
        })
        .collect();
    // rows without coefficients are constant checks, never part of a vertex basis
    let constant_ok = rows.iter().filter(|r| r.0.iter().all(|&a| a == 0.0)).all(|(_, sense, b)| match sense {
        Sense::Le => 0.0 <= *b,
        Sense::Ge => 0.0 >= *b,
        Sense::Eq => *b == 0.0,
    });
    if !constant_ok {
        return OracleOutcome::Infeasible;
    }
    let rows: Vec<_> = rows.into_iter().filter(|r| r.0.iter().any(|&a| a != 0.0)).collect();
    let eq_rows: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].1 == Sense::Eq).collect();
    let ineq_rows: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].1 != Sense::Eq).collect();

    let feasible = |x: &[f64]| -> bool {
        let tol = 1e-9;
        for (j, &v) in x.iter().enumerate() {
            if v < lp.lower()[j] - tol || v > lp.upper()[j] + tol {
                return false;
            }
        }
        rows.iter().all(|(a, sense, b)| {
            let lhs: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
            let scale = 1.0 + b.abs();
            match sense {
                Sense::Le => lhs <= b + tol * scale,
                Sense::Ge => lhs >= b - tol * scale,
                Sense::Eq => (lhs - b).abs() <= tol * scale,
            }
        })
    };

    let mut best: Option<f64> = None;
    let states = 3usize.pow(n as u32);
    for code in 0..states {
        let mut x = vec![0.0; n];
        let mut free = Vec::new();
        let mut c = code;
        for j in 0..n {
            match c % 3 {
                0 => x[j] = lp.lower()[j],
                1 => x[j] = lp.upper()[j],
                _ => free.push(j),
            }
            c /= 3;
        }
        let needed = free.len();
        if needed < eq_rows.len() {
            continue;
        }
        for mask in 0u32..(1 << ineq_rows.len()) {
            if (mask.count_ones() as usize) + eq_rows.len() != needed {
                continue;
            }
            let tight: Vec<usize> = eq_rows
                .iter()
                .copied()
                .chain(
                    ineq_rows
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| mask & (1 << k) != 0)
                        .map(|(_, &i)| i),
                )
                .collect();
            let mut point = x.clone();
            if needed > 0 {
                let mut a = vec![vec![0.0; needed + 1]; needed];
                for (r, &i) in tight.iter().enumerate() {
                    let (coeffs, _, rhs) = &rows[i];
                    let fixed: f64 = (0..n).filter(|j| !free.contains(j)).map(|j| coeffs[j] * x[j]).sum();
                    for (k, &j) in free.iter().enumerate() {
                        a[r][k] = coeffs[j];
                    }
                    a[r][needed] = rhs - fixed;
                }
                match gaussian_solve(a) {
                    Some(sol) => {
                        for (k, &j) in free.iter().enumerate() {
                            point[j] = sol[k];
                        }
                    }
                    None => continue,
                }
            }
            if feasible(&point) {
                let obj: f64 = lp.objective().iter().zip(&point).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
    }
    match best {
        Some(v) => OracleOutcome::Optimal(v),
        None => OracleOutcome::Infeasible,
    }
}

/// Gaussian elimination with partial pivoting on an augmented `k × (k+1)` matrix.
fn gaussian_solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let k = a.len();
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..k {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=k {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

/// Random bounded LP with up to `max_vars` variables and up to four rows. Roughly
/// four in five instances are built around a known feasible point.
pub fn random_lp(rng: &mut ChaCha8Rng, max_vars: usize) -> StandardFormLp {
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(1..=4usize);
    let objective: Vec<f64> = (0..n).map(|_| round(rng.random_range(-10.0..10.0))).collect();
    let mut lp = StandardFormLp::new(objective);
    let mut anchor = vec![0.0; n];
    for (j, slot) in anchor.iter_mut().enumerate() {
        let lower = if rng.random_bool(0.7) { 0.0 } else { round(rng.random_range(-3.0..3.0)) };
        let upper = lower + round(rng.random_range(0.5..10.0));
        lp.set_bounds(j, lower, upper).unwrap();
        *slot = rng.random_range(lower..upper);
    }
    let anchored = rng.random_bool(0.8);
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.25) { 0.0 } else { round(rng.random_range(-5.0..5.0)) })
            .collect();
        let activity: f64 = coeffs.iter().zip(&anchor).map(|(a, x)| a * x).sum();
        let sense = match rng.random_range(0..10) {
            0..=4 => Sense::Le,
            5..=8 => Sense::Ge,
            _ => Sense::Eq,
        };
        let slackness = rng.random_range(0.0..3.0);
        let rhs = if anchored {
            match sense {
                Sense::Le => activity + slackness,
                Sense::Ge => activity - slackness,
                Sense::Eq => activity,
            }
        } else {
            rng.random_range(-20.0..20.0)
        };
        lp.add_dense_constraint(&coeffs, sense, rhs).unwrap();
    }
    lp
}

fn round(v: f64) -> f64 {
    (v * 4.0).round() / 4.0
}

/// Parameters for [`random_scenario`].
#[derive(Debug, Clone, Copy)]
pub struct ScenarioShape {
    /// Yearly horizon when true, otherwise random sparse milestones.
    pub yearly: bool,
    /// Pin investments to zero where the lifetime would run past the horizon.
    pub full_lifetimes_only: bool,
    /// Lower bound on every WACC.
    pub min_wacc: f64,
    /// Force at least one milestone with weight above one.
    pub require_sparse: bool,
}

impl Default for ScenarioShape {
    fn default() -> Self {
        ScenarioShape {
            yearly: true,
            full_lifetimes_only: false,
            min_wacc: 0.0,
            require_sparse: false,
        }
    }
}

pub fn random_horizon(rng: &mut ChaCha8Rng, shape: ScenarioShape) -> Horizon {
    let end = rng.random_range(if shape.require_sparse { 1..=14 } else { 0..=12u32 });
    if shape.yearly {
        return Horizon::yearly(end);
    }
    loop {
        let mut ms = vec![0u32];
        for y in 1..=end {
            if rng.random_bool(0.4) {
                ms.push(y);
            }
        }
        let h = Horizon::new(ms, end).unwrap();
        if !shape.require_sparse || h.weights().iter().any(|&w| w > 1) {
            return h;
        }
    }
}

pub fn random_scenario(rng: &mut ChaCha8Rng, shape: ScenarioShape) -> Scenario {
    let horizon = random_horizon(rng, shape);
    let end = horizon.end();
    let social = rng.random_range(0.0..0.08);
    let n_tech = rng.random_range(1..=3usize);
    let periods = rng.random_range(1..=2u32);
    let timesteps = rng.random_range(1..=2u32);

    let mut techs = Vec::new();
    for a in 0..n_tech {
        let max_lt = if shape.full_lifetimes_only { end + 1 } else { end + 8 };
        let lifetime = rng.random_range(1..=max_lt.min(40));
        let wacc = rng.random_range(shape.min_wacc..0.15f64.max(shape.min_wacc + 0.01));
        let mut spec = TechnologySpec::overnight(format!("tech{a}"), rng.random_range(10.0..1000.0), rate(wacc), life(lifetime));
        spec.variable_cost = rng.random_range(0.0..20.0);
        if rng.random_bool(0.3) {
            spec.max_invest = Some(rng.random_range(5.0..50.0));
        }
        let mut overrides = BTreeMap::new();
        for &m in horizon.milestones() {
            let mut o = CostOverride::default();
            let mut touched = false;
            if rng.random_bool(0.2) {
                o.overnight_cost = Some(rng.random_range(10.0..1000.0));
                touched = true;
            }
            if rng.random_bool(0.2) {
                o.wacc = Some(rate(rng.random_range(shape.min_wacc..0.15f64.max(shape.min_wacc + 0.01))));
                touched = true;
            }
            if shape.full_lifetimes_only && m + lifetime - 1 > end {
                o.max_invest = Some(0.0);
                touched = true;
            }
            if touched {
                overrides.insert(m, o);
            }
        }
        spec.overrides = overrides;
        techs.push(TechnologyParams::new(spec).unwrap());
    }

    let mut builder = Scenario::builder(horizon.clone(), rate(social)).grid(periods, timesteps);
    for (i, &m) in horizon.milestones().iter().enumerate() {
        // only ask for demand some investable capacity can serve
        let servable = techs.iter().any(|t| {
            horizon.milestones()[..=i].iter().any(|&j| {
                j + t.lifetime().years() > m && t.max_invest(j) != Some(0.0)
            })
        });
        for k in 0..periods {
            if rng.random_bool(0.5) {
                builder = builder.operational_weight(m, k, rng.random_range(0.5..100.0));
            }
            for t in 0..timesteps {
                if servable && rng.random_bool(0.7) {
                    builder = builder.demand(m, k, t, rng.random_range(0.0..10.0));
                }
            }
        }
    }
    for t in techs {
        builder = builder.technology(t);
    }
    builder.build().unwrap()
}
