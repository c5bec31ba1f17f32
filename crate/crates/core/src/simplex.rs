//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are stated as `min c·v` subject to linear rows (`≤`, `=`, `≥`) and
//! per-variable bounds `lower ≤ v ≤ upper`. Lower bounds must be finite; upper
//! bounds may be `f64::INFINITY`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("row {row} references variable {column} but the program has {num_vars} variables")]
    ColumnOutOfRange { row: usize, column: usize, num_vars: usize },
    #[error("variable {0} is out of range")]
    UnknownVariable(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { var: usize, lower: f64, upper: f64 },
    #[error("variable {0} needs a finite lower bound")]
    InfiniteLowerBound(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

/// A sparse row `Σ coefficient·v  sense  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate this row (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardFormLp {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl StandardFormLp {
    /// Program with the given costs, no rows and bounds `0 ≤ v < ∞`.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        StandardFormLp {
            objective,
            constraints: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Result<usize, LpError> {
        let row = self.constraints.len();
        let num_vars = self.num_vars();
        if let Some(&(column, _)) = terms.iter().find(|&&(j, _)| j >= num_vars) {
            return Err(LpError::ColumnOutOfRange { row, column, num_vars });
        }
        if !rhs.is_finite() || terms.iter().any(|(_, a)| !a.is_finite()) {
            return Err(LpError::NonFinite("constraint"));
        }
        self.constraints.push(Constraint { terms, sense, rhs });
        Ok(row)
    }

    /// Adds a row given as a dense coefficient vector.
    pub fn add_dense_constraint(&mut self, coefficients: &[f64], sense: Sense, rhs: f64) -> Result<usize, LpError> {
        let terms = coefficients
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(j, &a)| (j, a))
            .collect();
        self.add_constraint(terms, sense, rhs)
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        if var >= self.num_vars() {
            return Err(LpError::UnknownVariable(var));
        }
        if !lower.is_finite() {
            return Err(LpError::InfiniteLowerBound(var));
        }
        if upper.is_nan() {
            return Err(LpError::NonFinite("bounds"));
        }
        if lower > upper {
            return Err(LpError::InvertedBounds { var, lower, upper });
        }
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    /// Largest row violation at `values`.
    pub fn max_row_violation(&self, values: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.violation(values))
            .fold(0.0, f64::max)
    }

    /// Largest bound violation at `values`.
    pub fn max_bound_violation(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        for (var, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !lo.is_finite() {
                return Err(LpError::InfiniteLowerBound(var));
            }
            if lo > hi {
                return Err(LpError::InvertedBounds { var, lower: lo, upper: hi });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration limit hit, or every improving column was rejected for lack of a
    /// numerically safe pivot.
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Variable values; empty unless the status is optimal.
    pub values: Vec<f64>,
    /// `c·v` at the reported values; `None` unless optimal.
    pub objective: Option<f64>,
    pub iterations: usize,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    fn without_solution(status: SolveStatus, iterations: usize) -> Self {
        SolveResult {
            status,
            values: Vec::new(),
            objective: None,
            iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Absolute tolerance on row and bound satisfaction, and on the phase-one residual.
    pub feasibility_tol: f64,
    /// Reduced costs below `-optimality_tol` are considered improving.
    pub optimality_tol: f64,
    /// Pivot elements at or below this magnitude are never used.
    pub pivot_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-11,
            max_iterations: 200_000,
        }
    }
}

/// Solves `lp` with default tolerances.
pub fn solve(lp: &StandardFormLp) -> Result<SolveResult, LpError> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &StandardFormLp, options: &SolverOptions) -> Result<SolveResult, LpError> {
    lp.validate()?;
    let mut tableau = Tableau::build(lp);
    let mut iterations = 0;

    if tableau.num_artificial > 0 {
        tableau.set_phase_one_costs();
        match tableau.run(options, &mut iterations, true) {
            Outcome::Optimal => {}
            Outcome::Unbounded | Outcome::Stalled => {
                return Ok(SolveResult::without_solution(SolveStatus::SolverFailure, iterations))
            }
        }
        if tableau.objective_value() > options.feasibility_tol {
            return Ok(SolveResult::without_solution(SolveStatus::Infeasible, iterations));
        }
        tableau.drive_out_artificials(options, &mut iterations);
    }

    tableau.set_phase_two_costs(lp);
    match tableau.run(options, &mut iterations, false) {
        Outcome::Optimal => {}
        Outcome::Unbounded => return Ok(SolveResult::without_solution(SolveStatus::Unbounded, iterations)),
        Outcome::Stalled => return Ok(SolveResult::without_solution(SolveStatus::SolverFailure, iterations)),
    }

    let mut values = tableau.structural_values(lp);
    for (v, (&lo, &hi)) in values.iter_mut().zip(lp.lower.iter().zip(&lp.upper)) {
        if *v < lo && lo - *v <= options.feasibility_tol {
            *v = lo;
        }
        if *v > hi && *v - hi <= options.feasibility_tol {
            *v = hi;
        }
    }
    if lp.max_row_violation(&values) > options.feasibility_tol || lp.max_bound_violation(&values) > 0.0 {
        return Ok(SolveResult::without_solution(SolveStatus::SolverFailure, iterations));
    }
    Ok(SolveResult {
        status: SolveStatus::Optimal,
        objective: Some(lp.evaluate(&values)),
        values,
        iterations,
    })
}

enum Outcome {
    Optimal,
    Unbounded,
    Stalled,
}

/// Row-major tableau over shifted variables `v - lower ≥ 0`, slacks and artificials.
///
/// Column layout: structural, slack/surplus, artificial, then the right-hand side.
struct Tableau {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    /// Reduced costs followed by the negated objective value.
    costs: Vec<f64>,
    basis: Vec<usize>,
    num_structural: usize,
    first_artificial: usize,
    num_artificial: usize,
}

impl Tableau {
    fn build(lp: &StandardFormLp) -> Self {
        let n = lp.num_vars();

        // (dense coefficients over structural columns, sense, rhs), shifted by lower bounds
        let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
        for c in &lp.constraints {
            let mut coeffs = vec![0.0; n];
            let mut rhs = c.rhs;
            for &(j, a) in &c.terms {
                coeffs[j] += a;
                rhs -= a * lp.lower[j];
            }
            rows.push((coeffs, c.sense, rhs));
        }
        for j in 0..n {
            if lp.upper[j].is_finite() {
                let mut coeffs = vec![0.0; n];
                coeffs[j] = 1.0;
                rows.push((coeffs, Sense::Le, lp.upper[j] - lp.lower[j]));
            }
        }
        for (coeffs, sense, rhs) in rows.iter_mut() {
            if *rhs < 0.0 {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                *rhs = -*rhs;
                *sense = match *sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
        }

        let m = rows.len();
        let num_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let num_artificial = rows.iter().filter(|r| r.1 != Sense::Le).count();
        let first_slack = n;
        let first_artificial = n + num_slack;
        let cols = first_artificial + num_artificial;
        let stride = cols + 1;

        let mut data = vec![0.0; m * stride];
        let mut basis = Vec::with_capacity(m);
        let (mut slack, mut art) = (first_slack, first_artificial);
        for (i, (coeffs, sense, rhs)) in rows.into_iter().enumerate() {
            let row = &mut data[i * stride..(i + 1) * stride];
            row[..n].copy_from_slice(&coeffs);
            row[cols] = rhs;
            match sense {
                Sense::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Sense::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                Sense::Eq => {
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
        }

        Tableau {
            rows: m,
            cols,
            data,
            costs: vec![0.0; stride],
            basis,
            num_structural: n,
            first_artificial,
            num_artificial,
        }
    }

    fn stride(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.stride() + col]
    }

    fn rhs(&self, row: usize) -> f64 {
        self.at(row, self.cols)
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.first_artificial
    }

    fn objective_value(&self) -> f64 {
        -self.costs[self.cols]
    }

    /// Loads raw costs and prices out the current basis.
    fn load_costs(&mut self, raw: Vec<f64>) {
        let stride = self.stride();
        self.costs = raw;
        for i in 0..self.rows {
            let cb = self.costs[self.basis[i]];
            if cb != 0.0 {
                let row = &self.data[i * stride..(i + 1) * stride];
                for (c, &a) in self.costs.iter_mut().zip(row) {
                    *c -= cb * a;
                }
            }
        }
    }

    fn set_phase_one_costs(&mut self) {
        let mut raw = vec![0.0; self.stride()];
        raw[self.first_artificial..self.cols].iter_mut().for_each(|c| *c = 1.0);
        self.load_costs(raw);
    }

    fn set_phase_two_costs(&mut self, lp: &StandardFormLp) {
        let mut raw = vec![0.0; self.stride()];
        raw[..self.num_structural].copy_from_slice(&lp.objective);
        self.load_costs(raw);
    }

    fn pivot(&mut self, pivot_row: usize, pivot_col: usize) {
        let stride = self.stride();
        let p = self.at(pivot_row, pivot_col);
        let start = pivot_row * stride;
        for v in &mut self.data[start..start + stride] {
            *v /= p;
        }
        self.data[start + pivot_col] = 1.0;
        let pivot_values: Vec<f64> = self.data[start..start + stride].to_vec();
        for i in 0..self.rows {
            if i == pivot_row {
                continue;
            }
            let factor = self.data[i * stride + pivot_col];
            if factor != 0.0 {
                let row = &mut self.data[i * stride..(i + 1) * stride];
                for (v, &pv) in row.iter_mut().zip(&pivot_values) {
                    *v -= factor * pv;
                }
                row[pivot_col] = 0.0;
            }
        }
        let factor = self.costs[pivot_col];
        if factor != 0.0 {
            for (c, &pv) in self.costs.iter_mut().zip(&pivot_values) {
                *c -= factor * pv;
            }
            self.costs[pivot_col] = 0.0;
        }
        self.basis[pivot_row] = pivot_col;
    }

    /// Minimum-ratio row for `col`, ties broken by the smallest basic index.
    /// `Err(true)` when the column has no positive entry at all, `Err(false)` when
    /// its positive entries are all too small to pivot on.
    fn ratio_test(&self, col: usize, options: &SolverOptions) -> Result<usize, bool> {
        let mut best: Option<(usize, f64)> = None;
        let mut any_positive = false;
        for i in 0..self.rows {
            let a = self.at(i, col);
            if a > 0.0 {
                any_positive = true;
            }
            if a <= options.pivot_tol {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            best = match best {
                None => Some((i, ratio)),
                Some((r, b)) => {
                    if ratio < b || (ratio == b && self.basis[i] < self.basis[r]) {
                        Some((i, ratio))
                    } else {
                        Some((r, b))
                    }
                }
            };
        }
        match best {
            Some((row, _)) => Ok(row),
            None => Err(!any_positive),
        }
    }

    fn run(&mut self, options: &SolverOptions, iterations: &mut usize, allow_artificial: bool) -> Outcome {
        loop {
            if *iterations >= options.max_iterations {
                return Outcome::Stalled;
            }
            let mut improving = false;
            let mut pivoted = false;
            for col in 0..self.cols {
                if !allow_artificial && self.is_artificial(col) {
                    continue;
                }
                if self.costs[col] >= -options.optimality_tol {
                    continue;
                }
                improving = true;
                match self.ratio_test(col, options) {
                    Ok(row) => {
                        self.pivot(row, col);
                        *iterations += 1;
                        pivoted = true;
                        break;
                    }
                    Err(true) => return Outcome::Unbounded,
                    Err(false) => continue,
                }
            }
            if !improving {
                return Outcome::Optimal;
            }
            if !pivoted {
                return Outcome::Stalled;
            }
        }
    }

    /// Pivots basic artificials (at zero level) out of the basis; rows where that is
    /// impossible are linearly dependent and get cleared.
    fn drive_out_artificials(&mut self, options: &SolverOptions, iterations: &mut usize) {
        for i in 0..self.rows {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let entering = (0..self.first_artificial).find(|&j| self.at(i, j).abs() > options.pivot_tol);
            match entering {
                Some(j) => {
                    self.pivot(i, j);
                    *iterations += 1;
                }
                None => {
                    // redundant row: keep the artificial basic at zero but make the
                    // row inert so it can never be chosen again
                    let stride = self.stride();
                    let b = self.basis[i];
                    for v in &mut self.data[i * stride..(i + 1) * stride] {
                        *v = 0.0;
                    }
                    self.data[i * stride + b] = 1.0;
                }
            }
        }
    }

    fn structural_values(&self, lp: &StandardFormLp) -> Vec<f64> {
        let mut shifted = vec![0.0; self.num_structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.num_structural {
                shifted[b] = self.rhs(i);
            }
        }
        shifted.iter().zip(&lp.lower).map(|(s, lo)| s + lo).collect()
    }
}
