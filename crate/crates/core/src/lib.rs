//! Multi-year capacity expansion planning with overnight and annualised
//! investment costs, salvage correction and milestone-year weighting.
//!
//! The crate is organised bottom-up: [`finance`] holds the discounting
//! arithmetic, [`horizon`] the time structure, [`model`] assembles planning
//! LPs that [`simplex`] solves, and [`analysis`] cross-checks the objective
//! variants against each other.

pub mod analysis;
pub mod finance;
pub mod horizon;
pub mod model;
pub mod simplex;

pub use analysis::{
    certify_equivalence, quantify_milestone_bias, AnalysisError, BiasReport, EquivalenceReport, Verdict,
};
pub use finance::{
    annualise, annuity_factor, discount_factor, salvage_value, totalise, CostOverride, DiscountRate,
    FinanceError, Lifetime, TechnologyParams, TechnologySpec,
};
pub use horizon::{capacity_window, derive_milestone_weights, detect_lifetime_gap, Horizon, HorizonError};
pub use model::{
    build_lp, cost_breakdown, objective_value, plan, CostBreakdown, LinearProgram, ModelError, ObjectiveVariant,
    Plan, Scenario, VarKey,
};
pub use simplex::{solve, solve_with, Sense, SolveResult, SolveStatus, SolverOptions, StandardFormLp};
