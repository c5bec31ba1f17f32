//! Deterministic scenario fixtures for the benchmarks.

use capplan_core::{DiscountRate, Horizon, Lifetime, Scenario, TechnologyParams, TechnologySpec};

/// `techs` technologies over `years` yearly steps, or over every `stride`-th year
/// when `stride > 1`, with `periods` x `timesteps` operational slices.
pub fn scenario(techs: usize, years: u32, stride: u32, periods: u32, timesteps: u32) -> Scenario {
    let end = years - 1;
    let horizon = if stride <= 1 {
        Horizon::yearly(end)
    } else {
        Horizon::new((0..=end).step_by(stride as usize).collect(), end).expect("valid milestones")
    };
    let milestones = horizon.milestones().to_vec();
    let mut b = Scenario::builder(horizon, DiscountRate::new(0.03).unwrap()).grid(periods, timesteps);
    for a in 0..techs {
        let mut spec = TechnologySpec::overnight(
            format!("tech{a}"),
            800.0 + 150.0 * a as f64,
            DiscountRate::new(0.04 + 0.01 * (a % 4) as f64).unwrap(),
            Lifetime::new(10 + 5 * (a as u32 % 4)).unwrap(),
        );
        spec.variable_cost = 5.0 + 7.0 * ((techs - a) as f64);
        spec.max_invest = Some(40.0);
        b = b.technology(TechnologyParams::new(spec).expect("valid technology"));
    }
    for &y in &milestones {
        for k in 0..periods {
            for t in 0..timesteps {
                let shape = 1.0 + 0.3 * ((k * timesteps + t) as f64).sin();
                b = b.demand(y, k, t, (20.0 + 0.5 * y as f64) * shape);
            }
        }
    }
    b.build().expect("valid scenario")
}
