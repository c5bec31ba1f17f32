//! Time structure of a planning study: modelled years, milestones and their weights.
//!
//! Years are integer offsets `0..=end` from the first modelled year. Each milestone
//! represents a block of consecutive years starting at itself and running up to the
//! year before the next milestone (the last milestone runs through `end`).

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finance::Lifetime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HorizonError {
    #[error("at least one milestone year is required")]
    NoMilestones,
    #[error("the first milestone must be year 0, got {0}")]
    FirstMilestoneNotZero(u32),
    #[error("milestones must be strictly increasing ({previous} followed by {next})")]
    Unsorted { previous: u32, next: u32 },
    #[error("milestone {year} is beyond the last modelled year {end}")]
    OutOfRange { year: u32, end: u32 },
    #[error("expected {expected} milestone weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weight of milestone {milestone} must be positive")]
    ZeroWeight { milestone: u32 },
    #[error("milestone weights sum to {got} but the horizon has {expected} years")]
    WeightSum { expected: u64, got: u64 },
    #[error("year {0} is not a milestone")]
    NotAMilestone(u32),
}

fn validate_milestones(milestones: &[u32], end: u32) -> Result<(), HorizonError> {
    let first = *milestones.first().ok_or(HorizonError::NoMilestones)?;
    if first != 0 {
        return Err(HorizonError::FirstMilestoneNotZero(first));
    }
    for pair in milestones.windows(2) {
        if pair[1] <= pair[0] {
            return Err(HorizonError::Unsorted {
                previous: pair[0],
                next: pair[1],
            });
        }
    }
    let last = *milestones.last().expect("non-empty");
    if last > end {
        return Err(HorizonError::OutOfRange { year: last, end });
    }
    Ok(())
}

/// Forward-gap weights: each milestone counts itself and every year up to the next
/// milestone; the last one counts itself through `horizon_end`.
pub fn derive_milestone_weights(milestones: &[u32], horizon_end: u32) -> Result<Vec<u32>, HorizonError> {
    validate_milestones(milestones, horizon_end)?;
    let mut weights: Vec<u32> = milestones.windows(2).map(|w| w[1] - w[0]).collect();
    weights.push(horizon_end - milestones[milestones.len() - 1] + 1);
    Ok(weights)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    end: u32,
    milestones: Vec<u32>,
    weights: Vec<u32>,
}

impl Horizon {
    /// Every year in `0..=end` is a milestone with weight one.
    pub fn yearly(end: u32) -> Self {
        Horizon {
            end,
            milestones: (0..=end).collect(),
            weights: vec![1; end as usize + 1],
        }
    }

    /// Sparse milestones with derived weights.
    pub fn new(milestones: Vec<u32>, end: u32) -> Result<Self, HorizonError> {
        let weights = derive_milestone_weights(&milestones, end)?;
        Ok(Horizon {
            end,
            milestones,
            weights,
        })
    }

    /// Sparse milestones with user-supplied weights. The weights must be positive
    /// and account for every modelled year exactly once in total.
    pub fn with_weights(milestones: Vec<u32>, end: u32, weights: Vec<u32>) -> Result<Self, HorizonError> {
        validate_milestones(&milestones, end)?;
        if weights.len() != milestones.len() {
            return Err(HorizonError::WeightCount {
                expected: milestones.len(),
                got: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|&w| w == 0) {
            return Err(HorizonError::ZeroWeight {
                milestone: milestones[i],
            });
        }
        let total: u64 = weights.iter().map(|&w| w as u64).sum();
        let expected = end as u64 + 1;
        if total != expected {
            return Err(HorizonError::WeightSum { expected, got: total });
        }
        Ok(Horizon {
            end,
            milestones,
            weights,
        })
    }

    /// Last modelled year (inclusive).
    pub fn end(&self) -> u32 {
        self.end
    }

    pub fn num_years(&self) -> u32 {
        self.end + 1
    }

    pub fn years(&self) -> RangeInclusive<u32> {
        0..=self.end
    }

    pub fn milestones(&self) -> &[u32] {
        &self.milestones
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn is_yearly(&self) -> bool {
        self.milestones.len() == self.end as usize + 1
    }

    pub fn milestone_index(&self, year: u32) -> Option<usize> {
        self.milestones.binary_search(&year).ok()
    }

    pub fn is_milestone(&self, year: u32) -> bool {
        self.milestone_index(year).is_some()
    }

    pub fn weight(&self, milestone: u32) -> Option<u32> {
        self.milestone_index(milestone).map(|i| self.weights[i])
    }

    /// Years represented by the milestone at `index`.
    pub fn block(&self, index: usize) -> RangeInclusive<u32> {
        let start = self.milestones[index];
        let stop = match self.milestones.get(index + 1) {
            Some(next) => next - 1,
            None => self.end,
        };
        start..=stop
    }

    /// Index of the milestone whose block contains `year`.
    pub fn representing_milestone(&self, year: u32) -> Option<usize> {
        if year > self.end {
            return None;
        }
        match self.milestones.binary_search(&year) {
            Ok(i) => Some(i),
            Err(i) => Some(i - 1),
        }
    }
}

/// The years an investment provides capacity, and the milestones inside them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LifetimeWindow {
    invest_year: u32,
    lifetime: Lifetime,
    horizon_end: u32,
    active_milestones: Vec<u32>,
}

impl LifetimeWindow {
    pub fn invest_year(&self) -> u32 {
        self.invest_year
    }

    pub fn lifetime(&self) -> Lifetime {
        self.lifetime
    }

    /// Full `[y, y + LT - 1]` span, not clipped to the horizon.
    pub fn active_years(&self) -> RangeInclusive<u32> {
        self.invest_year..=self.end_of_life()
    }

    /// Last year of operation, possibly beyond the horizon.
    pub fn end_of_life(&self) -> u32 {
        self.invest_year.saturating_add(self.lifetime.last_period())
    }

    /// Active years clipped to the modelled horizon.
    pub fn modelled_years(&self) -> RangeInclusive<u32> {
        self.invest_year..=self.end_of_life().min(self.horizon_end)
    }

    pub fn active_milestones(&self) -> &[u32] {
        &self.active_milestones
    }

    pub fn contains(&self, year: u32) -> bool {
        self.active_years().contains(&year)
    }
}

/// Lifetime window of an investment made at milestone `invest_year`.
pub fn capacity_window(invest_year: u32, lifetime: Lifetime, horizon: &Horizon) -> Result<LifetimeWindow, HorizonError> {
    let start = horizon
        .milestone_index(invest_year)
        .ok_or(HorizonError::NotAMilestone(invest_year))?;
    let last = invest_year.saturating_add(lifetime.last_period()).min(horizon.end);
    let active_milestones = horizon.milestones[start..]
        .iter()
        .copied()
        .take_while(|&m| m <= last)
        .collect();
    Ok(LifetimeWindow {
        invest_year,
        lifetime,
        horizon_end: horizon.end,
        active_milestones,
    })
}

/// Years a milestone-weighted objective charges for capacity that has already retired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LifetimeGap {
    pub invest_year: u32,
    pub end_of_life: u32,
    pub overcounted_years: u32,
    /// Inclusive `(first, last)` year range charged after retirement.
    pub affected: Option<(u32, u32)>,
}

impl LifetimeGap {
    pub fn is_gap(&self) -> bool {
        self.overcounted_years > 0
    }
}

/// Compares the years represented by the active milestones' blocks with the years
/// the asset actually operates inside the horizon.
pub fn detect_lifetime_gap(invest_year: u32, lifetime: Lifetime, horizon: &Horizon) -> Result<LifetimeGap, HorizonError> {
    let window = capacity_window(invest_year, lifetime, horizon)?;
    let last_active = *window
        .active_milestones
        .last()
        .expect("the investment milestone is always active");
    let represented_until = *horizon
        .block(horizon.milestone_index(last_active).expect("active milestone"))
        .end();
    let alive_until = *window.modelled_years().end();
    let overcounted_years = represented_until - alive_until;
    Ok(LifetimeGap {
        invest_year,
        end_of_life: window.end_of_life(),
        overcounted_years,
        affected: (overcounted_years > 0).then_some((alive_until + 1, represented_until)),
    })
}
