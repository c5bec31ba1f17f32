//! TOML scenario documents.
//!
//! ```toml
//! schema_version = 1
//!
//! [horizon]
//! end = 5
//! milestones = [0, 2, 5]
//!
//! [discounting]
//! social_rate = "2%"
//!
//! [[technologies]]
//! name = "wind"
//! overnight_cost = 100.0
//! wacc = 0.05
//! lifetime = 6
//!
//! [[demand]]
//! year = 0
//! value = 10.0
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use capplan_core::{
    CostOverride, DiscountRate, FinanceError, Horizon, HorizonError, Lifetime, ModelError, Scenario, TechnologyParams,
    TechnologySpec,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unsupported schema_version {found}, expected {SCHEMA_VERSION}")]
    SchemaVersion { found: u32 },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
    #[error("technology `{name}`: {source}")]
    Technology {
        name: String,
        #[source]
        source: FinanceError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub horizon: HorizonSection,
    pub discounting: DiscountingSection,
    pub technologies: Vec<TechnologyEntry>,
    #[serde(default)]
    pub demand: Vec<DemandEntry>,
    #[serde(default)]
    pub operational_weights: Vec<WeightEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSection {
    /// Last modelled year, counted from 0.
    pub end: u32,
    /// Every year when omitted.
    #[serde(default)]
    pub milestones: Option<Vec<u32>>,
    /// Overrides the derived block lengths.
    #[serde(default)]
    pub weights: Option<Vec<u32>>,
    #[serde(default = "one")]
    pub representative_periods: u32,
    #[serde(default = "one")]
    pub timesteps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscountingSection {
    pub social_rate: DiscountRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologyEntry {
    pub name: String,
    #[serde(default)]
    pub overnight_cost: Option<f64>,
    #[serde(default)]
    pub annualised_cost: Option<f64>,
    pub wacc: DiscountRate,
    pub lifetime: Lifetime,
    #[serde(default)]
    pub max_invest: Option<f64>,
    #[serde(default)]
    pub variable_cost: f64,
    #[serde(default)]
    pub overrides: Vec<OverrideEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideEntry {
    pub year: u32,
    #[serde(default)]
    pub overnight_cost: Option<f64>,
    #[serde(default)]
    pub annualised_cost: Option<f64>,
    #[serde(default)]
    pub wacc: Option<DiscountRate>,
    #[serde(default)]
    pub variable_cost: Option<f64>,
    #[serde(default)]
    pub max_invest: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandEntry {
    pub year: u32,
    #[serde(default)]
    pub period: u32,
    #[serde(default)]
    pub timestep: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightEntry {
    pub year: u32,
    #[serde(default)]
    pub period: u32,
    pub weight: f64,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::SchemaVersion {
                found: file.schema_version,
            });
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn horizon(&self) -> Result<Horizon, ScenarioError> {
        let h = &self.horizon;
        let milestones = h.milestones.clone().unwrap_or_else(|| (0..=h.end).collect());
        Ok(match &h.weights {
            Some(w) => Horizon::with_weights(milestones, h.end, w.clone())?,
            None => Horizon::new(milestones, h.end)?,
        })
    }

    pub fn to_scenario(&self) -> Result<Scenario, ScenarioError> {
        let mut builder = Scenario::builder(self.horizon()?, self.discounting.social_rate)
            .grid(self.horizon.representative_periods, self.horizon.timesteps);
        for t in &self.technologies {
            let mut overrides = BTreeMap::new();
            for o in &t.overrides {
                let entry = CostOverride {
                    overnight_cost: o.overnight_cost,
                    annualised_cost: o.annualised_cost,
                    wacc: o.wacc,
                    variable_cost: o.variable_cost,
                    max_invest: o.max_invest,
                };
                if overrides.insert(o.year, entry).is_some() {
                    return Err(ScenarioError::Invalid(format!(
                        "technology `{}` overrides year {} twice",
                        t.name, o.year
                    )));
                }
            }
            let spec = TechnologySpec {
                name: t.name.clone(),
                overnight_cost: t.overnight_cost,
                annualised_cost: t.annualised_cost,
                wacc: t.wacc,
                lifetime: t.lifetime,
                max_invest: t.max_invest,
                variable_cost: t.variable_cost,
                overrides,
            };
            let params = TechnologyParams::new(spec).map_err(|source| ScenarioError::Technology {
                name: t.name.clone(),
                source,
            })?;
            builder = builder.technology(params);
        }
        let mut seen = BTreeSet::new();
        for d in &self.demand {
            if !seen.insert((d.year, d.period, d.timestep)) {
                return Err(ScenarioError::Invalid(format!(
                    "demand for (year {}, period {}, timestep {}) given twice",
                    d.year, d.period, d.timestep
                )));
            }
            builder = builder.demand(d.year, d.period, d.timestep, d.value);
        }
        let mut seen = BTreeSet::new();
        for w in &self.operational_weights {
            if !seen.insert((w.year, w.period)) {
                return Err(ScenarioError::Invalid(format!(
                    "operational weight for (year {}, period {}) given twice",
                    w.year, w.period
                )));
            }
            builder = builder.operational_weight(w.year, w.period, w.weight);
        }
        Ok(builder.build()?)
    }
}
