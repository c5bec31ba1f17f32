//! Run reports and their three renderings.
//!
//! JSON carries the full structure. CSV flattens it into one value per row,
//! keyed by section, variant, technology and grid position. Both write floats in
//! shortest round-trip form, so parsing them back yields the same bits. The text
//! form is for people and rounds to two decimals.

use std::fmt::Write as _;
use std::io;

use capplan_core::{
    BiasReport, CostBreakdown, EquivalenceReport, ObjectiveVariant, Plan, Scenario, SolveStatus, VarKey, Verdict,
};
use serde::{Deserialize, Serialize};

use crate::scenario_file::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilestoneWeight {
    pub milestone: u32,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductionLevel {
    pub technology: String,
    pub year: u32,
    pub period: u32,
    pub timestep: u32,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSection {
    pub variant: ObjectiveVariant,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub iterations: usize,
    /// Investment table plus per-year operational costs; absent unless optimal.
    pub breakdown: Option<CostBreakdown>,
    pub production: Vec<ProductionLevel>,
}

impl SolveSection {
    pub fn from_plan(scenario: &Scenario, plan: &Plan) -> Self {
        let production = plan
            .levels()
            .filter_map(|(key, output)| match key {
                VarKey::Production {
                    technology,
                    year,
                    period,
                    timestep,
                } => Some(ProductionLevel {
                    technology: scenario.technologies()[technology].name().to_string(),
                    year,
                    period,
                    timestep,
                    output,
                }),
                VarKey::Invest { .. } => None,
            })
            .collect();
        SolveSection {
            variant: plan.variant(),
            status: plan.result.status,
            objective: plan.result.objective,
            iterations: plan.result.iterations,
            breakdown: plan.breakdown.clone(),
            production,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quantities: Vec<Quantity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<MilestoneWeight>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solves: Vec<SolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<EquivalenceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<BiasReport>,
}

/// One cell of the flat table. Absent keys are written as empty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatRow {
    pub section: String,
    pub variant: Option<String>,
    pub technology: Option<String>,
    pub year: Option<u32>,
    pub period: Option<u32>,
    pub timestep: Option<u32>,
    pub field: String,
    pub value: String,
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::SolverFailure => "solver_failure",
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    }
}

struct RowSink {
    rows: Vec<FlatRow>,
    section: &'static str,
    variant: Option<String>,
    technology: Option<String>,
    year: Option<u32>,
    period: Option<u32>,
    timestep: Option<u32>,
}

impl RowSink {
    fn at(&mut self, section: &'static str) -> &mut Self {
        self.section = section;
        self.technology = None;
        self.year = None;
        self.period = None;
        self.timestep = None;
        self
    }

    fn push(&mut self, field: &str, value: String) {
        self.rows.push(FlatRow {
            section: self.section.to_string(),
            variant: self.variant.clone(),
            technology: self.technology.clone(),
            year: self.year,
            period: self.period,
            timestep: self.timestep,
            field: field.to_string(),
            value,
        });
    }

    fn opt(&mut self, field: &str, value: Option<f64>) {
        if let Some(v) = value {
            self.push(field, num(v));
        }
    }
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            quantities: Vec::new(),
            weights: Vec::new(),
            solves: Vec::new(),
            equivalence: None,
            bias: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn flat_rows(&self) -> Vec<FlatRow> {
        let mut out = RowSink {
            rows: Vec::new(),
            section: "",
            variant: None,
            technology: None,
            year: None,
            period: None,
            timestep: None,
        };
        for q in &self.quantities {
            out.at("quantity").push(&q.name, num(q.value));
        }
        for w in &self.weights {
            out.at("weight").year = Some(w.milestone);
            out.push("weight", w.weight.to_string());
        }
        for s in &self.solves {
            out.variant = Some(s.variant.name().to_string());
            out.at("solve").push("status", status_name(s.status).to_string());
            out.opt("objective", s.objective);
            out.push("iterations", s.iterations.to_string());
            if let Some(b) = &s.breakdown {
                out.push("total_investment", num(b.total_investment));
                out.push("total_operational", num(b.total_operational));
                out.push("total", num(b.total));
                for inv in &b.investment {
                    out.at("investment").technology = Some(inv.technology.clone());
                    out.year = Some(inv.year);
                    out.push("capacity", num(inv.capacity));
                    out.push("cost", num(inv.cost));
                }
                for op in &b.operational {
                    out.at("operational").year = Some(op.year);
                    out.push("cost", num(op.cost));
                }
            }
            for p in &s.production {
                out.at("production").technology = Some(p.technology.clone());
                out.year = Some(p.year);
                out.period = Some(p.period);
                out.timestep = Some(p.timestep);
                out.push("output", num(p.output));
            }
        }
        out.variant = None;
        if let Some(e) = &self.equivalence {
            out.variant = Some(format!("{}|{}", e.variant_a.name(), e.variant_b.name()));
            out.at("equivalence").push("threshold", num(e.threshold));
            out.push("compared_columns", e.compared_columns.to_string());
            out.push("max_coefficient_deviation", num(e.max_coefficient_deviation));
            out.push("status_a", status_name(e.status_a).to_string());
            out.push("status_b", status_name(e.status_b).to_string());
            out.opt("objective_a", e.objective_a);
            out.opt("objective_b", e.objective_b);
            out.opt("max_objective_deviation", e.max_objective_deviation);
            out.push("verdict", verdict_name(e.verdict).to_string());
            out.variant = None;
        }
        if let Some(b) = &self.bias {
            for ib in &b.investment {
                out.at("investment_bias").technology = Some(ib.technology.clone());
                out.year = Some(ib.year);
                out.push("exact", num(ib.exact));
                out.push("annualised_milestone", num(ib.annualised_milestone));
                out.push("total_salvage_milestone", num(ib.total_salvage_milestone));
                out.push("annualised_gap", num(ib.annualised_gap));
                out.push("total_salvage_gap", num(ib.total_salvage_gap));
                out.push("overcounted_years", ib.lifetime_gap.overcounted_years.to_string());
            }
            for ob in &b.operational {
                out.at("operational_bias").year = Some(ob.year);
                out.push("weighted", num(ob.weighted));
                out.push("exact", num(ob.exact));
                out.push("gap", num(ob.gap));
            }
            for pb in &b.plans {
                out.variant = Some(pb.variant.name().to_string());
                out.at("plan_bias").push("status", status_name(pb.status).to_string());
                out.opt("milestone_objective", pb.milestone_objective);
                out.opt("exact_objective", pb.exact_objective);
                out.opt("gap", pb.gap);
            }
        }
        out.rows
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in self.flat_rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Human summary with two-decimal rounding.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for q in &self.quantities {
            let _ = writeln!(s, "{:.2}", q.value);
        }
        if !self.weights.is_empty() {
            let w: Vec<String> = self.weights.iter().map(|w| w.weight.to_string()).collect();
            let _ = writeln!(s, "{}", w.join(" "));
        }
        for sol in &self.solves {
            let _ = write!(s, "{}: {}", sol.variant, status_name(sol.status));
            match sol.objective {
                Some(obj) => {
                    let _ = writeln!(s, ", objective {obj:.2}");
                }
                None => s.push('\n'),
            }
            if let Some(b) = &sol.breakdown {
                let _ = writeln!(
                    s,
                    "  investment {:.2}, operational {:.2}",
                    b.total_investment, b.total_operational
                );
                for inv in b.investment.iter().filter(|i| i.capacity != 0.0) {
                    let _ = writeln!(
                        s,
                        "  build {:.2} of {} in year {} (cost {:.2})",
                        inv.capacity, inv.technology, inv.year, inv.cost
                    );
                }
            }
        }
        if let Some(e) = &self.equivalence {
            let _ = writeln!(
                s,
                "{} vs {}: {} (max coefficient deviation {:.2e} over {} columns, threshold {:.0e})",
                e.variant_a,
                e.variant_b,
                verdict_name(e.verdict),
                e.max_coefficient_deviation,
                e.compared_columns,
                e.threshold
            );
            let fmt = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.2}"));
            let _ = writeln!(
                s,
                "  {}: {} {}; {}: {} {}",
                e.variant_a,
                status_name(e.status_a),
                fmt(e.objective_a),
                e.variant_b,
                status_name(e.status_b),
                fmt(e.objective_b)
            );
        }
        if let Some(b) = &self.bias {
            let _ = writeln!(s, "investment bias (milestone minus exact yearly):");
            for ib in &b.investment {
                let _ = write!(
                    s,
                    "  {} year {}: exact {:.2}, annualised {:+.2}, total-salvage {:+.2}",
                    ib.technology, ib.year, ib.exact, ib.annualised_gap, ib.total_salvage_gap
                );
                if ib.lifetime_gap.is_gap() {
                    let _ = write!(s, ", lifetime overcounted by {} year(s)", ib.lifetime_gap.overcounted_years);
                }
                s.push('\n');
            }
            let _ = writeln!(s, "operational bias per unit of variable cost:");
            for ob in &b.operational {
                let _ = writeln!(s, "  year {}: weighted {:.2}, exact {:.2}, gap {:+.2}", ob.year, ob.weighted, ob.exact, ob.gap);
            }
            for pb in &b.plans {
                let fmt = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.2}"));
                let _ = writeln!(
                    s,
                    "{} plan: {}, milestone objective {}, exact {}, gap {}",
                    pb.variant,
                    status_name(pb.status),
                    fmt(pb.milestone_objective),
                    fmt(pb.exact_objective),
                    fmt(pb.gap)
                );
            }
        }
        s
    }
}

pub fn read_csv<R: io::Read>(reader: R) -> csv::Result<Vec<FlatRow>> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        let mut r = RunReport::new("annuity");
        r.quantities.push(Quantity {
            name: "annualised_cost".into(),
            value: 0.1 + 0.2,
        });
        r.quantities.push(Quantity {
            name: "tiny".into(),
            value: 1e-300,
        });
        r.weights.push(MilestoneWeight { milestone: 0, weight: 2 });
        r
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let r = sample();
        let back = RunReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.quantities[0].value.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let r = sample();
        let rows = read_csv(r.to_csv().as_bytes()).unwrap();
        assert_eq!(rows, r.flat_rows());
        let v: f64 = rows[0].value.parse().unwrap();
        assert_eq!(v.to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(rows[2].year, Some(0));
        assert_eq!(rows[2].technology, None);
    }

    #[test]
    fn text_rounds_to_two_decimals() {
        assert!(sample().to_text().starts_with("0.30\n0.00\n2\n"));
    }
}
