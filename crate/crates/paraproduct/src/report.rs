//! Verification reports and their JSON/CSV renderings.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Summary of the trials run at one space size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    /// Number of points, or the largest drawn size when sizes are random.
    pub n: usize,
    pub trials: u64,
    pub skipped: u64,
    pub sup_ratio: f64,
    pub min_ratio: f64,
    pub witness_trial: u64,
    pub min_witness_trial: u64,
    /// `[level, value]` pairs.
    pub quantiles: Vec<[f64; 2]>,
}

/// The trial attaining the sup, with its serialized inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub n: usize,
    pub trial: u64,
    pub ratio: f64,
    /// Ratio recomputed from `inputs` after a JSON round trip.
    pub replayed: f64,
    pub inputs: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtMost, bound, pass: value <= bound }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtLeast, bound, pass: value >= bound }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub summary: String,
    pub seed: u64,
    pub trials: u64,
    pub skipped: u64,
    pub sup_ratio: f64,
    pub min_ratio: f64,
    pub quantiles: Vec<[f64; 2]>,
    pub witness: Witness,
    pub sizes: Vec<SizeSummary>,
    /// Largest `sup(n_j) / sup(n_i)` over ladder sizes `n_i < n_j`.
    pub ladder_growth: Option<f64>,
    /// Same for `1 / min_ratio`, on two-sided suites.
    pub inverse_ladder_growth: Option<f64>,
    pub violations: u64,
    /// Largest value per named side quantity.
    pub extras: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub runtime_seconds: f64,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with the runtime zeroed, for comparing reruns.
    pub fn to_json_without_runtime(&self) -> String {
        Self { runtime_seconds: 0.0, ..self.clone() }.to_json()
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    suite: &'a str,
    record: &'a str,
    name: &'a str,
    n: Option<usize>,
    trials: Option<u64>,
    value: f64,
    bound: Option<f64>,
    pass: Option<bool>,
}

/// One row per size summary, extra and check.
pub fn write_csv<W: Write>(reports: &[VerificationReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        for s in &r.sizes {
            w.serialize(CsvRow {
                suite: &r.suite,
                record: "size",
                name: "sup_ratio",
                n: Some(s.n),
                trials: Some(s.trials),
                value: s.sup_ratio,
                bound: None,
                pass: None,
            })?;
            w.serialize(CsvRow {
                suite: &r.suite,
                record: "size",
                name: "min_ratio",
                n: Some(s.n),
                trials: Some(s.trials),
                value: s.min_ratio,
                bound: None,
                pass: None,
            })?;
        }
        for (name, &value) in &r.extras {
            w.serialize(CsvRow {
                suite: &r.suite,
                record: "extra",
                name,
                n: None,
                trials: None,
                value,
                bound: None,
                pass: None,
            })?;
        }
        for c in &r.checks {
            w.serialize(CsvRow {
                suite: &r.suite,
                record: "check",
                name: &c.name,
                n: None,
                trials: None,
                value: c.value,
                bound: Some(c.bound),
                pass: Some(c.pass),
            })?;
        }
        w.serialize(CsvRow {
            suite: &r.suite,
            record: "result",
            name: "pass",
            n: None,
            trials: Some(r.trials),
            value: r.sup_ratio,
            bound: None,
            pass: Some(r.pass),
        })?;
    }
    w.flush()?;
    Ok(())
}
