use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
}

/// One asserted property with its measured margin (positive when it holds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub margin: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        let margin = match relation {
            Relation::AtMost | Relation::Below => threshold - measured,
            Relation::AtLeast | Relation::Above => measured - threshold,
        };
        let passed = match relation {
            Relation::AtMost => measured <= threshold,
            Relation::AtLeast => measured >= threshold,
            Relation::Below => measured < threshold,
            Relation::Above => measured > threshold,
        };
        Self { name: name.into(), passed, measured, relation, threshold, margin }
    }

    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::AtMost, threshold)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::AtLeast, threshold)
    }

    pub fn below(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::Below, threshold)
    }

    pub fn above(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::Above, threshold)
    }

    /// A yes/no property, recorded as `measured = 1` when it holds.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub results: Value,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            checks: Vec::new(),
            warnings: Vec::new(),
            error: None,
            results: Value::Null,
            passed: false,
        }
    }

    pub fn finish(&mut self, strict: bool) {
        self.passed = self.error.is_none() && self.checks.iter().all(|c| c.passed) && !(strict && !self.warnings.is_empty());
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Wall-clock sections, kept out of the report so reports stay reproducible.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub sections: Vec<Section>,
    pub total_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub budget_seconds: Option<f64>,
}

impl Timings {
    pub fn time<T>(&mut self, name: &str, budget: Option<f64>, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.sections.push(Section { name: name.into(), seconds: start.elapsed().as_secs_f64(), budget_seconds: budget });
        out
    }
}

/// A CSV side file: header plus numeric rows.
pub struct Series {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

pub fn write_outputs(out: &Path, report: &Report, series: &[Series], timings: &Timings) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    std::fs::write(out.join("report.json"), json + "\n")?;
    for s in series {
        let mut w = csv::Writer::from_path(out.join(format!("{}.csv", s.name))).map_err(std::io::Error::other)?;
        w.write_record(&s.header).map_err(std::io::Error::other)?;
        for row in &s.rows {
            w.write_record(row.iter().map(|x| format!("{x:e}"))).map_err(std::io::Error::other)?;
        }
        w.flush()?;
    }
    let t = serde_json::to_string_pretty(timings).map_err(std::io::Error::other)?;
    std::fs::write(out.join("timings.json"), t + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_are_positive_when_passing() {
        let c = Check::at_most("r", 1e-8, 1e-6);
        assert!(c.passed && c.margin > 0.0);
        let c = Check::at_least("s", 2.5, 4.0);
        assert!(!c.passed && c.margin < 0.0);
        assert!(!Check::below("x", 1.0, 1.0).passed);
        assert!(Check::holds("y", true).passed);
    }
}
