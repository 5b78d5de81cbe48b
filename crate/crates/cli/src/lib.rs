//! Configuration, reporting and subcommands behind the `nehari` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod report;

use std::path::Path;

use serde_json::json;

use config::{CheckConfig, ConfigError, Source};
use report::{Check, Report, Series, Timings};

/// Everything a subcommand produces; written to disk only on success.
pub struct Outcome {
    pub report: Report,
    pub series: Vec<Series>,
    pub timings: Timings,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Fibering,
    Solve,
    Prescribed,
    Affine,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Fibering => "fibering",
            Command::Solve => "solve",
            Command::Prescribed => "prescribed",
            Command::Affine => "affine",
            Command::Check => "check",
        }
    }
}

pub fn execute(cmd: Command, config: Option<&Path>, seed: Option<u64>, strict: bool) -> Result<Outcome, ConfigError> {
    let src = match config {
        Some(path) => Some(Source::read(path)?),
        None => None,
    };
    let need = |s: Option<Source>| {
        s.ok_or_else(|| ConfigError::Invalid {
            path: "<none>".into(),
            line: 0,
            message: format!("{} needs --config", cmd.name()),
        })
    };
    let mut out = match cmd {
        Command::Fibering => commands::fibering(&need(src)?, strict)?,
        Command::Solve => commands::solve(&need(src)?, seed, strict)?,
        Command::Prescribed => commands::prescribed(&need(src)?, seed, strict)?,
        Command::Affine => commands::affine(&need(src)?, seed, strict)?,
        Command::Check => {
            let mut cfg: CheckConfig = match &src {
                Some(s) => s.parse()?,
                None => CheckConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(bad) = cfg.criteria.iter().find(|&&id| !checks::CRITERIA.iter().any(|c| c.0 == id)) {
                let message = format!("unknown criterion {bad}");
                return Err(match &src {
                    Some(s) => s.error_at("criteria", message),
                    None => ConfigError::Invalid { path: "<none>".into(), line: 0, message },
                });
            }
            check(&cfg, strict)
        }
    };
    out.timings.threads = threads();
    out.timings.total_seconds = out.timings.sections.iter().map(|s| s.seconds).sum();
    Ok(out)
}

fn check(cfg: &CheckConfig, strict: bool) -> Outcome {
    let ids: Vec<u32> =
        if cfg.criteria.is_empty() { checks::CRITERIA.iter().map(|c| c.0).collect() } else { cfg.criteria.clone() };
    let mut report = Report::new("check", cfg.seed, serde_json::to_value(cfg).unwrap_or_default());
    let mut timings = Timings::default();
    let mut results = Vec::new();
    for id in ids {
        let c = timings.time(&format!("c{id}"), checks::budget(id), || checks::run_criterion(id, cfg.seed));
        for ch in &c.checks {
            report.checks.push(Check { name: format!("c{id}.{}", ch.name), ..ch.clone() });
        }
        if let Some(e) = &c.error {
            report.checks.push(Check::holds(format!("c{id}.completed"), false));
            report.warnings.push(format!("c{id}: {e}"));
        }
        report.warnings.extend(c.warnings.iter().map(|w| format!("c{id}: {w}")));
        results.push(json!({ "id": c.id, "title": c.title, "passed": c.passed, "error": c.error }));
    }
    report.results = json!({ "criteria": results });
    report.finish(strict);
    Outcome { report, series: Vec::new(), timings }
}

/// 0 when every check passed, 1 on failed checks, 3 on a numerical error.
pub fn exit_code(report: &Report) -> i32 {
    if report.error.is_some() {
        3
    } else if !report.passed {
        1
    } else {
        0
    }
}

/// Sizes the global pool; 0 keeps rayon's default.
pub fn configure_threads(n: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    return rayon::current_num_threads();
    #[cfg(not(feature = "parallel"))]
    1
}
