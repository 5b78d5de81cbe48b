//! Runs `nehari check` twice with different thread counts and prints one
//! PASS/FAIL line per criterion.

use std::path::Path;
use std::process::{Command, ExitCode, Stdio};

use nehari_cli::checks::{budget, CRITERIA};
use nehari_cli::report::{Report, Timings};

fn run(out: &Path, threads: usize) -> (Report, Timings, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_nehari"))
        .args(["check", "--threads", &threads.to_string(), "--out"])
        .arg(out)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .expect("spawn nehari");
    assert!(matches!(status.code(), Some(0 | 1)), "nehari check exited with {status}");
    let raw = std::fs::read(out.join("report.json")).expect("report.json");
    let report = serde_json::from_slice(&raw).expect("parse report");
    let timings = serde_json::from_slice(&std::fs::read(out.join("timings.json")).expect("timings.json")).expect("parse timings");
    (report, timings, raw)
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("tempdir");
    let (report, timings, many) = run(&dir.path().join("threads4"), 4);
    let (_, _, one) = run(&dir.path().join("threads1"), 1);

    let mut failed = 0;
    for &(id, title) in &CRITERIA {
        let prefix = format!("c{id}.");
        let mine: Vec<_> = report.checks.iter().filter(|c| c.name.starts_with(&prefix)).collect();
        let mut ok = !mine.is_empty() && mine.iter().all(|c| c.passed);
        let mut notes: Vec<String> = mine
            .iter()
            .filter(|c| !c.passed)
            .map(|c| {
                let rel = serde_json::to_string(&c.relation).unwrap_or_default();
                format!("{} = {:.4e} (needs {} {:.4e})", c.name, c.measured, rel.trim_matches('"'), c.threshold)
            })
            .collect();
        if id == 10 {
            let same = one == many;
            ok &= same;
            if !same {
                notes.push("report.json differs between --threads 1 and --threads 4".into());
            }
        }
        let section = timings.sections.iter().find(|s| s.name == format!("c{id}"));
        if let (Some(s), Some(limit)) = (section, budget(id)) {
            if s.seconds > limit {
                ok = false;
                notes.push(format!("took {:.1}s, budget {limit}s", s.seconds));
            }
        }
        let secs = section.map_or(0.0, |s| s.seconds);
        println!("criterion {id:>2} {} {title} ({secs:.1}s)", if ok { "PASS" } else { "FAIL" });
        for n in notes {
            println!("    {n}");
        }
        failed += usize::from(!ok);
    }
    if timings.total_seconds > 600.0 {
        println!("total runtime {:.1}s exceeds 600s", timings.total_seconds);
        failed += 1;
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
