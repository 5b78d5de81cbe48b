use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nehari_cli::report::write_outputs;
use nehari_cli::{configure_threads, execute, exit_code, Command};

#[derive(Parser)]
#[command(name = "nehari", version, about = "Nehari manifold solvers and their acceptance checks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML or JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.json, CSV series and timings.json.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Treat warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Roots, threshold and sampled profile of a single fibering map.
    Fibering,
    /// Minimize both branch levels for one problem.
    Solve,
    /// Prescribed-energy sweep with gap diagnostics.
    Prescribed,
    /// Affine sweep across the existence threshold.
    Affine,
    /// Run the acceptance criteria.
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.command {
        Sub::Fibering => Command::Fibering,
        Sub::Solve => Command::Solve,
        Sub::Prescribed => Command::Prescribed,
        Sub::Affine => Command::Affine,
        Sub::Check => Command::Check,
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let out = match execute(cmd, cli.config.as_deref(), cli.seed, cli.strict) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_outputs(&cli.out, &out.report, &out.series, &out.timings) {
        eprintln!("error: writing {}: {e}", cli.out.display());
        return ExitCode::from(2);
    }
    for c in out.report.failed_checks() {
        eprintln!(
            "FAIL {}: measured {:e}, needs {} {:e}",
            c.name,
            c.measured,
            serde_json::to_string(&c.relation).unwrap_or_default().trim_matches('"'),
            c.threshold
        );
    }
    for w in &out.report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(e) = &out.report.error {
        eprintln!("error: {e}");
    }
    println!("{}: {}", cmd.name(), if out.report.passed { "passed" } else { "failed" });
    ExitCode::from(exit_code(&out.report) as u8)
}
