use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use latmax::bruteforce::DEFAULT_POINT_LIMIT;
use latmax::harness::{run, write_outputs, HarnessConfig, RunOptions};

/// Run solver experiments described in a TOML file and write a CSV report.
#[derive(Parser, Debug)]
#[command(name = "latmax", version)]
struct Args {
    /// Experiment configuration.
    #[arg(long)]
    config: PathBuf,

    /// Output directory for report.csv and summary.toml.
    #[arg(long)]
    out: PathBuf,

    /// Replace the seeds of every experiment by this one.
    #[arg(long)]
    seed: Option<u64>,

    /// Only run algorithms whose name contains this string.
    #[arg(long)]
    algo: Option<String>,

    /// Skip exact optima; ratio assertions are then skipped.
    #[arg(long)]
    no_bruteforce: bool,

    /// Report wall_time_ms as 0 so that reports are reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,

    /// Largest feasible region the exact solver will enumerate.
    #[arg(long, default_value_t = DEFAULT_POINT_LIMIT)]
    point_limit: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match HarnessConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        seed_override: args.seed,
        algo_filter: args.algo,
        bruteforce: !args.no_bruteforce,
        timing: !args.no_timing,
        point_limit: args.point_limit,
    };
    let result = match run(&cfg, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_outputs(&args.out, &result) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    for r in result.reports.iter().filter(|r| r.note.is_some()) {
        eprintln!("note: {} {} seed {}: {}", r.instance_id, r.algorithm, r.seed, r.note.as_deref().unwrap_or_default());
    }
    let failed: Vec<_> = result.assertions.iter().filter(|a| !a.passed).collect();
    for a in &failed {
        eprintln!(
            "assertion failed: instance {:?} algorithm {:?} min_ratio {} on rows {:?}",
            a.instance, a.algorithm, a.min_ratio, a.failing_rows
        );
    }
    println!("{} cells, {} assertions, {} failed", result.reports.len(), result.assertions.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
