//! `rnpv`: discount-rate/portfolio-size sweeps and engine cross-checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use rnpv_core::config::{load_config, Scenario};
use rnpv_core::report::run_sweep;
use rnpv_core::verify::verify;

const EXIT_VALIDATION: u8 = 1;
const EXIT_CROSS_CHECK: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "rnpv", version, about = "Profitability moments of loan portfolios under regime-driven default and prepayment")]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Run the Monte Carlo oracle alongside the analytic engines.
    #[arg(long)]
    mc: bool,

    /// Monte Carlo seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,

    /// Monte Carlo replications (overrides the config).
    #[arg(long)]
    reps: Option<u64>,

    /// Print the cross-check report instead of the tables.
    #[arg(long)]
    verify: bool,

    /// Also write CSV tables into this directory.
    #[arg(long)]
    csv: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn scenario(args: &Args) -> Result<Scenario, String> {
    let mut scenario = load_config(&args.config).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        scenario.mc.seed = seed;
    }
    if let Some(reps) = args.reps {
        if reps == 0 || (scenario.mc.antithetic && reps % 2 == 1) {
            return Err(format!("invalid --reps {reps}"));
        }
        scenario.mc.replications = reps;
    }
    if args.mc {
        scenario.model.recovery.ensure_sampleable().map_err(|e| e.to_string())?;
    }
    Ok(scenario)
}

fn run(args: &Args) -> ExitCode {
    let scenario = match scenario(args) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let with_mc = args.mc || scenario.mc_enabled;

    if args.verify {
        return match verify(&scenario, with_mc) {
            Ok(report) => {
                print!("{}", report.render());
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    for failed in report.failures() {
                        eprintln!("failed check: {}", failed.name);
                    }
                    ExitCode::from(EXIT_CROSS_CHECK)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_VALIDATION)
            }
        };
    }

    let report = match run_sweep(&scenario, with_mc) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    print!("{}", report.render_text());
    if let Some(dir) = &args.csv {
        if let Err(e) = report.write_csv(dir) {
            eprintln!("error: writing CSV to {}: {e}", dir.display());
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_VALIDATION);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match args.threads {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| run(&args)),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_VALIDATION)
            }
        },
        None => run(&args),
    }
}
