use bigjump_cli::run::{self, exit, RunError};
use bigjump_cli::verify::{verify, Mutation, Suite, VerifyOptions};
use bigjump_cli::Config;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Heavy-tailed large-deviation experiments: limits, simulations and the
/// verification battery.
///
/// Seeds resolve as `--seed`, then `run.seed` in the config, then the
/// BIGJUMP_SEED environment variable, then a fixed default.
#[derive(Parser)]
#[command(name = "bigjump", version = run::BUILD_ID)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment; writes report.json (and points.csv) to the output directory.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides run.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (overrides run.workers).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the acceptance battery; exits nonzero iff a criterion fails.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[arg(long)]
        seed: Option<u64>,
        /// Only these criteria (repeatable).
        #[arg(long = "criterion", value_parser = clap::value_parser!(u8).range(1..=9))]
        only: Vec<u8>,
        #[arg(long)]
        workers: Option<usize>,
        /// Write all results as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Inject a known bug to check that the battery catches it.
        #[arg(long, value_enum, hide = true)]
        mutate: Option<Mutation>,
    },
    /// Print the asymptotic constant(s) for a config as JSON.
    Limits {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump one stationary path as series.csv (k, x, z).
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Path length; defaults to plan.n.
        #[arg(long)]
        len: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<Config, RunError> {
    Ok(Config::load(path)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<i32, RunError> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            workers,
        } => {
            let mut cfg = load(&config)?;
            if let Some(w) = workers {
                cfg.run.workers = w;
            }
            let seed = run::resolve_seed(seed, &cfg)?;
            let dir = run::output_dir(out.as_deref(), &cfg);
            let report = run::run(&cfg, seed, &dir)?;
            println!(
                "{}: theory {} estimate {} ± {} (z = {:.2}); report in {}",
                report.experiment,
                report.theory,
                report.estimate.value,
                report.estimate.stderr,
                report.z,
                dir.join("report.json").display()
            );
            Ok(exit::OK)
        }
        Command::Verify {
            suite,
            seed,
            only,
            workers,
            json,
            mutate,
        } => {
            let seed = match seed {
                Some(s) => s,
                None => match std::env::var(run::SEED_ENV) {
                    Ok(v) => v.trim().parse().map_err(|_| RunError::SeedEnv {
                        env: run::SEED_ENV,
                        value: v,
                    })?,
                    Err(_) => run::DEFAULT_SEED,
                },
            };
            let opts = VerifyOptions {
                suite,
                seed,
                only,
                mutation: mutate,
            };
            let results = run::with_workers(workers.unwrap_or(0), || {
                verify(&opts, |r| {
                    println!("{}", r.summary());
                    for c in &r.checks {
                        println!("    {c}");
                    }
                })
            })?;
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&results).expect("results serialize");
                std::fs::write(&path, text).map_err(|source| RunError::Io { path, source })?;
            }
            let failed = results.iter().filter(|r| !r.pass).count();
            println!(
                "{} of {} criteria passed",
                results.len() - failed,
                results.len()
            );
            Ok(if failed == 0 { exit::OK } else { exit::FAILURE })
        }
        Command::Limits { config, seed } => {
            let cfg = load(&config)?;
            let seed = run::resolve_seed(seed, &cfg)?;
            let report = run::limits(&cfg, seed)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
            Ok(exit::OK)
        }
        Command::Simulate {
            config,
            seed,
            len,
            out,
        } => {
            let cfg = load(&config)?;
            let seed = run::resolve_seed(seed, &cfg)?;
            let len = match (len, cfg.plan) {
                (Some(l), _) => l,
                (None, Some(p)) => p.n,
                (None, None) => 1000,
            };
            let csv = run::simulate_series(&cfg, seed, len)?;
            let path = run::write_series(&csv, &run::output_dir(out.as_deref(), &cfg))?;
            println!("wrote {}", path.display());
            Ok(exit::OK)
        }
    }
}
