use anyhow::Context;
use clap::{Parser, Subcommand};
use lab_cli::config::{validate, ExperimentConfig};
use lab_cli::{runner, scenarios};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "lab",
    about = "Numerical laboratory for hypoelliptic diffusions on Carnot groups",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Static checks of a scenario config (admissibility, frames, grids).
    Validate {
        /// Config path (.toml/.json) or a built-in scenario name.
        config: String,
    },
    /// Run a scenario end-to-end and write its artifacts.
    Run {
        /// Config path (.toml/.json) or a built-in scenario name.
        config: String,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: runs/<scenario-name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (falls back to LAB_THREADS, then all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the built-in scenarios.
    ListScenarios,
}

fn load_config(arg: &str) -> anyhow::Result<ExperimentConfig> {
    let path = Path::new(arg);
    if path.exists() {
        return ExperimentConfig::load(path);
    }
    if let Some(cfg) = scenarios::builtin(arg) {
        return Ok(cfg);
    }
    anyhow::bail!(
        "`{arg}` is neither a config file nor a built-in scenario (see `lab list-scenarios`)"
    )
}

fn thread_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("LAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let report = validate(&cfg);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.valid { 0 } else { 2 })
        }
        Command::Run {
            config,
            seed,
            out,
            threads,
        } => {
            let cfg = load_config(&config)?;
            let out_dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
            let outcome = if let Some(k) = thread_count(threads) {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build()
                    .context("building the thread pool")?;
                pool.install(|| runner::run(&cfg, &out_dir, seed))?
            } else {
                runner::run(&cfg, &out_dir, seed)?
            };
            for check in &outcome.manifest.checks {
                println!("{}: {}", check.verdict, check.name);
            }
            println!(
                "artifacts: {} (manifest.json + {} files)",
                out_dir.display(),
                outcome.manifest.artifacts.len()
            );
            Ok(if outcome.all_passed() { 0 } else { 1 })
        }
        Command::ListScenarios => {
            for (name, summary) in scenarios::list() {
                println!("{name:24} {summary}");
            }
            Ok(0)
        }
    }
}
