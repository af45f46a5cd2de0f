//! rotlab: config-driven experiments on annulus rotation numbers.
//!
//! `rotlab run <config.toml>` executes one experiment and writes
//! result.json, data.csv and meta.json into the configured output
//! directory. Exit codes: 0 success, 2 bad configuration or violated
//! precondition, 3 numerical failure (non-enclosable interval, missing
//! orbit, insufficient convergence, fold, overlap).
//!
//! Worker threads come from --workers, then the config, then
//! ROTLAB_WORKERS, then the number of available cores. Results are
//! independent of the worker count by construction; reruns under the
//! same seed reproduce data.csv byte for byte.

mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "rotlab", version, about = "Rotation number experiments on the open annulus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Worker threads (default: config, then ROTLAB_WORKERS, then all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and sanity-check a config file without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, workers, seed } => run(&config, workers, seed),
        Command::Validate { config } => validate(&config),
    };
    ExitCode::from(code)
}

fn resolve_workers(flag: Option<usize>, from_config: Option<usize>) -> usize {
    flag.or(from_config)
        .or_else(|| std::env::var("ROTLAB_WORKERS").ok().and_then(|s| s.parse().ok()))
        .filter(|&w| w >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(config_path: &Path, workers_flag: Option<usize>, seed_flag: Option<u64>) -> u8 {
    let started = Instant::now();
    let cfg = match config::load(config_path) {
        Ok(c) => c,
        Err(m) => {
            eprintln!("{m}");
            return 2;
        }
    };
    let seed = seed_flag.or(cfg.seed).unwrap_or(0);
    let workers = resolve_workers(workers_flag, cfg.workers);
    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir) {
        eprintln!("cannot create {}: {e}", cfg.output_dir.display());
        return 2;
    }
    // A local pool, not the global one: the worker count is a per-run
    // setting and must not leak between runs hosted in one process.
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("cannot build thread pool: {e}");
            return 2;
        }
    };
    let outcome = pool.install(|| experiments::run(&cfg, seed));
    let (code, result) = match &outcome {
        Ok(out) => {
            println!(
                "{}",
                serde_json::to_string(&out.result).expect("JSON summaries serialize")
            );
            (0u8, out.result.clone())
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}: {}", cfg.experiment.name(), e.message());
            (code, json!({"error": {"exit_code": code, "message": e.message()}}))
        }
    };
    let rows = match outcome {
        Ok(out) => out.rows,
        Err(_) => Vec::new(),
    };
    let meta = json!({
        "experiment": cfg.experiment.name(),
        "config_path": config_path.display().to_string(),
        "config": serde_json::to_value(&cfg).expect("configs serialize"),
        "seed": seed,
        "workers": workers,
        "versions": {
            "rotlab-cli": env!("CARGO_PKG_VERSION"),
            "rotlab-core": rotlab_core::VERSION,
        },
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    if let Err(e) = output::write_artifacts(
        &cfg.output_dir,
        experiments::csv_header(cfg.experiment),
        &rows,
        &result,
        &meta,
    ) {
        eprintln!("cannot write artifacts in {}: {e}", cfg.output_dir.display());
        return 2;
    }
    code
}

fn validate(config_path: &Path) -> u8 {
    let cfg = match config::load(config_path) {
        Ok(c) => c,
        Err(m) => {
            eprintln!("{m}");
            return 2;
        }
    };
    match experiments::validate(&cfg) {
        Ok(()) => {
            println!("ok: {} -> {}", cfg.experiment.name(), cfg.output_dir.display());
            0
        }
        Err(e) => {
            eprintln!("{}: {}", cfg.experiment.name(), e.message());
            2
        }
    }
}
