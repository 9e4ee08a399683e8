//! Command-line driver for pattern-operator experiments.

mod config;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quasispec::spectra::RunOptions;
use serde_json::json;

use config::{ConfigError, ExperimentConfig, Task};
use tasks::Outcome;

#[derive(Parser)]
#[command(name = "quasispec", version, about = "Spectral experiments for pattern-invariant operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Vec<PathBuf>,
    /// Directory for reports and CSV files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the window levels, e.g. `10,20,40`.
    #[arg(long, global = true, value_delimiter = ',', value_name = "a,b,c")]
    levels: Option<Vec<u32>>,
    /// Override the graph seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Largest dimension for exact characteristic polynomials.
    #[arg(long, global = true, value_name = "N")]
    exact_limit: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task named in the config.
    Run,
    Census,
    Frequencies,
    Moments,
    Ids,
    GroundState,
    Eigenspace,
    Logdet,
    Converge,
    /// Run the bundled configs (or the given ones) and report every check.
    Verify {
        /// Multiply every level by this factor.
        #[arg(long, default_value_t = 1)]
        level_factor: u32,
    },
}

impl Command {
    fn task(&self) -> Option<Task> {
        Some(match self {
            Command::Census => Task::Census,
            Command::Frequencies => Task::Frequencies,
            Command::Moments => Task::Moments,
            Command::Ids => Task::Ids,
            Command::GroundState => Task::GroundState,
            Command::Eigenspace => Task::Eigenspace,
            Command::Logdet => Task::Logdet,
            Command::Converge => Task::Converge,
            Command::Run | Command::Verify { .. } => return None,
        })
    }
}

enum Failure {
    Usage(String),
    Checks,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let c = &cli.common;
    if let Some(t) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Usage(format!("--threads: {e}")))?;
    }
    let mut opts = RunOptions::default();
    if let Some(l) = c.exact_limit {
        opts.exact_limit = l;
    }
    let configs = match &cli.command {
        Command::Verify { level_factor } => {
            if *level_factor == 0 {
                return Err(Failure::Usage("--level-factor must be positive".into()));
            }
            let mut cfgs = if c.config.is_empty() { config::bundled() } else { load_all(&c.config)? };
            for cfg in &mut cfgs {
                for l in &mut cfg.levels {
                    *l *= level_factor;
                }
            }
            cfgs
        }
        cmd => {
            if c.config.len() != 1 {
                return Err(Failure::Usage("exactly one --config is required".into()));
            }
            let mut cfgs = load_all(&c.config)?;
            if let Some(t) = cmd.task() {
                cfgs[0].task = t;
            }
            cfgs
        }
    };
    let mut all_passed = true;
    for mut cfg in configs {
        if let Some(levels) = &c.levels {
            cfg.levels = levels.clone();
        }
        if c.seed.is_some() {
            cfg.seed = c.seed;
        }
        let g = cfg.validate().map_err(|ConfigError(m)| Failure::Usage(m))?;
        let mut run_opts = opts.clone();
        if let Some(f) = cfg.params.merge_tol_factor {
            run_opts.merge_tol_factor = f;
        }
        let outcome = tasks::run(&cfg, &g, &run_opts).map_err(|e| Failure::Usage(format!("{}: {e}", cfg.name)))?;
        for v in &outcome.verdicts {
            let mark = if v.passed { "PASS" } else { "FAIL" };
            println!("{}: {}: {mark} {}", cfg.name, v.check, v.detail);
        }
        if outcome.partial {
            println!("{}: partial result", cfg.name);
        }
        let dir = c.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from));
        if let Some(dir) = dir {
            write_outputs(&dir, &cfg, &outcome).map_err(Failure::Usage)?;
        }
        all_passed &= outcome.passed();
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<ExperimentConfig>, Failure> {
    paths.iter().map(|p| ExperimentConfig::load(p).map_err(|ConfigError(m)| Failure::Usage(m))).collect()
}

fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let summary = json!({
        "name": cfg.name,
        "task": cfg.task.name(),
        "version": quasispec::VERSION,
        "config_hash": cfg.hash(),
        "config": cfg,
        "verdicts": outcome.verdicts,
        "passed": outcome.passed(),
        "partial": outcome.partial,
        "report": outcome.report,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    let mut files = vec![(format!("{}.json", cfg.name), text + "\n")];
    files.extend(outcome.files.iter().cloned());
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}
