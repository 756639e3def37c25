//! `modelh`: run simulations, verifier checks and attractor-lab
//! experiments from a TOML config.
//!
//! Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 invalid config,
//! 3 runtime failure (including blow-up).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::{Failure, VerifyKind};
use config::{ConfigError, ExperimentConfig};
use output::Output;

#[derive(Parser)]
#[command(name = "modelh", version, about = "Model H solver, verifier and attractor lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel jobs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the resolved config and its digest, then exit.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Replace the config seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate one trajectory, logging the energy budget and checkpoints.
    Simulate,
    /// Run one verifier check.
    Verify {
        #[arg(value_enum)]
        kind: VerifyKind,
    },
    /// Pullback attraction of ball samples.
    Pullback,
    /// Covering-number dimension of the pulled-back ball.
    Dimension,
    /// Hölder continuity in the symbol and in time.
    Holder,
    /// Certify the potential hypotheses.
    ValidatePotential,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Self::Simulate => "simulate".into(),
            Self::Verify { kind } => {
                let v = clap::ValueEnum::to_possible_value(kind).expect("no skipped variants");
                format!("verify {}", v.get_name())
            }
            Self::Pullback => "pullback".into(),
            Self::Dimension => "dimension".into(),
            Self::Holder => "holder".into(),
            Self::ValidatePotential => "validate-potential".into(),
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError::new("--config", format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(s) = cli.seed_override {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let digest = cfg.digest();
    if cli.dry_run {
        print!("{}", cfg.canonical());
        println!("# digest = {digest}");
        return ExitCode::SUCCESS;
    }
    let threads = cli.threads.unwrap_or(0);
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(3);
    }
    let dir = cli.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("modelh-out"));
    let out = match Output::create(&dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", dir.display());
            return ExitCode::from(3);
        }
    };
    let name = cli.command.name();
    let start = Instant::now();
    let records = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Verify { kind } => commands::verify(&cfg, kind),
        Command::Pullback => commands::pullback(&cfg),
        Command::Dimension => commands::dimension(&cfg, &out),
        Command::Holder => commands::holder(&cfg),
        Command::ValidatePotential => commands::validate_potential(&cfg, &out),
    };
    let wall = start.elapsed().as_secs_f64();
    if let Err(e) = out.metadata(&name, &digest, wall, rayon::current_num_threads()) {
        eprintln!("error: metadata: {e}");
        return ExitCode::from(3);
    }
    let records = match records {
        Ok(r) => r,
        Err(Failure::Config(e)) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let passed = match out.report(&name, &digest, &records) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: report: {e}");
            return ExitCode::from(3);
        }
    };
    for r in &records {
        for v in &r.verdicts {
            println!("{} {}: {} {:e}", r.kind.name(), v.name, if v.passed { "pass" } else { "FAIL" }, v.measured);
        }
    }
    println!("digest {digest}");
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
