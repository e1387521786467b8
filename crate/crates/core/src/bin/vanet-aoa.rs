use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vanet_aoa::error::{Error, Result};
use vanet_aoa::harness::{self, parse_list, ExperimentConfig, Scenario};

#[derive(Parser)]
#[command(name = "vanet-aoa", about = "AoA-assisted beacon authentication experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated Wald thresholds.
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Comma-separated SNR values in dB.
    #[arg(long = "snr-db", global = true, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Comma-separated Ricean factors.
    #[arg(long, global = true)]
    k: Option<String>,
    /// Check the result's acceptance properties; exit 3 on a violation.
    #[arg(long, global = true)]
    self_check: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Detection probability of an honest transmitter.
    Pd,
    /// False alarms from a distant impersonator.
    PfFar,
    /// False alarms from a nearby impersonator.
    PfNear,
    /// Estimator variance against the bound.
    Crb,
    /// Key agreement trace, honest and under relay attack.
    SkaDemo,
    /// Relay success over a raster around two nodes.
    MitmMap,
}

impl Command {
    fn scenario(self) -> Scenario {
        match self {
            Command::Pd => Scenario::PdSweep,
            Command::PfFar => Scenario::PfFar,
            Command::PfNear => Scenario::PfNear,
            Command::Crb => Scenario::CrbCheck,
            Command::SkaDemo => Scenario::SkaDemo,
            Command::MitmMap => Scenario::MitmMap,
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::for_scenario(cli.command.scenario());
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
        cfg.scenario = cli.command.scenario();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(a) = &cli.alpha {
        cfg.alpha_degrees = parse_list("alpha", a)?;
    }
    if let Some(s) = &cli.snr_db {
        cfg.snr_db = parse_list("snr-db", s)?;
    }
    if let Some(k) = &cli.k {
        cfg.k = parse_list("k", k)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load(&cli).and_then(|cfg| harness::run(&cfg));
    let output = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let text = output.render();
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    eprintln!("{}", output.summary().trim_end());
    if cli.self_check {
        let violations = output.violations();
        for v in &violations {
            eprintln!("violation: {v}");
        }
        if !violations.is_empty() {
            return ExitCode::from(3);
        }
        eprintln!("self-check passed");
    }
    ExitCode::SUCCESS
}
