use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skewprod::fiber::FiberModel;

mod commands;
mod config;
mod report;

use commands::CmdError;
use config::ExperimentConfig;

/// Experiments on step skew products over the 2-shift with interval fibers.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment configuration
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Check (H1)-(H4) and report beta, lambda, kappa, c, upsilon
    CheckHypotheses,
    /// Exponent of the maximal-entropy measure on the exposed piece
    Mme,
    /// Parry measure of the 4-symbol exposed-piece chain
    Parry,
    /// Finite-time fiber exponent along a periodic base word
    Lyapunov,
    /// Enumerate periodic orbits up to a period
    PeriodicScan,
    /// Fundamental domains, successors and periodic orbits near points
    FundamentalDomains,
    /// Core periodic orbits approaching an exposed zero-exponent measure
    BoundaryApprox,
    /// Connecting words between two hyperbolic orbits of the same type
    Connect,
    /// Density scan of an IFS orbit
    Density,
    /// Word reduction and nontransitivity witness
    ReduceWord,
    /// Gap, S-walk and V+ statistics
    WalkStats,
    /// Occupation of (eps, 1-eps) under random symbols
    Occupation,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::CheckHypotheses => "check-hypotheses",
            Command::Mme => "mme",
            Command::Parry => "parry",
            Command::Lyapunov => "lyapunov",
            Command::PeriodicScan => "periodic-scan",
            Command::FundamentalDomains => "fundamental-domains",
            Command::BoundaryApprox => "boundary-approx",
            Command::Connect => "connect",
            Command::Density => "density",
            Command::ReduceWord => "reduce-word",
            Command::WalkStats => "walk-stats",
            Command::Occupation => "occupation",
        }
    }
}

fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<report::Output<serde_json::Value>, CmdError> {
    let model = FiberModel::new(cfg.model.spec())?;
    match cmd {
        Command::CheckHypotheses => commands::check_hypotheses_cmd(&model),
        Command::Mme => commands::mme_cmd(&model, cfg.mme.as_ref()),
        Command::Parry => commands::parry_cmd(),
        Command::Lyapunov => commands::lyapunov_cmd(&model, cfg),
        Command::PeriodicScan => commands::periodic_scan_cmd(&model, cfg),
        Command::FundamentalDomains => commands::fundamental_domains_cmd(&model, cfg),
        Command::BoundaryApprox => commands::boundary_approx_cmd(&model, cfg),
        Command::Connect => commands::connect_cmd(&model, cfg),
        Command::Density => commands::density_cmd(&model, cfg),
        Command::ReduceWord => commands::reduce_word_cmd(&model, cfg),
        Command::WalkStats => commands::walk_stats_cmd(cfg),
        Command::Occupation => commands::occupation_cmd(&model, cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config else {
        eprintln!("error: --config <FILE> is required");
        return ExitCode::from(2);
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let name = cli.command.name();
    match run(cli.command, &cfg) {
        Ok(out) => {
            let dir = cfg.out_dir();
            match report::write(&dir, name, &report::config_hash(&text), &out) {
                Ok(paths) => {
                    print!("{}", out.summary);
                    for p in paths {
                        println!("wrote {}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: writing reports to {}: {e}", dir.display());
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
