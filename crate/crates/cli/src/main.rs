mod commands;
mod output;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "distill", version, about = "Magic state distillation factory analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Protocol {
    Bh,
    Rm,
    Toffoli,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mode {
    Block,
    Module,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Method {
    Rare,
    Brute,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Shuffle {
    Canonical,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Want {
    T,
    Toffoli,
}

#[derive(Args, Clone, Debug)]
pub struct ProtocolArgs {
    #[arg(long, value_enum)]
    pub protocol: Protocol,
    /// Outputs per block for the 3k+8 family.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Clone, Debug)]
pub struct OutArgs {
    /// Directory for CSV outputs and the run manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct ResourceArgs {
    /// Plain `key = value` parameter file.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Physical gate error rate.
    #[arg(long)]
    pub pg: Option<f64>,
    /// Surface-code cycle time in seconds.
    #[arg(long)]
    pub tsc: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Undetected weight-2 error counts of one block.
    Eta {
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Analytic error tracking through a sequence of rounds.
    Track {
        /// Comma-separated rounds, e.g. `bh:10,bh:10,tof`.
        #[arg(long)]
        rounds: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value = "module")]
        mode: Mode,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo estimate of a module-checked factory.
    Simulate {
        #[arg(long)]
        rounds: String,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "rare")]
        method: Method,
        #[arg(long, value_enum, default_value = "canonical")]
        shuffle: Shuffle,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Measurement circuit, check matrices and schedule of one block.
    Realize {
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Lowest-volume and time-optimal factories for a computation.
    Optimize {
        /// Number of requested states or gates.
        #[arg(long)]
        states: f64,
        #[arg(long, value_enum, default_value = "t")]
        want: Want,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[command(flatten)]
        resources: ResourceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Shor resource table against reference values.
    ShorTable {
        #[command(flatten)]
        resources: ResourceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Leading coefficients against the closed-form polynomials.
    Coefficients {
        #[command(flatten)]
        out: OutArgs,
    },
    /// Yield, spacetime, frontier and scaling curve data.
    Curves {
        /// Demand for the frontier data.
        #[arg(long, default_value_t = 4e10)]
        states: f64,
        #[command(flatten)]
        resources: ResourceArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

/// Exit codes: usage 2, infeasible 3, anything else 4.
fn exit_code(err: &anyhow::Error) -> u8 {
    use distill_core::Error as E;
    if err.downcast_ref::<commands::Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(E::InvalidCode(_) | E::InvalidConfig(_) | E::UnsupportedProtocol(_) | E::InvalidPreselection(_)) => 2,
        Some(E::Gf2(distill_core::Gf2Error::Parse(_))) => 2,
        Some(E::NoValidFactory(_) | E::FactoryInvalid { .. } | E::Unachievable(_) | E::Infeasible(_)) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eta { protocol, out } => commands::eta(&protocol, &out),
        Command::Track { rounds, eps, mode, out } => commands::track(&rounds, eps, mode, &out),
        Command::Simulate { rounds, eps, trials, seed, method, shuffle, out } => {
            commands::simulate(&rounds, eps, trials, seed, method, shuffle, &out)
        }
        Command::Realize { protocol, out } => commands::realize(&protocol, &out),
        Command::Optimize { states, want, mode, resources, out } => {
            commands::optimize(states, want, mode, &resources, &out)
        }
        Command::ShorTable { resources, out } => tables::shor_table(&resources, &out),
        Command::Coefficients { out } => tables::coefficients(&out),
        Command::Curves { states, resources, out } => commands::curves(states, &resources, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
