//! Reproducible experiments for shaped APSK with iterative demapping.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Settings;

#[derive(Parser)]
#[command(name = "shapsk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Information rate of uniform and shaped APSK over an Es/N0 sweep.
    Capacity(Common),
    /// Shaping gain versus rate from the joint bias/geometry search.
    Gain(Common),
    /// Optimal shaping bias and radius set at each Es/N0.
    OptimalP0(Common),
    /// Peak-to-average power ratio versus shaping bias.
    Papr(Common),
    /// Codebook and bias of a lowest-weight shaping code.
    ShapingCode(Common),
    /// Detector, variable-node and check-node transfer curves.
    Exit(Common),
    /// Degree distribution search on simulated detector curves.
    DesignLdpc(Common),
    /// Bit and frame error rates of a system over an Eb/N0 sweep.
    Ber(Common),
    /// Mean receiver iterations over an Eb/N0 sweep.
    Iters(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file with settings; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

/// Why a run stopped.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration; nothing was computed.
    Invalid(String),
    /// The computation itself failed.
    Runtime(String),
}

impl From<shapsk::Error> for Failure {
    fn from(e: shapsk::Error) -> Self {
        use shapsk::Error as E;
        match e {
            E::Constellation(_)
            | E::LabelTable { .. }
            | E::Strategy(_)
            | E::ShapingCode(_)
            | E::Degrees(_)
            | E::Config(_)
            | E::Length { .. } => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<PathBuf, Failure> {
    let (name, common) = match &cli.command {
        Command::Capacity(c) => ("capacity", c),
        Command::Gain(c) => ("gain", c),
        Command::OptimalP0(c) => ("optimal-p0", c),
        Command::Papr(c) => ("papr", c),
        Command::ShapingCode(c) => ("shaping-code", c),
        Command::Exit(c) => ("exit", c),
        Command::DesignLdpc(c) => ("design-ldpc", c),
        Command::Ber(c) => ("ber", c),
        Command::Iters(c) => ("iters", c),
    };
    let base = match &common.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let mut s = base.overlay(&common.settings);
    s.seed = Some(s.seed());
    if let Some(threads) = s.threads {
        if threads == 0 {
            return Err(Failure::Invalid("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match name {
        "capacity" => commands::capacity(&s),
        "gain" => commands::gain(&s),
        "optimal-p0" => commands::optimal_p0(&s),
        "papr" => commands::papr(&s),
        "shaping-code" => commands::shaping_code(&s),
        "exit" => commands::exit(&s),
        "design-ldpc" => commands::design_ldpc(&s),
        "ber" => commands::ber(&s, "ber"),
        _ => commands::ber(&s, "iters"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(manifest) => {
            println!("manifest: {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: invalid configuration: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
