//! `ots`: reproducible experiments over ots-core. Every command reads a
//! config (file and/or flags), derives its randomness from one root seed
//! and writes JSON or CSV.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{ExperimentConfig, Flags};

#[derive(Parser)]
#[command(name = "ots", version, about = "Nonlocal-game, Hamiltonian-game and zero-knowledge experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// 1-ω and rigidity residuals of LWPBT under a θ-rotation of Alice's Paulis.
    RigiditySweep,
    /// Honest value of the Hamiltonian game: closed form, exact, sampled.
    EnergyDemo,
    /// View vs simulator distance for every shipped adversary on a circuit.
    ZkAudit,
    /// Threshold acceptance of the repeated anchored game on a yes/no pair.
    GapDemo,
    /// Rounds perturbed Weyl-Heisenberg functions to representations.
    GhRound,
    /// The off-the-shelf verification device: state and measurement menu.
    DeviceSpec,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::RigiditySweep => "rigidity-sweep",
            Command::EnergyDemo => "energy-demo",
            Command::ZkAudit => "zk-audit",
            Command::GapDemo => "gap-demo",
            Command::GhRound => "gh-round",
            Command::DeviceSpec => "device-spec",
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::resolve(cli.command.name(), &cli.flags)?;
    let report = match cli.command {
        Command::RigiditySweep => commands::rigidity_sweep(&cfg)?,
        Command::EnergyDemo => commands::energy_demo(&cfg)?,
        Command::ZkAudit => commands::zk_audit(&cfg)?,
        Command::GapDemo => commands::gap_demo(&cfg)?,
        Command::GhRound => commands::gh_round(&cfg)?,
        Command::DeviceSpec => commands::device_spec(&cfg)?,
    };
    report.emit(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let err = json!({
                "error": {
                    "command": cli.command.name(),
                    "message": e.to_string(),
                    "causes": e.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
                }
            });
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}
