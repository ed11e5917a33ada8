use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use d2dsim::{AllocationMode, Config, Preset};

#[derive(Parser)]
#[command(name = "d2dsim", version, about = "D2D resource-block sharing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset and write its CSV files.
    Run {
        /// `key = value` config file; missing keys take defaults.
        #[arg(long)]
        config: PathBuf,
        /// pairs-vs-radius | throughput-vs-iterations | mode-comparison | complexity-vs-pairs | mos-table
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config allocation mode (sbrra | hmm).
        #[arg(long, value_parser = parse_mode)]
        mode: Option<AllocationMode>,
        /// Disable the sector filter on co-tier interference.
        #[arg(long)]
        no_sector: bool,
    },
}

fn parse_mode(s: &str) -> Result<AllocationMode, String> {
    s.parse()
}

fn main() -> Result<()> {
    let Command::Run { config, preset, out, seed, mode, no_sector } = Cli::parse().command;
    let preset: Preset = preset.parse()?;
    let mut cfg = Config::load(&config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(seed) = seed {
        cfg.plan.seed = seed;
    }
    if let Some(mode) = mode {
        cfg.plan.mode = mode;
    }
    if no_sector {
        cfg.plan.sectored = false;
    }
    for path in d2dsim::run_preset(preset, &cfg, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}
