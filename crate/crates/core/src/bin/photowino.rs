use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use photowino::commands::{cmd_conv_check, cmd_noise_sweep, cmd_perf, cmd_power, cmd_resources, Outcome};
use photowino::config::Config;
use photowino::Error;

/// Winograd photonic CNN accelerator simulator.
///
/// Exit status: 0 success, 1 assertion or tolerance failure, 2 config, IO or
/// usage error.
#[derive(Parser, Debug)]
#[command(name = "photowino", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config file (defaults apply when absent).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Randomized Winograd-vs-direct convolution equivalence.
    ConvCheck {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: Option<u64>,
        /// Use the mistranscribed F(4x4, 3x3) matrices.
        #[arg(long)]
        inject_misprinted: bool,
    },
    /// Pipeline timing and throughput.
    Perf {
        #[arg(long)]
        clock: Option<f64>,
    },
    /// Power and energy efficiency, with baseline comparison.
    Power {
        #[arg(long)]
        clock: Option<f64>,
    },
    /// Noise-aware training and inference sweep.
    NoiseSweep {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        repeats: Option<u64>,
        /// Fail unless the noise-trained model beats the noise-free one at
        /// the highest inference noise.
        #[arg(long)]
        assert_crossover: bool,
    },
    /// Channel, ring, connection and memristor-area feasibility.
    Resources,
}

fn load(common: &Common) -> photowino::Result<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
        cfg.base_dir = PathBuf::new();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> photowino::Result<Outcome> {
    let cfg = load(&cli.common)?;
    match &cli.command {
        Command::ConvCheck {
            trials,
            inject_misprinted,
        } => cmd_conv_check(&cfg, trials.map(|t| t as usize), *inject_misprinted),
        Command::Perf { clock } => cmd_perf(&cfg, *clock),
        Command::Power { clock } => cmd_power(&cfg, *clock),
        Command::NoiseSweep {
            repeats,
            assert_crossover,
        } => cmd_noise_sweep(&cfg, repeats.map(|r| r as usize), *assert_crossover),
        Command::Resources => cmd_resources(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Io { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
