use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use expcli::sweep::{parse_values, sweep};
use expcli::{Config, EXPERIMENTS};

#[derive(Parser)]
#[command(name = "anisoscat", version, about = "Anisotropic scattering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run an experiment once per parameter value.
    Sweep {
        name: String,
        /// One of h, k, M, eps.
        #[arg(long)]
        param: String,
        /// Comma-separated values or an inclusive range `lo:hi:count`.
        #[arg(long)]
        values: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// List experiment names.
    List,
}

fn load(path: Option<&PathBuf>) -> anyhow::Result<Config> {
    path.map_or_else(|| Ok(Config::default()), |p| Config::load(p))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::List => {
            EXPERIMENTS.iter().for_each(|e| println!("{e}"));
            0
        }
        Command::Run { name, config, out, seed } => match load(config.as_ref()) {
            Ok(cfg) => {
                let m = expcli::run(&name, cfg, &out, seed);
                if let Some(e) = &m.error {
                    eprintln!("error: {e}");
                }
                m.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                expcli::record_error(&name, &out, seed, e).exit_code()
            }
        },
        Command::Sweep { name, param, values, config, out, seed } => {
            match load(config.as_ref())
                .and_then(|cfg| Ok((cfg, parse_values(&values)?)))
                .and_then(|(cfg, vals)| sweep(&name, &param, &vals, &cfg, &out, seed))
            {
                Ok(m) => m.exit_code(),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    2
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
