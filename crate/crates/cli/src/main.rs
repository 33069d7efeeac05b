//! capscat: truncated Schiffer operators, Grunsky matrices, scattering and
//! overfare diagnostics on genus-zero cap complexes.

mod commands;
mod config;
mod jsonfmt;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "capscat",
    about = "Schiffer comparison operators, scattering and overfare on cap complexes",
    version
)]
struct Args {
    /// JSON run configuration (flags below override its fields)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Command to run
    #[arg(long, value_enum)]
    command: Option<Command>,
    /// Cap specification JSON
    #[arg(long)]
    cap_spec: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for all randomized checks
    #[arg(long)]
    seed: Option<u64>,
    /// Regenerate the configured golden report instead of comparing
    #[arg(long)]
    regen_golden: bool,
    /// Additionally dump the Grunsky blocks (JSON + CSV)
    #[arg(long)]
    grunsky_dump: bool,
    /// Additionally dump the operator matrices (JSON)
    #[arg(long)]
    dump_operators: bool,
}

fn load_config(args: &Args) -> Result<RunConfig, commands::CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| commands::CliError::Parse(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                commands::CliError::Parse(format!(
                    "{}: line {}, column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = args.command {
        config.command = Some(c);
    }
    if let Some(p) = &args.cap_spec {
        config.cap_spec = Some(p.clone());
    }
    if let Some(p) = &args.out {
        config.output_dir = p.clone();
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load_config(&args).and_then(|config| {
        if config.command.is_some() {
            commands::run(&config, args.regen_golden)?;
        } else if !args.grunsky_dump && !args.dump_operators {
            return Err(commands::CliError::Parse("no command given".into()));
        }
        if args.grunsky_dump {
            commands::dump_grunsky(&config)?;
        }
        if args.dump_operators {
            commands::dump_operators(&config)?;
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
