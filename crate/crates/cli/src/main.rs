use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod config;
mod output;
mod report;
mod run;

use config::{ConfigError, Format};
use run::Command;

/// Quantum trajectories from the quantum stationary Hamilton-Jacobi equation.
#[derive(Debug, Parser)]
#[command(name = "qtraj", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (flat TOML with dotted keys).
    #[arg(long, global = true, default_value = "qtraj.toml")]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Data and report format; overrides `output.format`.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Assert a run without randomness. Nothing in qtraj draws random numbers,
    /// so this only records the assertion in the report.
    #[arg(long, global = true)]
    seedless: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let mut config = match config::parse_str(&text) {
        Ok(c) => c,
        Err(e) => {
            let kind = match e {
                ConfigError::Parse(_) => "parse error",
                ConfigError::Validation(_) => "error",
            };
            eprintln!("{kind} in {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = &cli.out {
        config.out_dir = dir.display().to_string();
    }
    if let Some(f) = cli.format.as_deref().and_then(Format::parse) {
        config.format = f;
    }

    let report = run::run(&config, cli.command, cli.seedless);
    print!("{}", report::summary(&report));
    match report::emit(&report, &text, PathBuf::from(&config.out_dir).as_path(), config.format) {
        Ok(files) => println!("wrote {} file(s) to {}", files.len(), config.out_dir),
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    if report.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
