use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use llave::{run, Command, Overrides, RunConfig};

/// Skew-product Anosov maps, cohomological equations and shadowing-period
/// expansions.
#[derive(Parser, Debug)]
#[command(name = "llave", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON input document.
    #[arg(long)]
    input: PathBuf,
    /// Report destination; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = RunConfig { command: cli.command, input: cli.input, output: cli.output, overrides: cli.overrides };
    match run(&cfg) {
        Ok(out) => {
            if cfg.output.is_none() {
                let mut stdout = std::io::stdout().lock();
                if stdout.write_all(out.report.as_bytes()).is_err() {
                    return ExitCode::from(2);
                }
            }
            eprintln!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
