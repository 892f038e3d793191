use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use furstenberg_cli::run::{configure_threads, write_atomically};
use furstenberg_cli::{run, Cli, CliError};

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads(std::env::var("FE_THREADS").ok().as_deref())?;
    let start = Instant::now();
    let report = run(&cli.command)?;
    let bytes = report.emit(cli.format)?;
    match &cli.out {
        Some(path) => write_atomically(path, &bytes)?,
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                message: e.to_string(),
            })?,
    }
    if cli.timing {
        eprintln!("elapsed_seconds={:.6}", start.elapsed().as_secs_f64());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({ "error": e.payload() });
            eprintln!("{payload}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
