use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use wvalab::cli::{execute, Cli, CliError};

fn write_output(rendered: &wvalab::cli::Rendered) -> Result<(), CliError> {
    match &rendered.out {
        Some(path) => std::fs::write(path, &rendered.text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(rendered.text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli).and_then(|r| write_output(&r)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wvalab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
