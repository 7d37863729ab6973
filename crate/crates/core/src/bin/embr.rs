use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use embr_core::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(outcome) => outcome,
        Err(err) => {
            let category = err.category();
            eprintln!("error[{}]: {err}", category.as_str());
            return ExitCode::from(category.exit_code() as u8);
        }
    };
    let written = match &cli.out {
        Some(path) => {
            std::fs::write(path, &outcome.output).map_err(|e| format!("{}: {e}", path.display()))
        }
        None => std::io::stdout()
            .write_all(outcome.output.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        eprintln!("error[usage]: {msg}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.exit_code as u8)
}
