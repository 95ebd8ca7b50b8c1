use std::process::ExitCode;

use clap::Parser;
use fadetrack_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            ExitCode::from(outcome.exit_code)
        }
        Err(e) => {
            eprintln!("fadetrack: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
