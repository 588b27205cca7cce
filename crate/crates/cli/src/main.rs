use std::process::ExitCode;

use clap::Parser;
use nlswave_cli::{args::Cli, config, execute};

fn main() -> ExitCode {
    let argv = match config::expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    // clap prints help/version itself and exits 0, or exits 2 on bad flags
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

