use std::process::ExitCode;

use clap::Parser;
use pnlm_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let json_errors = std::env::args_os().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if json_errors => {
            let err = CliError::Usage(e.render().to_string().trim().to_owned());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    let json_errors = cli.json_errors;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if json_errors {
                eprintln!("{}", err.to_json());
            } else {
                eprintln!("error: {err}");
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
