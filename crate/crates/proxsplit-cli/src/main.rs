use std::process::ExitCode;

use clap::Parser;

use proxsplit_cli::commands::{execute, Cli, EXIT_INVALID};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("proxsplit: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
