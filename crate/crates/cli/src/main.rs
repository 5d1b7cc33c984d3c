use std::process::ExitCode;

use clap::Parser;

use traj_cli::{run, Cli};

// Exit codes: 0 success, 1 domain/validation error, 2 I/O or usage
// error (clap reports usage errors with 2 itself).
fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
