use std::process::ExitCode;

use clap::Parser;
use kinscape_cli::{init_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = init_threads().and_then(|_| run(&cli, &mut std::io::stdout().lock()));
    match status {
        Ok(s) => ExitCode::from(s.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
