use std::process::ExitCode;

use clap::Parser;

use treeplan_cli::args::{run, Cli};
use treeplan_cli::init_threads;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
