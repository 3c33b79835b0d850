use std::process::ExitCode;

use clap::Parser;
use optiflock_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // one line: the chain joined with ": "
            let msg: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("optiflock: error: {}", msg.join(": ").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
