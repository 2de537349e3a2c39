use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use searchplan::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let outcome = run(&Cli::parse());
    let mut out = std::io::stdout().lock();
    if outcome.code == 0 {
        let _ = writeln!(out, "{}", outcome.message);
    } else {
        eprintln!("{}", outcome.message);
    }
    for path in &outcome.artifacts {
        let _ = writeln!(out, "wrote {}", path.display());
    }
    ExitCode::from(outcome.code)
}
