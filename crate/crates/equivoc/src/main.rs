use std::process::ExitCode;

use clap::Parser;
use equivoc::cli::{configs_from_cli, run_all, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configs_from_cli(cli) {
        Ok((configs, jobs)) => ExitCode::from(run_all(&configs, jobs)),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
