mod args;
mod remote;
mod run;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use run::Failure;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();

    let outcome = match &cli.command {
        Command::Score(c) => run::score(c),
        Command::Select(c) => run::select(c),
        Command::Prompts(c) => run::prompts(c),
        Command::Eval(c) => run::eval(c),
        Command::Serve(c) => remote::serve(c),
        Command::Remote(c) => remote::remote(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            match f {
                Failure::Usage(_) => ExitCode::from(2),
                Failure::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
