mod args;
mod error;
mod report;
mod run;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command, SimulateCommand};
use report::{canonical, RunReport};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let start = Instant::now();
    let (name, outcome) = match &cli.command {
        Command::Test(a) => ("test", run::test(a)),
        Command::Perturb(a) => ("perturb", run::perturb(a)),
        Command::Simulate(SimulateCommand::Power(a)) => ("simulate-power", run::power(a)),
        Command::Simulate(SimulateCommand::ValidateLimiting(a)) => ("simulate-limiting", run::limiting(a)),
    };
    match outcome {
        Ok((config_hash, results)) => {
            let report = RunReport {
                command: std::env::args().skip(1).collect(),
                subcommand: name.to_string(),
                config_hash,
                version: env!("CARGO_PKG_VERSION").to_string(),
                results,
                wall_time_seconds: start.elapsed().as_secs_f64(),
            };
            let value = canonical(serde_json::to_value(&report).expect("report is plain data"));
            println!("{}", serde_json::to_string_pretty(&value).expect("report is plain data"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
