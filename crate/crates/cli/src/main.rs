use std::process::ExitCode;

use clap::{Parser, Subcommand};

use emergence_cli::{config_from_args, registry_listing, run_experiment};

#[derive(Parser)]
#[command(name = "emergence", version, about = "Run registered emergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// run --experiment <name> [--config file] [--<key> <value>]... --seed <u64> --out <dir>
    Run {
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "FLAGS")]
        args: Vec<String>,
    },
    /// Print the experiment registry.
    List,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            print!("{}", registry_listing());
            ExitCode::SUCCESS
        }
        Command::Run { args } => match config_from_args(&args).and_then(|cfg| run_experiment(&cfg)) {
            Ok(paths) => {
                for p in paths {
                    println!("{}", p.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
