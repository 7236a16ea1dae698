//! Command-line front end: corpus handling, experiment orchestration, and
//! report and figure emission.

pub mod atomic;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod frame;
pub mod mitigation;
pub mod plot;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use crate::commands::{Cli, Command, Globals};

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .try_init();
}

/// Finds `--config FILE` or `--config=FILE` anywhere in the arguments.
fn config_path(args: &[String]) -> Option<String> {
    args.iter().enumerate().find_map(|(k, a)| {
        if a == "--config" {
            args.get(k + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_owned)
        }
    })
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit status: 0 on success, 1 on runtime errors or, with
/// `--strict`, failed samples, and 2 on usage errors.
pub fn run(args: Vec<String>) -> i32 {
    let args = match config_path(&args) {
        Some(path) => {
            let entries = match config::read_config(std::path::Path::new(&path)) {
                Ok(e) => e,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return 2;
                }
            };
            match args.iter().position(|a| Command::NAMES.contains(&a.as_str())) {
                Some(at) => config::merge_config(&args, at, &entries),
                None => args,
            }
        }
        None => args,
    };

    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging(cli.verbose);

    let jobs = cli.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        eprintln!("error: --jobs must be positive");
        return 2;
    }
    let globals = Globals { seed: cli.seed, jobs };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let strict = cli.strict;
    match pool.install(|| commands::execute(cli.command, globals)) {
        Ok(summary) if summary.failures > 0 => {
            eprintln!("warning: {} sample(s) failed", summary.failures);
            if strict {
                1
            } else {
                0
            }
        }
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
