//! Command-line front end for `rbm-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::config::{Cli, Params, RunConfig, OUTPUT_DIR_ENV};
use crate::error::{CliError, CliResult};

/// Parses `args` (program name first) into a `RunConfig`.
pub fn parse_config<I, T>(args: I, env_output_dir: Option<PathBuf>) -> CliResult<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    cli.resolve(env_output_dir)
}

/// Runs one configuration and writes its results and manifest.
pub fn run(config: &RunConfig) -> CliResult<Vec<String>> {
    let outputs = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?
            .install(|| commands::dispatch(&config.params))?,
        None => commands::dispatch(&config.params)?,
    };
    output::write_all(config, &outputs)?;
    if let Params::Verify(_) = config.params {
        let failed = verify::failures(&outputs);
        if failed > 0 {
            for line in &outputs.summary {
                println!("{line}");
            }
            return Err(CliError::VerifyFailed {
                failed,
                total: outputs.tables[0].rows.len(),
            });
        }
    }
    Ok(outputs.summary)
}

/// Full entry point: returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    // help and version go to stdout with status 0
    if let Err(e) = Cli::try_parse_from(&args) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            print!("{e}");
            return 0;
        }
    }
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let result = parse_config(args, env_dir).and_then(|c| run(&c));
    match result {
        Ok(summary) => {
            for line in summary {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("rbm: {e}");
            e.exit_code()
        }
    }
}
