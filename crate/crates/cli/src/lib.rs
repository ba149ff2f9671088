//! Driver for the `ptflab` binary: argument parsing, commands, check
//! batteries and report encoding.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod suites;

use std::collections::hash_map::RandomState;
use std::hash::{BuildHasher, Hasher};
use std::time::{SystemTime, UNIX_EPOCH};

use args::{Args, Command, Format};
use error::CliError;
use report::{write_json, write_rows_csv, Bundle, Summary};
use suites::{run_suite, SuiteContext};

/// Bytes to emit and the process exit code they imply.
#[derive(Debug, Clone)]
pub struct Output {
    pub bytes: Vec<u8>,
    pub exit_code: u8,
}

impl Output {
    fn ok(bytes: Vec<u8>) -> Self {
        Self { bytes, exit_code: 0 }
    }
}

/// Whether the command may consume randomness (and so reports its seed).
pub fn is_randomized(args: &Args) -> bool {
    args.command != Command::Gl
}

/// `--seed` (or `PTFLAB_SEED`), else a fresh seed from process entropy.
pub fn resolve_seed(args: &Args) -> u64 {
    args.seed.unwrap_or_else(|| {
        let mut h = RandomState::new().build_hasher();
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
        h.write_u128(nanos);
        h.write_u32(std::process::id());
        h.finish()
    })
}

pub fn run(args: &Args, seed: u64) -> Result<Output, CliError> {
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    match args.command {
        Command::Analyze => {
            let report = commands::analyze(args, seed)?;
            let mut bytes = Vec::new();
            match args.format {
                Format::Json => write_json(&report, &mut bytes)?,
                Format::Csv => report.write_csv(&mut bytes)?,
            }
            Ok(Output {
                bytes,
                exit_code: report.summary.exit_code(),
            })
        }
        Command::Random => Ok(Output::ok(commands::random(args, seed)?)),
        Command::Tree => Ok(Output::ok(commands::tree(args, seed)?)),
        Command::Trace => Ok(Output::ok(commands::trace(args, seed)?)),
        Command::Gl => Ok(Output::ok(commands::gl(args)?)),
        Command::Suite => {
            let name = args
                .suite
                .ok_or_else(|| CliError::Usage("suite needs --suite NAME".into()))?;
            if args.samples == 0 {
                return Err(CliError::Infeasible("suites need --samples > 0".into()));
            }
            let ctx = SuiteContext {
                seed,
                samples: args.samples,
                workers: args.workers,
                regularity: commands::regularity_config(args)?,
                c1: args.c1,
                c2: args.c2,
            };
            let rows = run_suite(name, &ctx)?;
            let summary = Summary::of(&rows);
            let exit_code = summary.exit_code();
            let mut bytes = Vec::new();
            match args.format {
                Format::Json => write_json(
                    &Bundle {
                        suite: name.as_str().to_string(),
                        seed,
                        samples: args.samples,
                        workers: args.workers,
                        rows,
                        summary,
                    },
                    &mut bytes,
                )?,
                Format::Csv => write_rows_csv(&rows, &mut bytes)?,
            }
            Ok(Output { bytes, exit_code })
        }
    }
}
