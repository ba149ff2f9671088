use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use ptflab_cli::args::Args;
use ptflab_cli::{is_randomized, resolve_seed, run};

fn main() -> ExitCode {
    let args = Args::parse();
    let seed = resolve_seed(&args);
    if is_randomized(&args) {
        eprintln!("seed: {seed}");
    }
    let output = match run(&args, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let written = match &args.out {
        Some(path) => std::fs::write(path, &output.bytes),
        None => std::io::stdout().lock().write_all(&output.bytes),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(output.exit_code)
}
