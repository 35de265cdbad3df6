//! Command-line pipelines over the `wavemetro` analysis library.
//!
//! Every run that writes files leaves a `manifest.json` in its output
//! directory; `wavemetro replay --manifest <file> --out <dir>` re-executes it
//! and checks that every output is byte-identical.

pub mod args;
mod commands;
pub mod error;
pub mod files;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use args::Command;
pub use error::{CliError, CliResult};
pub use manifest::{RunManifest, Run};

#[derive(Debug, Parser)]
#[command(name = "wavemetro", version, about = "Waveform metrology pipelines", propagate_version = true)]
pub struct Cli {
    /// Output directory for files and the run manifest
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Allow writing into a non-empty output directory
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads for parallel stages; results do not depend on it
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Report failures as JSON on standard error
    #[arg(long, global = true)]
    pub json_errors: bool,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that control where and how a run executes but not what it
/// computes; they are left out of the recorded argument vector.
fn run_flags(argv: &[String]) -> Vec<String> {
    let mut kept = Vec::new();
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
            continue;
        }
        match a.as_str() {
            "--out" | "--threads" => skip = true,
            "--force" | "--json-errors" => {}
            s if s.starts_with("--out=") || s.starts_with("--threads=") => {}
            _ => kept.push(a.clone()),
        }
    }
    kept
}

/// Parses `argv` (without the program name), runs it and returns the exit
/// code. Diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = argv
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let json_errors = argv.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(std::iter::once("wavemetro".to_string()).chain(argv.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            if json_errors && code != 0 {
                report(&CliError::invalid(e.to_string().trim().to_string()), true);
            } else {
                let _ = e.print();
            }
            return code;
        }
    };
    let base = std::env::current_dir().unwrap_or_else(|_| PathBuf::from("."));
    match execute(&cli, run_flags(&argv), base) {
        Ok(()) => 0,
        Err(e) => {
            report(&e, cli.json_errors);
            e.exit_code()
        }
    }
}

fn report(e: &CliError, json: bool) {
    if json {
        let doc = serde_json::json!({
            "error": e.kind(),
            "exit_code": e.exit_code(),
            "message": e.to_string(),
        });
        eprintln!("{doc}");
    } else {
        eprintln!("error: {e}");
    }
}

/// Runs a parsed command. `argv` is the normalized argument vector stored in
/// the manifest and `base` resolves relative input paths.
pub fn execute(cli: &Cli, argv: Vec<String>, base: PathBuf) -> CliResult<()> {
    match cli.threads {
        Some(0) => Err(CliError::invalid("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::invalid(format!("cannot start {n} threads: {e}")))?
            .install(|| dispatch(cli, argv, base)),
        None => dispatch(cli, argv, base),
    }
}

fn dispatch(cli: &Cli, argv: Vec<String>, base: PathBuf) -> CliResult<()> {
    if let Command::Replay(args) = &cli.command {
        return commands::replay(args, cli.out.clone(), cli.force, cli.threads);
    }
    let mut run = Run::new(base, cli.out.clone(), cli.force)?;
    commands::dispatch(&cli.command, &mut run)?;
    let params = serde_json::to_value(&cli.command).map_err(|e| CliError::invalid(e.to_string()))?;
    run.finish(cli.command.name(), argv, params, cli.command.seed())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_flags_are_stripped() {
        let argv: Vec<String> = ["ber-sweep", "--out", "d", "--seed", "7", "--force", "--threads=3", "--json-errors"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(run_flags(&argv), vec!["ber-sweep", "--seed", "7"]);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
