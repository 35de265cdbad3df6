mod acquire;
mod analysis;
mod metrics;
mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use wavemetro::ExactRate;

use crate::args::{Command, ReplayArgs, SynthCommand};
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_hex, Run, RunManifest, MANIFEST_NAME, TOOL_VERSION};
use crate::Cli;

pub(crate) fn dispatch(command: &Command, run: &mut Run) -> CliResult<()> {
    match command {
        Command::Synth(SynthCommand::Qam(a)) => synth::qam(a, run),
        Command::Synth(SynthCommand::Pair(a)) => synth::pair(a, run),
        Command::Synth(SynthCommand::Jitter(a)) => synth::jitter(a, run),
        Command::Prbs(a) => synth::prbs(a, run),
        Command::Cmrr(a) => analysis::cmrr(a, run),
        Command::Wavesplit(a) => analysis::wavesplit(a, run),
        Command::Interleave(a) => acquire::interleave(a, run),
        Command::JitterComp(a) => acquire::jitter_comp(a, run),
        Command::Evm(a) => metrics::evm(a, run),
        Command::BerPredict(a) => metrics::ber_predict(a, run),
        Command::BerCount(a) => metrics::ber_count(a, run),
        Command::BerSweep(a) => metrics::ber_sweep(a, run),
        Command::Replay(_) => Err(CliError::invalid("replay cannot be nested")),
    }
}

/// Integer rates print without a denominator.
pub(crate) fn fmt_rate(r: ExactRate) -> String {
    if r.denom() == 1 {
        r.numer().to_string()
    } else {
        r.to_string()
    }
}

pub(crate) fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s.into_bytes()
}

pub(crate) fn replay(args: &ReplayArgs, out: Option<PathBuf>, force: bool, threads: Option<usize>) -> CliResult<()> {
    let manifest = RunManifest::load(&args.manifest)?;
    if manifest.version != TOOL_VERSION {
        return Err(CliError::invalid(format!(
            "manifest was written by version {}, this is {TOOL_VERSION}",
            manifest.version
        )));
    }
    let out = out.ok_or_else(|| CliError::invalid("replay writes files; pass --out <DIR>"))?;
    let base = PathBuf::from(&manifest.cwd);
    for input in &manifest.inputs {
        let path = base.join(&input.path);
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::invalid(format!("input {} changed since the recorded run", input.path)));
        }
    }

    let mut argv = vec!["wavemetro".to_string()];
    argv.extend(manifest.argv.iter().cloned());
    argv.push("--out".into());
    argv.push(out.display().to_string());
    if force {
        argv.push("--force".into());
    }
    if let Some(n) = threads {
        argv.push(format!("--threads={n}"));
    }
    let cli = Cli::try_parse_from(&argv)
        .map_err(|e| CliError::invalid(format!("manifest arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::invalid("replay cannot be nested"));
    }
    crate::execute(&cli, manifest.argv.clone(), base)?;

    let fresh = RunManifest::load(&out.join(MANIFEST_NAME))?;
    let mismatched: Vec<&str> = manifest
        .outputs
        .iter()
        .filter(|o| !fresh.outputs.contains(o))
        .map(|o| o.path.as_str())
        .collect();
    if !mismatched.is_empty() || fresh.outputs.len() != manifest.outputs.len() {
        return Err(CliError::Numerical(format!(
            "replay differs from the recorded run: {}",
            if mismatched.is_empty() { "output set changed".to_string() } else { mismatched.join(", ") }
        )));
    }
    println!("replay identical: {} outputs match {}", fresh.outputs.len(), display(&args.manifest));
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
