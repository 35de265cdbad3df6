use std::fmt::Write as _;

use serde_json::json;
use wavemetro::acquisition::{
    interleave_plan, interleave_reconstruct, interleave_reconstruct_complex, iq_jitter_compensate, iq_jitter_estimate,
    InterleavePlan, ReconstructMode,
};
use wavemetro::{ExactRate, RealWaveform};

use super::{fmt_rate, json_bytes};
use crate::args::{InterleaveArgs, JitterCompArgs, ModeArg};
use crate::error::{CliError, CliResult};
use crate::files::{format_complex, format_real, WaveformFile};
use crate::manifest::Run;

/// Plans list their positions only up to this many entries; larger plans
/// are regenerated from (p, q, L).
pub const PLAN_POSITIONS_LIMIT: u64 = 10_000;

fn plan_json(plan: &InterleavePlan) -> serde_json::Value {
    let r = plan.ratio();
    let mut doc = json!({
        "p": r.p(),
        "q": r.q(),
        "pattern_len": plan.pattern_len(),
        "points_per_symbol": r.points_per_symbol(),
        "required_samples": plan.required_samples(),
        "covered_repetitions": plan.covered_repetitions(),
        "effective_rate_hz": fmt_rate(plan.effective_rate()),
        "out_dt_s": format!("{}/{}", plan.out_dt().numer(), plan.out_dt().denom()),
        "degenerate": plan.is_degenerate(),
    });
    if plan.required_samples() <= PLAN_POSITIONS_LIMIT {
        doc["positions"] = json!(plan.positions());
    } else {
        doc["positions_omitted"] = json!(true);
    }
    doc
}

pub(crate) fn interleave(a: &InterleaveArgs, run: &mut Run) -> CliResult<()> {
    let plan = interleave_plan(a.fs.0, a.fsym.0, a.pattern_len)?;
    let r = plan.ratio();
    println!(
        "p={} q={} required_samples={} effective_rate {}",
        r.p(),
        r.q(),
        plan.required_samples(),
        fmt_rate(plan.effective_rate())
    );
    if plan.is_degenerate() {
        eprintln!("warning: q = 1, every acquisition lands on the same symbol phase grid");
    }
    if run.has_out() {
        run.write("plan.json", &json_bytes(&plan_json(&plan)))?;
    }
    if a.plan_only {
        return Ok(());
    }
    run.require_out("interleave")?;
    let input = a.input.as_ref().expect("clap requires --input without --plan-only");
    let name = input.display().to_string();
    let mode = match a.mode {
        ModeArg::Strict => ReconstructMode::Strict,
        ModeArg::Average => ReconstructMode::Average,
    };
    let out_rate = plan.effective_rate();
    let check_rate = |fs: ExactRate| -> CliResult<()> {
        if fs != a.fs.0 {
            return Err(CliError::invalid(format!("{name}: sampled at {fs} Hz, plan expects {} Hz", a.fs.0)));
        }
        Ok(())
    };
    let text = match run.read_waveform(input)? {
        WaveformFile::Real { wave, fs } => {
            check_rate(fs)?;
            format_real(&interleave_reconstruct(wave.samples(), &plan, mode)?, out_rate)
        }
        WaveformFile::Complex { wave, fs, .. } => {
            check_rate(fs)?;
            format_complex(&interleave_reconstruct_complex(wave.samples(), &plan, mode)?, out_rate, None)
        }
        WaveformFile::Spectrum { .. } => {
            return Err(CliError::invalid(format!("{name}: interleaving needs a time record")));
        }
    };
    run.write("reconstructed.csv", text.as_bytes())?;
    Ok(())
}

pub(crate) fn jitter_comp(a: &JitterCompArgs, run: &mut Run) -> CliResult<()> {
    run.require_out("jitter-comp")?;
    if a.signal.len() != a.reference.len() {
        return Err(CliError::invalid(format!(
            "{} signal records but {} reference records",
            a.signal.len(),
            a.reference.len()
        )));
    }
    let mut load = |paths: &[std::path::PathBuf]| -> CliResult<(Vec<RealWaveform>, ExactRate)> {
        let mut rate = None;
        let mut out = Vec::with_capacity(paths.len());
        for p in paths {
            let name = p.display().to_string();
            let (w, fs) = run.read_waveform(p)?.into_real(&name)?;
            match rate {
                Some(r) if r != fs => return Err(CliError::invalid(format!("{name}: rate {fs} differs from {r}"))),
                _ => rate = Some(fs),
            }
            out.push(w);
        }
        Ok((out, rate.expect("clap requires at least one record")))
    };
    let (signal, fs) = load(&a.signal)?;
    let (reference, _) = load(&a.reference)?;
    let est = iq_jitter_estimate(&reference, a.f_ref_hz)?;
    let compensated = iq_jitter_compensate(&signal, &est)?;
    run.write("compensated.csv", format_real(&compensated, fs).as_bytes())?;

    let mut csv = String::from("record,offset_s,ambiguous,ref_amplitude\n");
    for (i, dt) in est.per_record_dt.iter().enumerate() {
        let _ = writeln!(csv, "{i},{dt:e},{},{:e}", est.ambiguous[i] as u8, est.amplitudes[i]);
    }
    run.write("jitter.csv", csv.as_bytes())?;
    let n = est.per_record_dt.len() as f64;
    let rms = (est.per_record_dt.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let ambiguous = est.ambiguous.iter().filter(|&&x| x).count();
    println!(
        "records={} offset_rms_s={rms:e} ambiguous={ambiguous} ambiguity_range_s={:e}",
        est.per_record_dt.len(),
        est.ambiguity_range
    );
    if ambiguous > 0 {
        eprintln!("warning: {ambiguous} records exceed a quarter reference period and may be wrapped");
    }
    Ok(())
}
