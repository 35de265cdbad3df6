use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;
use wavemetro::metrics::{self, ber_from_evm, ber_from_snr, count_bit_errors, decide_symbols, snr_from_evm, EvmMode};
use wavemetro::metrics::{EvmNormalization, EvmResult};
use wavemetro::{Modulation, SymbolFrame};

use super::json_bytes;
use crate::args::{BerCountArgs, BerPredictArgs, BerSweepArgs, EvmArgs, Mod};
use crate::error::{CliError, CliResult};
use crate::manifest::Run;

fn load_symbols(run: &mut Run, path: &Path, flag: Option<Mod>) -> CliResult<(Vec<num_complex::Complex64>, Option<Modulation>)> {
    let name = path.display().to_string();
    let (w, _, declared) = run.read_waveform(path)?.into_complex(&name)?;
    if let (Some(Mod(f)), Some(d)) = (flag, declared) {
        if f != d {
            return Err(CliError::invalid(format!("{name} declares {} but --mod is {}", d.name(), f.name())));
        }
    }
    Ok((w.into_samples(), flag.map(|m| m.0).or(declared)))
}

fn pick_modulation(candidates: &[Option<Modulation>]) -> CliResult<Modulation> {
    candidates
        .iter()
        .flatten()
        .copied()
        .next()
        .ok_or_else(|| CliError::invalid("modulation unknown: pass --mod or use symbol files with a modulation header"))
}

pub(crate) fn evm(a: &EvmArgs, run: &mut Run) -> CliResult<()> {
    let (rx, rx_mod) = load_symbols(run, &a.rx, a.modulation)?;
    let reference = match &a.reference {
        Some(p) => Some(load_symbols(run, p, a.modulation)?),
        None => None,
    };
    let m = pick_modulation(&[rx_mod, reference.as_ref().and_then(|r| r.1)])?;
    let rx = SymbolFrame::new(rx, m, None)?;
    let reference = reference.map(|(s, _)| SymbolFrame::new(s, m, None)).transpose()?;
    let norm: EvmNormalization = a.norm.into();
    let mode: EvmMode = a.mode.into();
    let e = metrics::evm(&rx, reference.as_ref(), norm, mode)?;
    let snr = snr_from_evm(&e);
    let ber = predicted(&e, m)?;
    if run.has_out() {
        let doc = json!({
            "modulation": m.name(),
            "normalization": a.norm,
            "mode": a.mode,
            "n_symbols": e.n_symbols,
            "evm_rms": e.evm_rms,
            "evm_percent": e.evm_percent,
            "snr_linear": snr.linear,
            "snr_db": snr.db,
            "snr_bias_warning": snr.bias_warning,
            "ber_from_evm": ber,
        });
        run.write("evm.json", &json_bytes(&doc))?;
    }
    println!(
        "evm_rms={} evm_percent={:.4} snr_db={:.4} ber_from_evm={:e}",
        e.evm_rms, e.evm_percent, snr.db, ber.unwrap_or(f64::NAN)
    );
    if snr.bias_warning {
        eprintln!("warning: decision-directed EVM is biased low at this SNR");
    }
    Ok(())
}

/// BER prediction, or `None` for peak-normalized EVM where SNR = 1/EVM^2 does
/// not hold.
fn predicted(e: &EvmResult, m: Modulation) -> CliResult<Option<f64>> {
    if e.normalization != EvmNormalization::Average {
        return Ok(None);
    }
    Ok(Some(ber_from_evm(e, m)?.ber))
}

pub(crate) fn ber_predict(a: &BerPredictArgs, run: &mut Run) -> CliResult<()> {
    let m = a.modulation.0;
    let snr = match (a.snr_db, a.evm) {
        (Some(db), _) => 10f64.powf(db / 10.0),
        (None, Some(evm)) if evm.is_finite() && evm > 0.0 => 1.0 / (evm * evm),
        (None, Some(evm)) => return Err(CliError::invalid(format!("EVM must be positive, got {evm}"))),
        (None, None) => unreachable!("clap requires --snr-db or --evm"),
    };
    let ber = ber_from_snr(snr, m)?;
    if run.has_out() {
        let doc = json!({
            "modulation": m.name(),
            "snr_linear": snr,
            "snr_db": 10.0 * snr.log10(),
            "ber": ber,
        });
        run.write("ber_predict.json", &json_bytes(&doc))?;
    }
    println!("ber={ber:e} snr_db={:.4} modulation={}", 10.0 * snr.log10(), m.name());
    Ok(())
}

pub(crate) fn ber_count(a: &BerCountArgs, run: &mut Run) -> CliResult<()> {
    let (rx, rx_mod) = load_symbols(run, &a.rx, a.modulation)?;
    let (tx, tx_mod) = load_symbols(run, &a.tx, a.modulation)?;
    let m = pick_modulation(&[rx_mod, tx_mod])?;
    if rx.len() != tx.len() {
        return Err(CliError::invalid(format!("{} received symbols but {} reference symbols", rx.len(), tx.len())));
    }
    let (_, rx_bits) = decide_symbols(&SymbolFrame::new(rx, m, None)?);
    let (_, tx_bits) = decide_symbols(&SymbolFrame::new(tx, m, None)?);
    let est = count_bit_errors(&rx_bits, &tx_bits)?;
    let (lo, hi) = est.wilson_ci95.unwrap_or((f64::NAN, f64::NAN));
    if run.has_out() {
        let doc = json!({
            "modulation": m.name(),
            "ber": est.ber,
            "errors": est.errors,
            "n_bits": est.n_bits,
            "wilson_ci95": [lo, hi],
        });
        run.write("ber_count.json", &json_bytes(&doc))?;
    }
    println!(
        "ber={:e} errors={} bits={} ci95=[{lo:e}, {hi:e}]",
        est.ber,
        est.errors.unwrap_or(0),
        est.n_bits.unwrap_or(0)
    );
    Ok(())
}

pub(crate) fn ber_sweep(a: &BerSweepArgs, run: &mut Run) -> CliResult<()> {
    let m = a.modulation.0;
    let points = metrics::ber_sweep(m, &a.snr_db, a.symbols, a.seed)?;
    let mut csv = String::from("snr_db,evm_rms,ber_counted,ber_from_evm,ci_lo,ci_hi\n");
    for p in &points {
        let _ = writeln!(
            csv,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            p.snr_db, p.evm_rms, p.ber_counted, p.ber_from_evm, p.ci_lo, p.ci_hi
        );
    }
    if run.has_out() {
        run.write("sweep.csv", csv.as_bytes())?;
    }
    print!("{csv}");
    Ok(())
}
