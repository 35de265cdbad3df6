use std::fmt::Write as _;

use serde::Deserialize;
use serde_json::json;
use wavemetro::cmrr::{cmrr_report, Band};
use wavemetro::wavesplit::{split_waves, LineMeasurement};
use wavemetro::{forward_transform, ExactRate, Spectrum};

use super::json_bytes;
use crate::args::{CmrrArgs, WavesplitArgs};
use crate::error::{CliError, CliResult};
use crate::files::{format_spectrum, WaveformFile};
use crate::manifest::Run;

pub(crate) fn cmrr(a: &CmrrArgs, run: &mut Run) -> CliResult<()> {
    let vp_name = a.vp.display().to_string();
    let vn_name = a.vn.display().to_string();
    let (vp, fs_p) = run.read_waveform(&a.vp)?.into_real(&vp_name)?;
    let (vn, fs_n) = run.read_waveform(&a.vn)?.into_real(&vn_name)?;
    if fs_p != fs_n || vp.len() != vn.len() {
        return Err(CliError::invalid(format!(
            "grid mismatch: {vp_name} has {} samples at {fs_p} Hz, {vn_name} has {} samples at {fs_n} Hz",
            vp.len(),
            vn.len()
        )));
    }
    let band = match (a.band_lo_hz, a.band_hi_hz) {
        (Some(lo), Some(hi)) => Some(Band::new(lo, hi)?),
        _ => None,
    };
    let report = cmrr_report(&vp, &vn, band, a.tau_window_s)?;
    let s = &report.summary;
    let p = &report.params;

    if run.has_out() {
        let t = &report.trace;
        let mut csv = String::from("freq_hz,cmrr_db,rejection_db,floor_flag\n");
        for i in 0..t.len() {
            let _ = writeln!(
                csv,
                "{:e},{:e},{:e},{}",
                t.freqs[i], t.cmrr_db[i], t.rejection_db[i], t.floor_mask[i] as u8
            );
        }
        run.write("cmrr.csv", csv.as_bytes())?;
        let summary = json!({
            "alpha": p.alpha,
            "tau_s": p.tau,
            "residual": p.residual,
            "tau_at_boundary": p.at_boundary,
            "band_hz": [report.band.lo, report.band.hi],
            "min_rejection_db": s.min_rejection_db,
            "median_rejection_db": s.median_rejection_db,
            "floor_limited": s.floor_limited,
            "floor_bins": s.floor_bins,
            "excluded_bins": s.excluded_bins,
            "n_bins": s.n_bins,
            "photocurrent_ratio": s.photocurrent_ratio,
            "alpha_dc": s.alpha_dc,
            "sidedness": "single",
        });
        run.write("summary.json", &json_bytes(&summary))?;
    }
    println!(
        "alpha={} tau_s={:e} min_rejection_db={:.3} median_rejection_db={:.3} floor_limited={}{}",
        p.alpha,
        p.tau,
        s.min_rejection_db,
        s.median_rejection_db,
        s.floor_limited,
        if p.at_boundary { " (tau at search boundary)" } else { "" }
    );
    Ok(())
}

#[derive(Debug, Deserialize)]
struct Geometry {
    positions_m: Vec<f64>,
    velocity_m_per_s: f64,
}

pub(crate) fn wavesplit(a: &WavesplitArgs, run: &mut Run) -> CliResult<()> {
    let geometry_text = run.read_text(&a.geometry)?;
    let geometry: Geometry = serde_json::from_str(&geometry_text)
        .map_err(|e| CliError::invalid(format!("{}: {e}", a.geometry.display())))?;
    if geometry.positions_m.len() != a.spectra.len() {
        return Err(CliError::invalid(format!(
            "{} positions but {} spectra",
            geometry.positions_m.len(),
            a.spectra.len()
        )));
    }
    let mut spectra: Vec<Spectrum> = Vec::new();
    let mut df: Option<ExactRate> = None;
    for path in &a.spectra {
        let name = path.display().to_string();
        let (s, d) = match run.read_waveform(path)? {
            WaveformFile::Spectrum { spectrum, df } => (spectrum, df),
            WaveformFile::Real { wave, fs } => {
                let df = ExactRate::from_ratio(fs.ratio() / wave.len() as u128)?;
                (forward_transform(&wave), df)
            }
            other => {
                return Err(CliError::invalid(format!(
                    "{name}: expected a spectrum or real waveform, found kind={}",
                    other.kind()
                )))
            }
        };
        match df {
            Some(prev) if prev != d => {
                return Err(CliError::invalid(format!("{name}: df_hz {d} differs from {prev}")));
            }
            _ => df = Some(d),
        }
        spectra.push(s);
    }
    let df = df.expect("at least two spectra");
    let m = LineMeasurement::new(geometry.positions_m, spectra, geometry.velocity_m_per_s)?;
    let r = split_waves(&m, a.cond_threshold)?;
    let masked = r.singular_mask.iter().filter(|&&s| s).count();

    if run.has_out() {
        run.write("forward.csv", format_spectrum(&r.forward, df).as_bytes())?;
        run.write("reverse.csv", format_spectrum(&r.reverse, df).as_bytes())?;
        let mut csv = String::from("freq_hz,condition,masked,residual\n");
        for k in 0..r.condition.len() {
            let _ = writeln!(
                csv,
                "{:e},{:e},{},{:e}",
                r.forward.freq(k),
                r.condition[k],
                r.singular_mask[k] as u8,
                r.residual[k]
            );
        }
        run.write("bins.csv", csv.as_bytes())?;
    }
    println!("wavesplit: {} bins, {} masked", r.condition.len(), masked);
    Ok(())
}
