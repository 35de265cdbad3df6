use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use wavemetro::synth::{
    add_awgn, impulse_train, photodiode_response, prbs_generate, pulse_shape, record_seed, seeded_rng,
    synth_balanced_pair, MismatchSpec, PrbsSpec, PulseConfig,
};
use wavemetro::{map_symbols, ComplexWaveform, ExactRate, RealWaveform};

use crate::args::{PrbsArgs, SynthJitterArgs, SynthPairArgs, SynthQamArgs};
use crate::error::{CliError, CliResult};
use crate::files::{format_complex, format_real};
use crate::manifest::Run;

pub(crate) fn qam(a: &SynthQamArgs, run: &mut Run) -> CliResult<()> {
    run.require_out("synth qam")?;
    let m = a.modulation.0;
    let spec = PrbsSpec::with_degree(a.prbs)?;
    let n = a.symbols.unwrap_or(spec.period() as usize);
    if n == 0 {
        return Err(CliError::invalid("--symbols must be positive"));
    }
    let bits = prbs_generate(&spec, n * m.bits_per_symbol())?;
    let frame = map_symbols(&bits, m)?;
    let fsym = a.fsym.0;
    let tx = ComplexWaveform::new(frame.symbols().to_vec(), fsym.recip_f64(), 0.0)?;
    run.write("tx_symbols.csv", format_complex(&tx, fsym, Some(m)).as_bytes())?;

    let noise_seed = |stream: u64| a.seed.map(|s| record_seed(s, stream));
    if let (Some(snr), Some(seed)) = (a.snr_db, noise_seed(0)) {
        let rx = add_awgn(&frame, snr, seed)?;
        let w = ComplexWaveform::new(rx.symbols().to_vec(), fsym.recip_f64(), 0.0)?;
        run.write("rx_symbols.csv", format_complex(&w, fsym, Some(m)).as_bytes())?;
    }
    if let Some(sps) = a.sps {
        let config = PulseConfig {
            rolloff: a.rolloff,
            span_symbols: a.span,
            samples_per_symbol: sps.0,
            symbol_rate: fsym,
        };
        let mut shaped = pulse_shape(&frame, &config, None)?;
        if let (Some(snr), Some(seed)) = (a.snr_db, noise_seed(1)) {
            shaped = add_awgn(&shaped, snr, seed)?;
        }
        let fs = ExactRate::from_ratio(sps.0.ratio() * fsym.ratio())?;
        run.write("waveform.csv", format_complex(&shaped, fs, None).as_bytes())?;
        println!("waveform: {} samples at {} Sa/s", shaped.len(), super::fmt_rate(fs));
    }
    println!("symbols: {n} {} from PRBS{}", m.name(), a.prbs);
    Ok(())
}

pub(crate) fn pair(a: &SynthPairArgs, run: &mut Run) -> CliResult<()> {
    run.require_out("synth pair")?;
    let fs = a.fs.0;
    let dt = fs.recip_f64();
    let stim = impulse_train(a.samples, dt, &[a.impulse_at])?;
    let h = photodiode_response(a.bandwidth_hz, dt, a.response_len)?;
    let mismatch = MismatchSpec {
        gain: a.gain,
        delay: a.delay_s,
        ripple_amp: a.ripple_amp,
        ripple_period_hz: a.ripple_period_hz,
    };
    let (vp, vn) = synth_balanced_pair(&stim, &h, &mismatch)?;
    run.write("vp.csv", format_real(&vp, fs).as_bytes())?;
    run.write("vn.csv", format_real(&vn, fs).as_bytes())?;
    println!("pair: {} samples, gain {} delay {:e} s ripple {}", a.samples, a.gain, a.delay_s, a.ripple_amp);
    Ok(())
}

pub(crate) fn jitter(a: &SynthJitterArgs, run: &mut Run) -> CliResult<()> {
    run.require_out("synth jitter")?;
    if a.records == 0 || a.samples == 0 {
        return Err(CliError::invalid("--records and --samples must be positive"));
    }
    if !(a.jitter_s.is_finite() && a.jitter_s >= 0.0) {
        return Err(CliError::invalid("--jitter-s must be a non-negative time"));
    }
    let fs = a.fs.0;
    let dt = fs.recip_f64();
    let mut rng = seeded_rng(a.seed);
    let offsets: Vec<f64> = (0..a.records)
        .map(|_| if a.jitter_s > 0.0 { rng.random_range(-a.jitter_s..=a.jitter_s) } else { 0.0 })
        .collect();
    let tone = |f: f64, delay: f64, phase: f64| -> CliResult<RealWaveform> {
        let x = (0..a.samples)
            .map(|k| (2.0 * PI * f * (k as f64 * dt - delay) + phase).cos())
            .collect();
        Ok(RealWaveform::new(x, dt, 0.0)?)
    };
    let mut truth = String::from("record,offset_s\n");
    for (i, &d) in offsets.iter().enumerate() {
        run.write(&format!("signal/rec_{i:04}.csv"), format_real(&tone(a.f_signal_hz, d, 0.3)?, fs).as_bytes())?;
        run.write(&format!("reference/rec_{i:04}.csv"), format_real(&tone(a.f_ref_hz, d, -1.1)?, fs).as_bytes())?;
        let _ = writeln!(truth, "{i},{d:e}");
    }
    run.write("offsets.csv", truth.as_bytes())?;
    println!("jitter ensemble: {} records of {} samples", a.records, a.samples);
    Ok(())
}

pub(crate) fn prbs(a: &PrbsArgs, run: &mut Run) -> CliResult<()> {
    let spec = match a.init {
        Some(seed) => PrbsSpec::new(a.degree, seed)?,
        None => PrbsSpec::with_degree(a.degree)?,
    };
    let n = a.bits.unwrap_or(spec.period() as usize);
    let bits = prbs_generate(&spec, n)?;
    let ones = bits.iter().filter(|&&b| b == 1).count();
    if run.has_out() {
        let mut text = format!("# degree={}\n# init={}\nindex,bit\n", spec.degree(), spec.seed());
        for (i, b) in bits.iter().enumerate() {
            let _ = writeln!(text, "{i},{b}");
        }
        run.write("prbs.csv", text.as_bytes())?;
    }
    println!("PRBS{} period={} bits={} ones={} zeros={}", spec.degree(), spec.period(), n, ones, n - ones);
    Ok(())
}
