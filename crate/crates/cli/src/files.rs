//! Text waveform files.
//!
//! ```text
//! # kind=real
//! # fs_hz=100000000000/1
//! # t0_s=0e0
//! time_s,value
//! 0e0,1.5e-3
//! 1e-11,1.25e-3
//! ```
//!
//! `kind=complex` records carry `time_s,re,im` rows; `kind=spectrum` files
//! use `df_hz`, `f0_hz`, `record_len` and `sidedness` keys with
//! `freq_hz,re,im` rows. Rates are exact integers or `num/den` strings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use wavemetro::{ComplexWaveform, ExactRate, Modulation, RealWaveform, Sidedness, Spectrum};

use crate::error::{CliError, CliResult};

/// Axis samples may deviate from the declared grid by this relative amount.
pub const AXIS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum WaveformFile {
    Real {
        wave: RealWaveform,
        fs: ExactRate,
    },
    Complex {
        wave: ComplexWaveform,
        fs: ExactRate,
        modulation: Option<Modulation>,
    },
    Spectrum {
        spectrum: Spectrum,
        df: ExactRate,
    },
}

impl WaveformFile {
    pub fn kind(&self) -> &'static str {
        match self {
            WaveformFile::Real { .. } => "real",
            WaveformFile::Complex { .. } => "complex",
            WaveformFile::Spectrum { .. } => "spectrum",
        }
    }

    pub fn into_real(self, origin: &str) -> CliResult<(RealWaveform, ExactRate)> {
        match self {
            WaveformFile::Real { wave, fs } => Ok((wave, fs)),
            other => Err(CliError::invalid(format!("{origin}: expected a real waveform, found kind={}", other.kind()))),
        }
    }

    pub fn into_complex(self, origin: &str) -> CliResult<(ComplexWaveform, ExactRate, Option<Modulation>)> {
        match self {
            WaveformFile::Complex { wave, fs, modulation } => Ok((wave, fs, modulation)),
            other => Err(CliError::invalid(format!(
                "{origin}: expected a complex record, found kind={}",
                other.kind()
            ))),
        }
    }
}

/// Time of sample `k` on a grid starting at `t0` with rate `fs`. Writers and
/// the parser share this so written axes always verify.
pub fn axis_time(t0: f64, k: usize, fs: ExactRate) -> f64 {
    t0 + (k as u128 * fs.denom()) as f64 / fs.numer() as f64
}

fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn header(out: &mut String, pairs: &[(&str, String)]) {
    for (k, v) in pairs {
        let _ = writeln!(out, "# {k}={v}");
    }
}

pub fn format_real(wave: &RealWaveform, fs: ExactRate) -> String {
    let mut out = String::with_capacity(32 * wave.len() + 64);
    header(
        &mut out,
        &[("kind", "real".into()), ("fs_hz", fs.to_string()), ("t0_s", fmt_f64(wave.t0()))],
    );
    out.push_str("time_s,value\n");
    for (k, v) in wave.samples().iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt_f64(axis_time(wave.t0(), k, fs)), fmt_f64(*v));
    }
    out
}

pub fn format_complex(wave: &ComplexWaveform, fs: ExactRate, modulation: Option<Modulation>) -> String {
    let mut out = String::with_capacity(48 * wave.len() + 64);
    let mut keys = vec![("kind", "complex".to_string()), ("fs_hz", fs.to_string()), ("t0_s", fmt_f64(wave.t0()))];
    if let Some(m) = modulation {
        keys.push(("modulation", m.name().to_ascii_lowercase()));
    }
    header(&mut out, &keys);
    out.push_str("time_s,re,im\n");
    for (k, v) in wave.samples().iter().enumerate() {
        let t = axis_time(wave.t0(), k, fs);
        let _ = writeln!(out, "{},{},{}", fmt_f64(t), fmt_f64(v.re), fmt_f64(v.im));
    }
    out
}

pub fn format_spectrum(spectrum: &Spectrum, df: ExactRate) -> String {
    let mut out = String::with_capacity(48 * spectrum.len() + 96);
    let side = match spectrum.sidedness() {
        Sidedness::Single => "single",
        Sidedness::Double => "double",
    };
    header(
        &mut out,
        &[
            ("kind", "spectrum".into()),
            ("df_hz", df.to_string()),
            ("f0_hz", fmt_f64(spectrum.f0())),
            ("record_len", spectrum.record_len().to_string()),
            ("sidedness", side.into()),
        ],
    );
    out.push_str("freq_hz,re,im\n");
    for (k, v) in spectrum.bins().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(spectrum.freq(k)), fmt_f64(v.re), fmt_f64(v.im));
    }
    out
}

struct Header {
    keys: BTreeMap<String, (String, usize)>,
    origin: String,
}

impl Header {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.keys.get(key).map(|(v, line)| (v.as_str(), *line))
    }

    fn require(&self, key: &str) -> CliResult<(&str, usize)> {
        self.get(key)
            .ok_or_else(|| CliError::invalid(format!("{}: missing required header key '{key}'", self.origin)))
    }

    fn rate(&self, key: &str) -> CliResult<ExactRate> {
        let (v, line) = self.require(key)?;
        v.parse()
            .map_err(|e: wavemetro::Error| CliError::invalid(format!("{}:{line}: {key}: {e}", self.origin)))
    }

    fn float(&self, key: &str, default: Option<f64>) -> CliResult<f64> {
        match (self.get(key), default) {
            (None, Some(d)) => Ok(d),
            (None, None) => Err(CliError::invalid(format!("{}: missing required header key '{key}'", self.origin))),
            (Some((v, line)), _) => v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::invalid(format!("{}:{line}: {key}='{v}' is not a finite number", self.origin))),
        }
    }
}

struct Row {
    line: usize,
    fields: Vec<f64>,
}

/// Parses waveform file text. `origin` names the source in diagnostics.
pub fn parse_waveform(text: &str, origin: &str) -> CliResult<WaveformFile> {
    let mut header = Header {
        keys: BTreeMap::new(),
        origin: origin.to_string(),
    };
    let mut rows: Vec<Row> = Vec::new();
    let mut width: Option<usize> = None;
    let mut seen_column_names = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.strip_suffix('\r').unwrap_or(raw).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(comment) = content.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if !rows.is_empty() {
                    return Err(CliError::invalid(format!("{origin}:{line}: header line after data rows")));
                }
                let key = k.trim().to_string();
                if header.keys.insert(key.clone(), (v.trim().to_string(), line)).is_some() {
                    return Err(CliError::invalid(format!("{origin}:{line}: duplicate header key '{key}'")));
                }
            }
            continue;
        }
        let parts: Vec<&str> = content.split(',').map(str::trim).collect();
        if rows.is_empty() && !seen_column_names && parts[0].parse::<f64>().is_err() {
            seen_column_names = true;
            continue;
        }
        let fields = parts
            .iter()
            .enumerate()
            .map(|(col, p)| {
                p.parse::<f64>().map_err(|_| {
                    CliError::invalid(format!("{origin}:{line}: column {} value '{p}' is not a number", col + 1))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(CliError::invalid(format!(
                    "{origin}:{line}: ragged row with {} fields, expected {w}",
                    fields.len()
                )))
            }
            _ => {}
        }
        rows.push(Row { line, fields });
    }

    let (kind, _) = header.require("kind")?;
    let kind = kind.to_string();
    let expected_width = match kind.as_str() {
        "real" => 2,
        "complex" | "spectrum" => 3,
        other => return Err(CliError::invalid(format!("{origin}: unknown kind '{other}'"))),
    };
    if rows.is_empty() {
        return Err(CliError::invalid(format!("{origin}: no data rows")));
    }
    if rows[0].fields.len() != expected_width {
        return Err(CliError::invalid(format!(
            "{origin}:{}: kind={kind} rows need {expected_width} fields, found {}",
            rows[0].line,
            rows[0].fields.len()
        )));
    }

    match kind.as_str() {
        "real" | "complex" => {
            let fs = header.rate("fs_hz")?;
            let t0 = header.float("t0_s", None)?;
            let step = fs.recip_f64();
            check_axis(&rows, origin, "time", "fs_hz", step, |k| axis_time(t0, k, fs))?;
            check_finite(&rows, origin)?;
            if kind == "real" {
                let samples = rows.iter().map(|r| r.fields[1]).collect();
                let wave = RealWaveform::new(samples, step, t0)?;
                Ok(WaveformFile::Real { wave, fs })
            } else {
                let samples = rows.iter().map(|r| Complex64::new(r.fields[1], r.fields[2])).collect();
                let wave = ComplexWaveform::new(samples, step, t0)?;
                let modulation = match header.get("modulation") {
                    Some((m, line)) => Some(
                        m.parse::<Modulation>()
                            .map_err(|e| CliError::invalid(format!("{origin}:{line}: {e}")))?,
                    ),
                    None => None,
                };
                Ok(WaveformFile::Complex { wave, fs, modulation })
            }
        }
        _ => {
            let df = header.rate("df_hz")?;
            let f0 = header.float("f0_hz", None)?;
            let sidedness = match header.get("sidedness") {
                None | Some(("single", _)) => Sidedness::Single,
                Some(("double", _)) => Sidedness::Double,
                Some((other, line)) => {
                    return Err(CliError::invalid(format!(
                        "{origin}:{line}: sidedness must be 'single' or 'double', got '{other}'"
                    )))
                }
            };
            let record_len = match header.get("record_len") {
                Some((v, line)) => v
                    .parse::<usize>()
                    .map_err(|_| CliError::invalid(format!("{origin}:{line}: record_len='{v}' is not a count")))?,
                None if sidedness == Sidedness::Single => 2 * (rows.len() - 1),
                None => rows.len(),
            };
            let zeros = vec![Complex64::new(0.0, 0.0); rows.len()];
            let grid = Spectrum::new(zeros, df.to_f64(), f0, record_len.max(1), sidedness)
                .map_err(|e| CliError::invalid(format!("{origin}: {e}")))?;
            check_axis(&rows, origin, "frequency", "df_hz", grid.df(), |k| grid.freq(k))?;
            let bins = rows.iter().map(|r| Complex64::new(r.fields[1], r.fields[2])).collect();
            let spectrum = grid.with_bins(bins)?;
            Ok(WaveformFile::Spectrum { spectrum, df })
        }
    }
}

fn check_axis(
    rows: &[Row],
    origin: &str,
    what: &str,
    key: &str,
    step: f64,
    expected: impl Fn(usize) -> f64,
) -> CliResult<()> {
    for (k, row) in rows.iter().enumerate() {
        let want = expected(k);
        let got = row.fields[0];
        if !((got - want).abs() <= AXIS_TOLERANCE * want.abs().max(step)) {
            return Err(CliError::invalid(format!(
                "{origin}:{}: {what} {got:e} is inconsistent with the declared {key} (expected {want:e})",
                row.line
            )));
        }
    }
    Ok(())
}

fn check_finite(rows: &[Row], origin: &str) -> CliResult<()> {
    match rows.iter().find(|r| r.fields.iter().any(|x| !x.is_finite())) {
        Some(r) => Err(CliError::invalid(format!("{origin}:{}: sample is not finite", r.line))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_real_file() {
        let text = "# kind=real\n# fs_hz=1/1\n# t0_s=0\n0,0.5\n1,-2\n";
        let (w, fs) = parse_waveform(text, "mem").unwrap().into_real("mem").unwrap();
        assert_eq!(w.samples(), &[0.5, -2.0]);
        assert_eq!(w.dt(), 1.0);
        assert_eq!(fs, ExactRate::integer(1).unwrap());
    }

    #[test]
    fn fast_rate_round_trip_is_exact() {
        let fs: ExactRate = "100000000000/1".parse().unwrap();
        let x: Vec<f64> = (0..257).map(|k| (k as f64 * 0.37).sin() / 3.0).collect();
        let w = RealWaveform::new(x, fs.recip_f64(), 1.25e-9).unwrap();
        let text = format_real(&w, fs);
        let back = parse_waveform(&text, "mem").unwrap();
        assert_eq!(back, WaveformFile::Real { wave: w, fs });
        assert_eq!(format_real(&back.into_real("mem").unwrap().0, fs), text);
    }

    #[test]
    fn complex_and_spectrum_round_trip() {
        let fs = ExactRate::new(700_000_000_000, 1).unwrap();
        let w = ComplexWaveform::new(vec![Complex64::new(0.1, -0.2), Complex64::new(1.0 / 3.0, 2.0)], fs.recip_f64(), 0.0)
            .unwrap();
        let text = format_complex(&w, fs, Some(Modulation::Qam16));
        let back = parse_waveform(&text, "mem").unwrap();
        assert_eq!(back, WaveformFile::Complex { wave: w.clone(), fs, modulation: Some(Modulation::Qam16) });

        let s = wavemetro::forward_transform(&w);
        let df = ExactRate::new(fs.numer(), fs.denom() * 2).unwrap();
        let text = format_spectrum(&s, df);
        match parse_waveform(&text, "mem").unwrap() {
            WaveformFile::Spectrum { spectrum, df: d } => {
                assert_eq!(d, df);
                assert_eq!(spectrum.bins(), s.bins());
                assert_eq!(spectrum.sidedness(), Sidedness::Double);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_axis_names_row() {
        let text = "# kind=real\n# fs_hz=1000/1\n# t0_s=0\ntime_s,value\n0,1\n1e-3,1\n2.1e-3,1\n";
        let err = parse_waveform(text, "f.csv").unwrap_err().to_string();
        assert!(err.starts_with("f.csv:7:"), "{err}");
    }

    #[test]
    fn diagnostics() {
        let missing = parse_waveform("# kind=real\n# t0_s=0\n0,1\n", "a").unwrap_err();
        assert!(missing.to_string().contains("fs_hz"));
        let ragged = parse_waveform("# kind=complex\n# fs_hz=1\n# t0_s=0\n0,1,2\n1,3\n", "b").unwrap_err();
        assert!(ragged.to_string().starts_with("b:5:"), "{ragged}");
        let float_rate = parse_waveform("# kind=real\n# fs_hz=1e9\n# t0_s=0\n0,1\n", "c").unwrap_err();
        assert!(float_rate.to_string().starts_with("c:2:"), "{float_rate}");
        let nan = parse_waveform("# kind=real\n# fs_hz=1\n# t0_s=0\n0,1\n1,NaN\n", "d").unwrap_err();
        assert!(nan.to_string().starts_with("d:5:"), "{nan}");
        assert_eq!(missing.exit_code(), 2);
    }
}
