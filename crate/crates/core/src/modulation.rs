//! Gray-mapped QPSK and 16-QAM constellations and the symbol frame type
//! shared by the synthesis and metric code.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Bits are stored one per byte, each 0 or 1.
pub type Bit = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

const FRAC_1_SQRT_10: f64 = 0.316_227_766_016_837_94;

/// Per-axis Gray levels indexed by the two axis bits `(b_hi, b_lo)`:
/// 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
const QAM16_AXIS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    /// Constellation size `M`.
    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
        }
    }

    /// Constellation point for the symbol whose bits, read MSB first, form
    /// `index`.
    pub fn point(self, index: usize) -> Complex64 {
        match self {
            Modulation::Qpsk => {
                let b1 = ((index >> 1) & 1) as f64;
                let b0 = (index & 1) as f64;
                Complex64::new(1.0 - 2.0 * b1, 1.0 - 2.0 * b0) * std::f64::consts::FRAC_1_SQRT_2
            }
            Modulation::Qam16 => {
                let re = QAM16_AXIS[(index >> 2) & 3];
                let im = QAM16_AXIS[index & 3];
                Complex64::new(re, im) * FRAC_1_SQRT_10
            }
        }
    }

    /// All points, indexed by their bit pattern.
    pub fn constellation(self) -> Vec<Complex64> {
        (0..self.order()).map(|i| self.point(i)).collect()
    }

    /// Largest point power; 1 for QPSK and 1.8 for 16-QAM.
    pub fn peak_power(self) -> f64 {
        self.constellation().iter().map(|p| p.norm_sqr()).fold(0.0, f64::max)
    }

    /// Index of the nearest constellation point. Exact ties go to the point
    /// with the smaller bit value.
    pub fn nearest(self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for i in 0..self.order() {
            let d = (z - self.point(i)).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "qpsk" | "4qam" => Ok(Modulation::Qpsk),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            other => Err(Error::validation(format!("unknown modulation '{other}'"))),
        }
    }
}

/// Complex constellation symbols with their modulation and, optionally, the
/// bits they were mapped from.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    symbols: Vec<Complex64>,
    modulation: Modulation,
    source_bits: Option<Vec<Bit>>,
}

impl SymbolFrame {
    pub fn new(symbols: Vec<Complex64>, modulation: Modulation, source_bits: Option<Vec<Bit>>) -> Result<Self> {
        if let Some(bits) = &source_bits {
            let want = symbols.len() * modulation.bits_per_symbol();
            if bits.len() != want {
                return Err(Error::validation(format!(
                    "{} symbols of {modulation} need {want} source bits, got {}",
                    symbols.len(),
                    bits.len()
                )));
            }
        }
        if let Some(i) = symbols.iter().position(|s| !s.is_finite()) {
            return Err(Error::validation(format!("symbol {i} is not finite")));
        }
        Ok(Self {
            symbols,
            modulation,
            source_bits,
        })
    }

    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn source_bits(&self) -> Option<&[Bit]> {
        self.source_bits.as_deref()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Replaces the symbols, keeping modulation and source bits.
    pub fn with_symbols(&self, symbols: Vec<Complex64>) -> Result<Self> {
        Self::new(symbols, self.modulation, self.source_bits.clone())
    }
}

/// Gray-maps `bits` (MSB first within each symbol) onto the constellation.
pub fn map_symbols(bits: &[Bit], modulation: Modulation) -> Result<SymbolFrame> {
    let k = modulation.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::validation(format!(
            "{} bits is not a multiple of {k} bits per {modulation} symbol",
            bits.len()
        )));
    }
    if let Some(i) = bits.iter().position(|&b| b > 1) {
        return Err(Error::validation(format!("bit {i} has value {}", bits[i])));
    }
    let symbols = bits
        .chunks_exact(k)
        .map(|chunk| modulation.point(bits_to_index(chunk)))
        .collect();
    SymbolFrame::new(symbols, modulation, Some(bits.to_vec()))
}

pub(crate) fn bits_to_index(bits: &[Bit]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub(crate) fn index_to_bits(index: usize, k: usize, out: &mut Vec<Bit>) {
    out.extend((0..k).rev().map(|s| ((index >> s) & 1) as Bit));
}
