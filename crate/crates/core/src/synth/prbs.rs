//! Maximal-length PRBS patterns from a Fibonacci LFSR.

use crate::error::{Error, Result};
use crate::modulation::Bit;

/// Degree and initial state of a PRBS generator. The feedback polynomial is
/// fixed per degree: x^7+x^6+1, x^9+x^5+1, x^15+x^14+1, x^23+x^18+1,
/// x^31+x^28+1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrbsSpec {
    degree: u32,
    seed: u64,
}

impl PrbsSpec {
    pub const DEGREES: [u32; 5] = [7, 9, 15, 23, 31];

    /// `seed` is the initial register state; it must be nonzero and fit in
    /// `degree` bits.
    pub fn new(degree: u32, seed: u64) -> Result<Self> {
        if !Self::DEGREES.contains(&degree) {
            return Err(Error::validation(format!(
                "unsupported PRBS degree {degree}; expected one of {:?}",
                Self::DEGREES
            )));
        }
        if seed == 0 {
            return Err(Error::validation("PRBS seed state must be nonzero"));
        }
        if seed >> degree != 0 {
            return Err(Error::validation(format!(
                "PRBS seed state {seed:#x} does not fit in {degree} bits"
            )));
        }
        Ok(Self { degree, seed })
    }

    /// All-ones initial state.
    pub fn with_degree(degree: u32) -> Result<Self> {
        let seed = if degree < 64 { (1u64 << degree) - 1 } else { 1 };
        Self::new(degree, seed)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Second feedback tap (the first is the degree itself).
    pub fn tap(&self) -> u32 {
        match self.degree {
            7 => 6,
            9 => 5,
            15 => 14,
            23 => 18,
            31 => 28,
            _ => unreachable!("degree validated at construction"),
        }
    }

    /// Sequence period `2^degree - 1`.
    pub fn period(&self) -> u64 {
        (1u64 << self.degree) - 1
    }

    pub fn iter(&self) -> Lfsr {
        Lfsr {
            state: self.seed,
            degree: self.degree,
            tap: self.tap(),
            mask: (1u64 << self.degree) - 1,
        }
    }
}

/// Running LFSR; yields one bit per step, oldest register bit first.
#[derive(Debug, Clone)]
pub struct Lfsr {
    state: u64,
    degree: u32,
    tap: u32,
    mask: u64,
}

impl Iterator for Lfsr {
    type Item = Bit;

    fn next(&mut self) -> Option<Bit> {
        let out = (self.state >> (self.degree - 1)) & 1;
        let fb = out ^ ((self.state >> (self.tap - 1)) & 1);
        self.state = ((self.state << 1) | fb) & self.mask;
        Some(out as Bit)
    }
}

/// First `n` bits of the pattern.
pub fn prbs_generate(spec: &PrbsSpec, n: usize) -> Result<Vec<Bit>> {
    if n == 0 {
        return Err(Error::validation("PRBS length must be at least 1"));
    }
    Ok(spec.iter().take(n).collect())
}
