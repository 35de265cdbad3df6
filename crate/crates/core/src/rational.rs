//! Exact rational rates. Sample and symbol rates enter the interleaving
//! arithmetic as integers or integer ratios; floating-point text is refused.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// A strictly positive exact rational, e.g. a rate in hertz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRate(Ratio<u128>);

impl ExactRate {
    pub fn new(numer: u128, denom: u128) -> Result<Self> {
        if numer == 0 || denom == 0 {
            return Err(Error::validation(format!("rate {numer}/{denom} must be positive and finite")));
        }
        Ok(Self(Ratio::new(numer, denom)))
    }

    pub fn integer(value: u128) -> Result<Self> {
        Self::new(value, 1)
    }

    pub fn from_ratio(r: Ratio<u128>) -> Result<Self> {
        Self::new(*r.numer(), *r.denom())
    }

    pub fn ratio(&self) -> Ratio<u128> {
        self.0
    }

    pub fn numer(&self) -> u128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u128 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// Reciprocal `1 / self` as an `f64`, e.g. a sample interval.
    pub fn recip_f64(&self) -> f64 {
        self.denom() as f64 / self.numer() as f64
    }
}

impl fmt::Display for ExactRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for ExactRate {
    type Err = Error;

    /// Accepts `"123"` or `"num/den"`; anything with a decimal point or
    /// exponent is rejected.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |part: &str| -> Result<u128> {
            if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::validation(format!(
                    "rate '{s}' must be an integer or an integer ratio 'num/den'"
                )));
            }
            part.parse::<u128>()
                .map_err(|e| Error::validation(format!("rate '{s}': {e}")))
        };
        match s.split_once('/') {
            Some((n, d)) => Self::new(parse(n.trim())?, parse(d.trim())?),
            None => Self::new(parse(s)?, 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        let r: ExactRate = "100000000000".parse().unwrap();
        assert_eq!(r.to_string(), "100000000000/1");
        let r: ExactRate = "56/2".parse().unwrap();
        assert_eq!((r.numer(), r.denom()), (28, 1));
        assert_eq!(r.to_string().parse::<ExactRate>().unwrap(), r);
    }

    #[test]
    fn floats_rejected() {
        for bad in ["1e11", "28.0", "3.57", "-5", "0", "1/0", "", "abc"] {
            assert!(bad.parse::<ExactRate>().is_err(), "{bad}");
        }
    }
}
