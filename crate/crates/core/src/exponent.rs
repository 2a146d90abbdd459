//! Integrability exponents in `[1, inf]`, stored exactly.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An exponent `p` in `[1, inf]`. Finite values are rationals so the
/// admissibility test `n/p + 1/q <= 1` is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Exponent {
    Finite(Ratio<i64>),
    Infinite,
}

impl Exponent {
    pub fn finite(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidExponent(format!("{num}/{den}")));
        }
        let r = Ratio::new(num, den);
        if r < Ratio::from_integer(1) {
            return Err(Error::InvalidExponent(format!("{num}/{den}")));
        }
        Ok(Exponent::Finite(r))
    }

    pub fn integer(p: i64) -> Result<Self> {
        Exponent::finite(p, 1)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `1/p`, with `1/inf = 0`.
    pub fn reciprocal(&self) -> Ratio<i64> {
        match self {
            Exponent::Finite(r) => r.recip(),
            Exponent::Infinite => Ratio::from_integer(0),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// Reciprocal as a float, `0.0` for `inf`.
    pub fn recip_f64(&self) -> f64 {
        let r = self.reciprocal();
        *r.numer() as f64 / *r.denom() as f64
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // larger exponent <=> smaller reciprocal
        other.reciprocal().cmp(&self.reciprocal())
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinite => write!(f, "inf"),
            Exponent::Finite(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Exponent::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidExponent(s.to_string());
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(Exponent::Infinite),
            _ => {}
        }
        if let Some((a, b)) = t.split_once('/') {
            let num: i64 = a.trim().parse().map_err(|_| bad())?;
            let den: i64 = b.trim().parse().map_err(|_| bad())?;
            return Exponent::finite(num, den).map_err(|_| bad());
        }
        if let Some((int, frac)) = t.split_once('.') {
            if frac.len() > 9 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let scale = 10i64.pow(frac.len() as u32);
            let whole: i64 = if int.is_empty() {
                0
            } else {
                int.parse().map_err(|_| bad())?
            };
            let f: i64 = if frac.is_empty() {
                0
            } else {
                frac.parse().map_err(|_| bad())?
            };
            return Exponent::finite(whole * scale + f, scale).map_err(|_| bad());
        }
        let p: i64 = t.parse().map_err(|_| bad())?;
        Exponent::integer(p).map_err(|_| bad())
    }
}

impl TryFrom<String> for Exponent {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Exponent> for String {
    fn from(e: Exponent) -> String {
        e.to_string()
    }
}

/// Spatial exponent `p` and temporal exponent `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: Exponent,
    pub q: Exponent,
}

impl ExponentPair {
    pub fn new(p: Exponent, q: Exponent) -> Self {
        ExponentPair { p, q }
    }

    /// Parses `"p,q"`, e.g. `"2,inf"` or `"3/2, 4"`.
    pub fn parse(text: &str) -> Result<Self> {
        let (p, q) = text
            .split_once(',')
            .ok_or_else(|| Error::InvalidExponent(text.to_string()))?;
        Ok(ExponentPair::new(p.parse()?, q.parse()?))
    }

    /// `n/p + 1/q`, exactly.
    pub fn scaling_sum(&self, n: usize) -> Ratio<i64> {
        self.p.reciprocal() * Ratio::from_integer(n as i64) + self.q.reciprocal()
    }

    pub fn is_admissible(&self, n: usize) -> bool {
        self.scaling_sum(n) <= Ratio::from_integer(1)
    }

    /// `n/p + 1/q = 1`.
    pub fn is_critical(&self, n: usize) -> bool {
        self.scaling_sum(n) == Ratio::from_integer(1)
    }

    pub fn check_admissible(&self, n: usize) -> Result<()> {
        if self.is_admissible(n) {
            Ok(())
        } else {
            Err(Error::Inadmissible {
                p: self.p.to_string(),
                q: self.q.to_string(),
                n,
                sum: self.scaling_sum(n).to_string(),
            })
        }
    }
}

impl fmt::Display for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}
