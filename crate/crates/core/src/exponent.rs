//! Extended exponents `p ∈ (0, ∞]` and the associated (quasi-)norms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exponent in `(0, ∞]`. Infinity is represented by `f64::INFINITY` and
/// all reciprocal arithmetic treats `1/∞` as `0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(pub(crate) f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p <= 0.0 {
            return Err(Error::Parameter(format!("exponent must lie in (0, inf], got {p}")));
        }
        Ok(Exponent(p))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        if self.0.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Builds the exponent whose reciprocal is `s` (`s = 0` gives `∞`).
    pub fn from_recip(s: f64) -> Result<Self> {
        if s == 0.0 {
            Ok(Self::INFINITY)
        } else {
            Self::new(1.0 / s)
        }
    }

    /// The default grid `{1, 4/3, 2, 3, 6, ∞}`.
    pub fn default_grid() -> Vec<Exponent> {
        vec![
            Exponent(1.0),
            Exponent(4.0 / 3.0),
            Exponent(2.0),
            Exponent(3.0),
            Exponent(6.0),
            Exponent::INFINITY,
        ]
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "inf" | "infinity" | "Inf" | "INF" | "∞" => return Ok(Self::INFINITY),
            _ => {}
        }
        let value = if let Some((num, den)) = s.split_once('/') {
            let num: f64 = num.trim().parse().map_err(|_| Error::Parameter(format!("bad exponent {s:?}")))?;
            let den: f64 = den.trim().parse().map_err(|_| Error::Parameter(format!("bad exponent {s:?}")))?;
            num / den
        } else {
            s.parse().map_err(|_| Error::Parameter(format!("bad exponent {s:?}")))?
        };
        Exponent::new(value)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(p) => Exponent::new(p).map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `‖f‖_p`; for `p < 1` this is the quasi-norm `(Σ|f|^p)^{1/p}`.
pub fn lp_norm(f: &[f64], p: Exponent) -> f64 {
    let max = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if p.is_infinite() || max == 0.0 {
        return max;
    }
    let p = p.value();
    if p == 1.0 {
        return f.iter().map(|x| x.abs()).sum();
    }
    // scale by the max entry to keep powers in range
    let sum: f64 = f.iter().map(|x| (x.abs() / max).powf(p)).sum();
    max * sum.powf(1.0 / p)
}

/// `Σ|f|^p` for finite `p`.
pub fn lp_power_sum(f: &[f64], p: f64) -> f64 {
    f.iter().map(|x| x.abs().powf(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_infinity_and_fractions() {
        assert!("inf".parse::<Exponent>().unwrap().is_infinite());
        let p: Exponent = "4/3".parse().unwrap();
        assert!((p.value() - 4.0 / 3.0).abs() < 1e-15);
        assert!("0".parse::<Exponent>().is_err());
        assert!("-1".parse::<Exponent>().is_err());
        assert_eq!(Exponent::INFINITY.recip(), 0.0);
    }

    #[test]
    fn norms_of_small_vectors() {
        let f = [3.0, -4.0];
        assert_eq!(lp_norm(&f, Exponent::ONE), 7.0);
        assert!((lp_norm(&f, Exponent::TWO) - 5.0).abs() < 1e-15);
        assert_eq!(lp_norm(&f, Exponent::INFINITY), 4.0);
        // quasi-norm at p = 1/2: (sqrt3 + 2)^2
        let half = Exponent::new(0.5).unwrap();
        let expected = (3f64.sqrt() + 2.0).powi(2);
        assert!((lp_norm(&f, half) - expected).abs() < 1e-12);
    }

    #[test]
    fn serde_round_trip() {
        let grid = Exponent::default_grid();
        let s = serde_json::to_string(&grid).unwrap();
        assert!(s.ends_with("\"inf\"]"));
        let back: Vec<Exponent> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, grid);
    }
}
