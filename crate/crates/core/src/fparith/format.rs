use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use super::FpError;

/// A parametric floating-point system: radix `b`, `p` significand digits,
/// and exponent range `[emin, emax]`.
///
/// A nonzero element has the form `±d.ddd…d × b^e` with `p` radix-`b`
/// digits, leading digit nonzero, and `emin <= e <= emax`. Zero is always
/// representable. The significand is held in a `u128`, so `b^(p+2)` must
/// stay below `2^127`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FormatRepr", into = "FormatRepr")]
pub struct FloatFormat {
    radix: u32,
    precision: u32,
    emin: i32,
    emax: i32,
}

#[derive(Serialize, Deserialize)]
struct FormatRepr {
    radix: u32,
    precision: u32,
    emin: i32,
    emax: i32,
}

impl TryFrom<FormatRepr> for FloatFormat {
    type Error = FpError;
    fn try_from(r: FormatRepr) -> Result<Self, FpError> {
        FloatFormat::new(r.radix, r.precision, r.emin, r.emax)
    }
}

impl From<FloatFormat> for FormatRepr {
    fn from(f: FloatFormat) -> Self {
        FormatRepr {
            radix: f.radix,
            precision: f.precision,
            emin: f.emin,
            emax: f.emax,
        }
    }
}

impl FloatFormat {
    pub fn new(radix: u32, precision: u32, emin: i32, emax: i32) -> Result<Self, FpError> {
        if radix < 2 {
            return Err(FpError::InvalidFormat(format!("radix {radix} < 2")));
        }
        if precision < 1 {
            return Err(FpError::InvalidFormat("precision must be >= 1".into()));
        }
        if emax < emin {
            return Err(FpError::InvalidFormat(format!("emax {emax} < emin {emin}")));
        }
        // two guard digits are carried through rounding
        let fits = (radix as u128)
            .checked_pow(precision + 2)
            .is_some_and(|v| v < (1u128 << 127));
        if !fits {
            return Err(FpError::InvalidFormat(format!(
                "radix {radix} with precision {precision} exceeds the 127-bit significand budget"
            )));
        }
        Ok(Self {
            radix,
            precision,
            emin,
            emax,
        })
    }

    /// IEEE-754 binary64 parameters (normal range only).
    pub fn binary64() -> Self {
        Self::new(2, 53, -1022, 1023).unwrap()
    }

    /// IEEE-754 binary32 parameters (normal range only).
    pub fn binary32() -> Self {
        Self::new(2, 24, -126, 127).unwrap()
    }

    pub fn radix(&self) -> u32 {
        self.radix
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn emin(&self) -> i32 {
        self.emin
    }

    pub fn emax(&self) -> i32 {
        self.emax
    }

    /// `½·b^(1−p)`, as an exact rational.
    pub fn machine_epsilon_exact(&self) -> BigRational {
        let b = BigInt::from(self.radix);
        let denom: BigInt = Pow::pow(&b, self.precision - 1) * BigInt::from(2);
        BigRational::new(BigInt::one(), denom)
    }

    /// `½·b^(1−p)` as the nearest `f64`. Exact whenever the radix is a power of two.
    pub fn machine_epsilon(&self) -> f64 {
        0.5 * (self.radix as f64).powi(1 - self.precision as i32)
    }

    pub(crate) fn radix_u128(&self) -> u128 {
        self.radix as u128
    }

    /// `b^k` for `k <= p + 2`.
    pub(crate) fn pow(&self, k: u32) -> u128 {
        self.radix_u128().pow(k)
    }

    /// Smallest significand, `b^(p−1)`.
    pub(crate) fn min_significand(&self) -> u128 {
        self.pow(self.precision - 1)
    }

    /// One past the largest significand, `b^p`.
    pub(crate) fn significand_bound(&self) -> u128 {
        self.pow(self.precision)
    }
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}p{}e{}:{}", self.radix, self.precision, self.emin, self.emax)
    }
}

/// Parses `b<radix>p<precision>e<emin>:<emax>`, e.g. `b10p16e-30:30`.
impl FromStr for FloatFormat {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self, FpError> {
        let bad = || FpError::InvalidFormat(format!("cannot parse format string '{s}'"));
        let rest = s.trim().strip_prefix('b').ok_or_else(bad)?;
        let (radix, rest) = rest.split_once('p').ok_or_else(bad)?;
        let (precision, rest) = rest.split_once('e').ok_or_else(bad)?;
        let (emin, emax) = rest.split_once(':').ok_or_else(bad)?;
        FloatFormat::new(
            radix.parse().map_err(|_| bad())?,
            precision.parse().map_err(|_| bad())?,
            emin.parse().map_err(|_| bad())?,
            emax.parse().map_err(|_| bad())?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_for_ieee_and_decimal() {
        let d = FloatFormat::new(2, 53, -1022, 1023).unwrap();
        assert_eq!(d.machine_epsilon(), 2f64.powi(-53));
        let s = FloatFormat::new(2, 24, -126, 127).unwrap();
        assert_eq!(s.machine_epsilon(), 2f64.powi(-24));
        let dec = FloatFormat::new(10, 16, -30, 30).unwrap();
        assert_eq!(
            dec.machine_epsilon_exact(),
            BigRational::new(5.into(), BigInt::from(10).pow(16u32))
        );
    }

    #[test]
    fn parse_round_trip() {
        let f: FloatFormat = "b10p16e-30:30".parse().unwrap();
        assert_eq!((f.radix(), f.precision(), f.emin(), f.emax()), (10, 16, -30, 30));
        assert_eq!(f.to_string().parse::<FloatFormat>().unwrap(), f);
        assert!("b1p4e0:1".parse::<FloatFormat>().is_err());
        assert!("b10p4e3:1".parse::<FloatFormat>().is_err());
        assert!("10p4e0:1".parse::<FloatFormat>().is_err());
        assert!("b10p40e0:1".parse::<FloatFormat>().is_err());
    }
}
