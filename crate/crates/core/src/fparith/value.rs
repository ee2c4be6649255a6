use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use super::{FloatFormat, FpError};

/// An element of a [`FloatFormat`], or zero.
///
/// Nonzero values are `±sig · b^(exp − p + 1)` with `b^(p−1) <= sig < b^p`,
/// so `b^exp <= |v| < b^(exp+1)`. The representation is canonical: two values
/// of the same format are numerically equal iff they compare equal with `==`.
/// Zero carries no sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FpValue {
    negative: bool,
    significand: u128,
    exponent: i32,
}

impl FpValue {
    pub const ZERO: FpValue = FpValue {
        negative: false,
        significand: 0,
        exponent: 0,
    };

    /// Builds a value from its parts, checking normalization against `fmt`.
    pub fn from_parts(
        negative: bool,
        significand: u128,
        exponent: i32,
        fmt: &FloatFormat,
    ) -> Result<Self, FpError> {
        if significand == 0 {
            return Ok(Self::ZERO);
        }
        if significand < fmt.min_significand() || significand >= fmt.significand_bound() {
            return Err(FpError::NotRepresentable(format!(
                "significand {significand} is not a normalized {}-digit radix-{} integer",
                fmt.precision(),
                fmt.radix()
            )));
        }
        if exponent < fmt.emin() || exponent > fmt.emax() {
            return Err(FpError::NotRepresentable(format!(
                "exponent {exponent} outside [{}, {}]",
                fmt.emin(),
                fmt.emax()
            )));
        }
        Ok(Self {
            negative,
            significand,
            exponent,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.significand == 0
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    /// `+1`, `-1`, or `0` for zero.
    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            0
        } else if self.negative {
            -1
        } else {
            1
        }
    }

    pub fn significand(&self) -> u128 {
        self.significand
    }

    pub fn exponent(&self) -> i32 {
        self.exponent
    }

    /// The `p` significand digits, most significant first. Empty for zero.
    pub fn digits(&self, fmt: &FloatFormat) -> Vec<u32> {
        if self.is_zero() {
            return Vec::new();
        }
        let b = fmt.radix_u128();
        let mut s = self.significand;
        let mut out = vec![0u32; fmt.precision() as usize];
        for d in out.iter_mut().rev() {
            *d = (s % b) as u32;
            s /= b;
        }
        out
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            *self
        } else {
            Self {
                negative: !self.negative,
                ..*self
            }
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            negative: false,
            ..*self
        }
    }

    /// `max{0, x}`, which is closed on the format.
    pub fn relu(&self) -> Self {
        if self.negative {
            Self::ZERO
        } else {
            *self
        }
    }

    /// Radix exponent of the least significant digit.
    fn scale(&self, fmt: &FloatFormat) -> i64 {
        self.exponent as i64 - (fmt.precision() as i64 - 1)
    }

    /// Exact value as a rational number.
    pub fn to_rational(&self, fmt: &FloatFormat) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        let sign = if self.negative { Sign::Minus } else { Sign::Plus };
        let mag = BigInt::from_biguint(sign, BigUint::from(self.significand));
        let b = BigInt::from(fmt.radix());
        let s = self.scale(fmt);
        if s >= 0 {
            BigRational::from_integer(mag * Pow::pow(&b, s as u64))
        } else {
            BigRational::new(mag, Pow::pow(&b, (-s) as u64))
        }
    }

    /// Nearest `f64` to the exact value.
    pub fn to_f64(&self, fmt: &FloatFormat) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.to_rational(fmt).to_f64().unwrap_or(f64::NAN)
    }

    /// Numerical comparison of two values of the same format.
    pub fn cmp_value(&self, other: &Self) -> Ordering {
        let key = |v: &Self| -> i32 {
            if v.is_zero() {
                0
            } else if v.negative {
                -1
            } else {
                1
            }
        };
        let (sa, sb) = (key(self), key(other));
        if sa != sb || sa == 0 {
            return sa.cmp(&sb);
        }
        let mag = self
            .exponent
            .cmp(&other.exponent)
            .then(self.significand.cmp(&other.significand));
        if sa > 0 {
            mag
        } else {
            mag.reverse()
        }
    }

    /// Formats as `±d.ddd×b^e` in the format's radix (digits above 9 use letters).
    pub fn display(&self, fmt: &FloatFormat) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let digits: String = self
            .digits(fmt)
            .into_iter()
            .map(|d| std::char::from_digit(d, 36).unwrap_or('?'))
            .collect();
        let (head, tail) = digits.split_at(1);
        let sign = if self.negative { "-" } else { "" };
        if tail.is_empty() {
            format!("{sign}{head}×{}^{}", fmt.radix(), self.exponent)
        } else {
            format!("{sign}{head}.{tail}×{}^{}", fmt.radix(), self.exponent)
        }
    }
}

impl fmt::Display for FpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.negative { "-" } else { "+" };
        write!(f, "{sign}{}e{}", self.significand, self.exponent)
    }
}

/// Final normalization: carry on `sig == b^p`, then range checks.
/// Underflow (a rounded magnitude below `b^emin`) flushes to zero.
fn finish(negative: bool, mut sig: u128, mut exp: i64, fmt: &FloatFormat) -> Result<FpValue, FpError> {
    if sig == fmt.significand_bound() {
        sig = fmt.min_significand();
        exp += 1;
    }
    if exp > fmt.emax() as i64 {
        return Err(FpError::Overflow {
            exponent: exp,
            emax: fmt.emax(),
        });
    }
    if exp < fmt.emin() as i64 {
        return Ok(FpValue::ZERO);
    }
    Ok(FpValue {
        negative,
        significand: sig,
        exponent: exp as i32,
    })
}

/// Number of radix-`b` digits of `m > 0`.
fn digit_count(m: u128, fmt: &FloatFormat) -> u32 {
    let b = fmt.radix();
    if b.is_power_of_two() {
        return m.ilog2() / b.ilog2() + 1;
    }
    // floor(log_b m) is within one of the log2 estimate
    let est = (m.ilog2() as f64 / (b as f64).log2()) as u32;
    match fmt.radix_u128().checked_pow(est + 1) {
        Some(next) if next <= m => est + 2,
        _ if fmt.radix_u128().pow(est) > m => est,
        _ => est + 1,
    }
}

/// Rounds the exact value `±m · b^scale` to nearest, ties to even.
pub(crate) fn round_u128(negative: bool, m: u128, scale: i64, fmt: &FloatFormat) -> Result<FpValue, FpError> {
    if m == 0 {
        return Ok(FpValue::ZERO);
    }
    let b = fmt.radix_u128();
    let p = fmt.precision();
    let ndigits = digit_count(m, fmt);
    let exp = scale + ndigits as i64 - 1;
    let sig = if ndigits > p {
        let div = b.pow(ndigits - p);
        let (q, r) = (m / div, m % div);
        let rest = div - r;
        if r > rest || (r == rest && q % 2 == 1) {
            q + 1
        } else {
            q
        }
    } else {
        m * b.pow(p - ndigits)
    };
    finish(negative, sig, exp, fmt)
}

fn count_digits_big(m: &BigUint, b: &BigUint, radix: u32) -> u64 {
    let bits = m.bits();
    let mut est = ((bits - 1) as f64 * std::f64::consts::LN_2 / (radix as f64).ln()).floor() as u64;
    // b^est <= m < b^(est+1)
    loop {
        if Pow::pow(b, est + 1) <= *m {
            est += 1;
        } else if est > 0 && Pow::pow(b, est) > *m {
            est -= 1;
        } else {
            break;
        }
    }
    est + 1
}

/// Same contract as [`round_u128`] for magnitudes that do not fit 128 bits.
pub(crate) fn round_big(negative: bool, m: &BigUint, scale: i64, fmt: &FloatFormat) -> Result<FpValue, FpError> {
    if let Some(small) = m.to_u128() {
        return round_u128(negative, small, scale, fmt);
    }
    let b = BigUint::from(fmt.radix());
    let p = fmt.precision() as u64;
    let ndigits = count_digits_big(m, &b, fmt.radix());
    let exp = scale + ndigits as i64 - 1;
    // a value that needs a BigUint has more than p digits
    let div = Pow::pow(&b, ndigits - p);
    let (q, r) = m.div_rem(&div);
    let rest = &div - &r;
    let q = q.to_u128().expect("quotient has p digits");
    let sig = match r.cmp(&rest) {
        Ordering::Greater => q + 1,
        Ordering::Equal if q % 2 == 1 => q + 1,
        _ => q,
    };
    finish(negative, sig, exp, fmt)
}

/// Round-to-nearest (ties to even) of an arbitrary rational into `fmt`.
pub fn round_rational(x: &BigRational, fmt: &FloatFormat) -> Result<FpValue, FpError> {
    if x.is_zero() {
        return Ok(FpValue::ZERO);
    }
    let negative = x.is_negative();
    let n = x.numer().abs().to_biguint().unwrap();
    let d = x.denom().to_biguint().unwrap();
    let b = BigUint::from(fmt.radix());
    let p = fmt.precision() as i64;

    // locate e with b^e <= n/d < b^(e+1)
    let log2 = n.bits() as f64 - d.bits() as f64;
    let mut e = (log2 * std::f64::consts::LN_2 / (fmt.radix() as f64).ln()).floor() as i64;
    let ge_pow = |e: i64| -> bool {
        // n/d >= b^e
        if e >= 0 {
            n >= &d * Pow::pow(&b, e as u64)
        } else {
            &n * Pow::pow(&b, (-e) as u64) >= d
        }
    };
    while !ge_pow(e) {
        e -= 1;
    }
    while ge_pow(e + 1) {
        e += 1;
    }

    // q = floor(n/d · b^(p−1−e)), a p-digit integer
    let shift = p - 1 - e;
    let (num, den) = if shift >= 0 {
        (&n * Pow::pow(&b, shift as u64), d)
    } else {
        (n, &d * Pow::pow(&b, (-shift) as u64))
    };
    let (q, r) = num.div_rem(&den);
    let q = q.to_u128().expect("quotient has p digits");
    let twice = &r << 1usize;
    let sig = match twice.cmp(&den) {
        Ordering::Greater => q + 1,
        Ordering::Equal if q % 2 == 1 => q + 1,
        _ => q,
    };
    finish(negative, sig, e, fmt)
}

/// Round-to-nearest of an `f64` (taken at its exact binary value).
pub fn round_nearest(x: f64, fmt: &FloatFormat) -> Result<FpValue, FpError> {
    if !x.is_finite() {
        return Err(FpError::NonFinite(x));
    }
    if x == 0.0 {
        return Ok(FpValue::ZERO);
    }
    let bits = x.abs().to_bits();
    let (biased, frac) = ((bits >> 52) as i64, bits & ((1u64 << 52) - 1));
    // x = ±m · 2^e exactly
    let (m, e) = if biased == 0 { (frac, -1074) } else { (frac | (1u64 << 52), biased - 1075) };
    let tz = m.trailing_zeros();
    let (m, e) = (m >> tz, e + tz as i64);
    if fmt.radix() == 2 {
        return round_u128(x < 0.0, m as u128, e, fmt);
    }
    if (0..64).contains(&e) {
        return round_u128(x < 0.0, (m as u128) << e, 0, fmt);
    }
    let exact = BigRational::from_float(x).ok_or(FpError::NonFinite(x))?;
    round_rational(&exact, fmt)
}

/// Parses a decimal literal such as `-0.000123` or `1.5e-3` into an exact rational.
pub fn parse_decimal(s: &str) -> Result<BigRational, FpError> {
    let bad = || FpError::NotRepresentable(format!("invalid decimal literal '{s}'"));
    let t = s.trim();
    let (mantissa, exp10) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut value = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
    if negative {
        value = -value;
    }
    let ten = BigInt::from(10);
    let e = exp10 - frac_part.len() as i64;
    Ok(if e >= 0 {
        BigRational::from_integer(value * Pow::pow(&ten, e as u64))
    } else {
        BigRational::new(value, Pow::pow(&ten, (-e) as u64))
    })
}

/// `round(a + b)` computed from the exact sum.
pub fn add_fp(a: &FpValue, b: &FpValue, fmt: &FloatFormat) -> Result<FpValue, FpError> {
    if a.is_zero() {
        return Ok(*b);
    }
    if b.is_zero() {
        return Ok(*a);
    }
    let (hi, lo) = if a.scale(fmt) >= b.scale(fmt) { (a, b) } else { (b, a) };
    let gap = hi.scale(fmt) - lo.scale(fmt);
    let p = fmt.precision() as i64;
    // |lo| < b^(scale_hi − 2): below half an ulp of hi even at a binade boundary
    if gap >= p + 2 {
        return Ok(*hi);
    }
    let scale = lo.scale(fmt);
    let shifted = fmt.radix_u128().checked_pow(gap as u32).and_then(|f| hi.significand.checked_mul(f));
    match shifted {
        Some(h) => {
            let l = lo.significand;
            if hi.negative == lo.negative {
                match h.checked_add(l) {
                    Some(sum) => round_u128(hi.negative, sum, scale, fmt),
                    None => {
                        let sum = BigUint::from(h) + BigUint::from(l);
                        round_big(hi.negative, &sum, scale, fmt)
                    }
                }
            } else if h >= l {
                round_u128(hi.negative, h - l, scale, fmt)
            } else {
                round_u128(lo.negative, l - h, scale, fmt)
            }
        }
        None => {
            let b = BigUint::from(fmt.radix());
            let h = BigUint::from(hi.significand) * Pow::pow(&b, gap as u64);
            let l = BigUint::from(lo.significand);
            if hi.negative == lo.negative {
                round_big(hi.negative, &(h + l), scale, fmt)
            } else if h >= l {
                round_big(hi.negative, &(h - l), scale, fmt)
            } else {
                round_big(lo.negative, &(l - h), scale, fmt)
            }
        }
    }
}

/// `round(a · b)` computed from the exact product.
pub fn mul_fp(a: &FpValue, b: &FpValue, fmt: &FloatFormat) -> Result<FpValue, FpError> {
    if a.is_zero() || b.is_zero() {
        return Ok(FpValue::ZERO);
    }
    let negative = a.negative != b.negative;
    let scale = a.scale(fmt) + b.scale(fmt);
    match a.significand.checked_mul(b.significand) {
        Some(m) => round_u128(negative, m, scale, fmt),
        None => {
            let m = BigUint::from(a.significand) * BigUint::from(b.significand);
            round_big(negative, &m, scale, fmt)
        }
    }
}

/// `round(a − b)`.
pub fn sub_fp(a: &FpValue, b: &FpValue, fmt: &FloatFormat) -> Result<FpValue, FpError> {
    add_fp(a, &b.neg(), fmt)
}

/// The exact value `1`.
pub fn one(fmt: &FloatFormat) -> FpValue {
    round_rational(&BigRational::one(), fmt).expect("1 is representable when emin <= 0 <= emax")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dec(p: u32) -> FloatFormat {
        FloatFormat::new(10, p, -20, 20).unwrap()
    }

    fn d(s: &str, fmt: &FloatFormat) -> FpValue {
        round_rational(&parse_decimal(s).unwrap(), fmt).unwrap()
    }

    #[test]
    fn representable_values_are_fixed_points() {
        let f = FloatFormat::binary64();
        let one = round_nearest(1.0, &f).unwrap();
        assert_eq!(one.to_f64(&f), 1.0);
        for x in [0.1, -3.75, 1e-300, 12345.678, f64::MAX / 4.0] {
            assert_eq!(round_nearest(x, &f).unwrap().to_f64(&f), x);
        }
    }

    #[test]
    fn decimal_rounding_examples() {
        let f = dec(4);
        assert_eq!(d("0.123456", &f), d("0.1235", &f));
        assert_eq!(d("-0.123456", &f), d("-0.1235", &f));
        assert_eq!(d("0.1235", &f).digits(&f), vec![1, 2, 3, 5]);
        assert_eq!(d("0.1235", &f).exponent(), -1);
        // ties to even
        assert_eq!(d("1.0005", &f), d("1.000", &f));
        assert_eq!(d("1.0015", &f), d("1.002", &f));
        // carry into a new decade
        assert_eq!(d("9.9996", &f), d("10.00", &f));
        assert_eq!(d("9.9996", &f).exponent(), 1);
    }

    #[test]
    fn add_and_mul_examples() {
        let f = dec(4);
        let one = d("1.000", &f);
        assert_eq!(add_fp(&one, &d("0.00004", &f), &f).unwrap(), one);
        let a = d("1.234", &f);
        assert_eq!(mul_fp(&a, &a, &f).unwrap(), d("1.523", &f));
        assert_eq!(mul_fp(&a, &one, &f).unwrap(), a);
        assert_eq!(add_fp(&a, &a.neg(), &f).unwrap(), FpValue::ZERO);
        assert_eq!(sub_fp(&d("1.001", &f), &one, &f).unwrap(), d("0.001", &f));
    }

    #[test]
    fn large_gap_addition_keeps_larger_operand() {
        let f = dec(4);
        let big = d("1.000e10", &f);
        let tiny = d("-3e-10", &f);
        assert_eq!(add_fp(&big, &tiny, &f).unwrap(), big);
        assert_eq!(add_fp(&tiny, &big, &f).unwrap(), big);
    }

    #[test]
    fn overflow_and_underflow() {
        let f = FloatFormat::new(10, 4, -3, 3).unwrap();
        let max = d("9999", &f);
        assert!(matches!(add_fp(&max, &d("1", &f), &f), Err(FpError::Overflow { .. })));
        assert!(matches!(round_nearest(1.0e5, &f), Err(FpError::Overflow { .. })));
        assert_eq!(d("0.0001", &f), FpValue::ZERO);
        let small = d("0.001", &f);
        assert_eq!(mul_fp(&small, &small, &f).unwrap(), FpValue::ZERO);
        assert!(round_nearest(f64::NAN, &f).is_err());
    }

    #[test]
    fn wide_formats_use_the_bigint_path() {
        let f = FloatFormat::new(10, 30, -60, 60).unwrap();
        let third = round_rational(&BigRational::new(1.into(), 3.into()), &f).unwrap();
        let prod = mul_fp(&third, &third, &f).unwrap();
        let exact = BigRational::new(1.into(), 9.into());
        let err = (prod.to_rational(&f) - &exact).abs() / &exact;
        assert!(err <= f.machine_epsilon_exact());
        let sum = add_fp(&third, &third, &f).unwrap();
        assert_eq!(sum.to_rational(&f), third.to_rational(&f) * BigRational::from_integer(2.into()));
    }

    #[test]
    fn comparison_is_numeric() {
        let f = dec(4);
        let mut v = [d("3", &f), d("-2", &f), FpValue::ZERO, d("0.5", &f), d("-20", &f)];
        v.sort_by(|a, b| a.cmp_value(b));
        let as_f: Vec<f64> = v.iter().map(|x| x.to_f64(&f)).collect();
        assert_eq!(as_f, vec![-20.0, -2.0, 0.0, 0.5, 3.0]);
    }

    #[test]
    fn parse_decimal_forms() {
        assert_eq!(parse_decimal("1.5e-3").unwrap(), BigRational::new(3.into(), 2000.into()));
        assert_eq!(parse_decimal("-.25").unwrap(), BigRational::new((-1).into(), 4.into()));
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal("").is_err());
    }
}
