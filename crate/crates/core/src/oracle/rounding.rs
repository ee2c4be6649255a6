use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Correctly rounded `(negative, significand, exponent)` of `x` with `precision`
/// radix-`radix` digits, ties to even, ignoring exponent limits.
///
/// Works on the digit expansion produced by schoolbook long division, so it
/// shares nothing with the library rounding beyond big-integer arithmetic.
/// The result means `±significand · radix^(exponent − precision + 1)`.
pub fn reference_round(x: &BigRational, radix: u32, precision: u32) -> Option<(bool, u128, i64)> {
    assert!(radix >= 2 && radix % 2 == 0, "even radix");
    assert!(precision >= 1);
    if x.is_zero() {
        return None;
    }
    let negative = x.is_negative();
    let n = x.numer().abs().to_biguint().unwrap();
    let d = x.denom().to_biguint().unwrap();
    let b = BigUint::from(radix);
    let (int, mut rem) = n.div_rem(&d);

    // leading digits: integer part then fraction, tracking the position of the first one
    let mut digits: Vec<u32> = if int.is_zero() { Vec::new() } else { int.to_radix_be(radix).iter().map(|&v| v as u32).collect() };
    let mut exponent = if digits.is_empty() { 0 } else { digits.len() as i64 - 1 };
    let want = precision as usize + 1;
    while digits.len() < want {
        rem *= &b;
        let (q, r) = rem.div_rem(&d);
        rem = r;
        let q = q.to_u32().unwrap();
        if digits.is_empty() {
            exponent -= 1;
            if q == 0 {
                continue;
            }
        }
        digits.push(q);
    }
    let p = precision as usize;
    let guard = digits[p];
    let sticky = digits[p + 1..].iter().any(|&v| v != 0) || !rem.is_zero();
    let half = radix / 2;
    let mut sig: Vec<u32> = digits[..p].to_vec();
    let up = guard > half || (guard == half && (sticky || sig[p - 1] % 2 == 1));
    if up {
        let mut i = p;
        loop {
            if i == 0 {
                sig.insert(0, 1);
                sig.pop();
                exponent += 1;
                break;
            }
            i -= 1;
            if sig[i] + 1 == radix {
                sig[i] = 0;
            } else {
                sig[i] += 1;
                break;
            }
        }
    }
    let mut value: u128 = 0;
    for v in sig {
        value = value.checked_mul(radix as u128)?.checked_add(v as u128)?;
    }
    Some((negative, value, exponent))
}

/// `reference_round` rendered as a decimal scientific string such as `-1.235e-1`.
pub fn reference_round_decimal(x: &BigRational, precision: u32) -> String {
    match reference_round(x, 10, precision) {
        None => "0".into(),
        Some((neg, sig, e)) => {
            let s = sig.to_string();
            let (head, tail) = s.split_at(1);
            let sign = if neg { "-" } else { "" };
            if tail.is_empty() {
                format!("{sign}{head}e{e}")
            } else {
                format!("{sign}{head}.{tail}e{e}")
            }
        }
    }
}
