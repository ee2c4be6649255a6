use finprec::fparith::{
    add_fp, machine_epsilon, matvec_fp, mul_fp, parse_decimal, round_nearest, round_rational, FloatFormat, FpValue,
};
use finprec::oracle::reference_round;
use ndarray::array;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fmt(s: &str) -> FloatFormat {
    s.parse().unwrap()
}

fn random_value(rng: &mut impl Rng, f: &FloatFormat, exp_span: i32) -> FpValue {
    let b = f.radix() as u128;
    let lo = b.pow(f.precision() - 1);
    let sig = rng.random_range(lo..lo * b);
    let e = rng.random_range(-exp_span..=exp_span);
    FpValue::from_parts(rng.random(), sig, e, f).unwrap()
}

fn within_contract(exact: &BigRational, got: &FpValue, f: &FloatFormat) -> bool {
    let eps = f.machine_epsilon_exact();
    let err = (got.to_rational(f) - exact).abs();
    err <= &eps * exact.abs() && err <= &eps * got.to_rational(f).abs()
}

#[test]
fn rounding_contract_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for name in ["b2p24e-126:127", "b2p53e-1022:1023", "b10p4e-30:30", "b10p16e-30:30"] {
        let f = fmt(name);
        let mut violations = 0;
        for _ in 0..100_000 {
            let a = random_value(&mut rng, &f, 6);
            let b = random_value(&mut rng, &f, 6);
            let (ra, rb) = (a.to_rational(&f), b.to_rational(&f));
            let sum = &ra + &rb;
            let s = add_fp(&a, &b, &f).unwrap();
            if !(sum.is_zero() && s.is_zero()) && !within_contract(&sum, &s, &f) {
                violations += 1;
            }
            if !within_contract(&(&ra * &rb), &mul_fp(&a, &b, &f).unwrap(), &f) {
                violations += 1;
            }
        }
        assert_eq!(violations, 0, "{name}");
    }
}

#[test]
fn epsilon_values() {
    assert_eq!(machine_epsilon(&FloatFormat::binary64()), 2f64.powi(-53));
    assert_eq!(machine_epsilon(&FloatFormat::binary32()), 2f64.powi(-24));
    assert_eq!(fmt("b10p16e-30:30").machine_epsilon_exact(), parse_decimal("5e-16").unwrap());
}

#[test]
fn decimal_examples_match_reference() {
    let f = fmt("b10p4e-30:30");
    let x = parse_decimal("0.123456").unwrap();
    let r = round_rational(&x, &f).unwrap();
    assert_eq!(r.to_rational(&f), parse_decimal("0.1235").unwrap());
    assert_eq!(round_rational(&-x, &f).unwrap(), r.neg());
    let a = round_rational(&parse_decimal("1.234").unwrap(), &f).unwrap();
    assert_eq!(mul_fp(&a, &a, &f).unwrap().to_rational(&f), parse_decimal("1.523").unwrap());
    let small = round_rational(&parse_decimal("0.00004").unwrap(), &f).unwrap();
    let one = round_nearest(1.0, &f).unwrap();
    assert_eq!(add_fp(&one, &small, &f).unwrap(), one);
}

#[test]
fn summation_order_matters() {
    let f = fmt("b10p4e-30:30");
    let v = |s: &str| round_rational(&parse_decimal(s).unwrap(), &f).unwrap();
    let a = array![[1.0, 1.0, 1.0]];
    let fwd = matvec_fp(&a, &[v("1.000"), v("0.0004"), v("0.0004")], &f).unwrap();
    let rev = matvec_fp(&a, &[v("0.0004"), v("0.0004"), v("1.000")], &f).unwrap();
    assert_eq!(fwd[0].to_rational(&f), parse_decimal("1.000").unwrap());
    assert_eq!(rev[0].to_rational(&f), parse_decimal("1.001").unwrap());
    let three = matvec_fp(&a, &[v("0.5001"), v("0.5001"), v("0.0001")], &f).unwrap();
    assert_eq!(three[0].to_rational(&f), parse_decimal("1.000").unwrap());
}

fn rational() -> impl Strategy<Value = BigRational> {
    (any::<i64>(), 1u64..u64::MAX, -20i32..20).prop_map(|(n, d, e)| {
        let scale = BigRational::from_integer(BigInt::from(10)).pow(e);
        BigRational::new(BigInt::from(n), BigInt::from(d)) * scale
    })
}

/// All nonnegative elements of b10p2 with exponents in [-2, 2].
fn enumerate_b10p2(f: &FloatFormat) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero()];
    for e in f.emin()..=f.emax() {
        for sig in 10u128..100 {
            out.push(FpValue::from_parts(false, sig, e, f).unwrap().to_rational(f));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn agrees_with_long_division(x in rational(), which in 0usize..4) {
        let f = fmt(["b2p24e-200:200", "b2p53e-200:200", "b10p4e-60:60", "b10p16e-60:60"][which]);
        let ours = round_rational(&x, &f).unwrap();
        match reference_round(&x, f.radix(), f.precision()) {
            None => prop_assert!(ours.is_zero()),
            Some((neg, sig, e)) => {
                prop_assert_eq!(ours, FpValue::from_parts(neg, sig, e as i32, &f).unwrap());
            }
        }
    }

    #[test]
    fn negation_symmetry(x in rational()) {
        let f = fmt("b10p4e-60:60");
        prop_assert_eq!(round_rational(&-x.clone(), &f).unwrap(), round_rational(&x, &f).unwrap().neg());
    }

    #[test]
    fn deterministic(x in rational()) {
        let f = fmt("b2p53e-200:200");
        prop_assert_eq!(round_rational(&x, &f).unwrap(), round_rational(&x, &f).unwrap());
    }

    #[test]
    fn representable_values_are_fixed(x in proptest::num::f64::NORMAL) {
        let f = FloatFormat::binary64();
        prop_assert_eq!(round_nearest(x, &f).unwrap().to_f64(&f), x);
    }

    #[test]
    fn nearest_among_all_b10p2(n in 1i64..2_000_000, d in 1i64..100_000) {
        let f = fmt("b10p2e-2:2");
        let x = BigRational::new(BigInt::from(n), BigInt::from(d));
        // normal range only: below b^emin the format flushes to zero
        prop_assume!(x < BigRational::from_integer(BigInt::from(990)));
        prop_assume!(x >= BigRational::new(BigInt::from(1), BigInt::from(100)));
        let got = round_rational(&x, &f).unwrap().to_rational(&f);
        let err = (&got - &x).abs();
        for m in enumerate_b10p2(&f) {
            prop_assert!(err <= (&m - &x).abs());
        }
    }
}
