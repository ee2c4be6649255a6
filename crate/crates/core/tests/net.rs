use finprec::fparith::{FloatFormat, FpValue};
use finprec::net::{
    build_cancellation, build_unstable, build_yarotsky, he_init, he_init_with_bias, unstable_admissibility,
    Architecture, FpNetwork, Layer, Network,
};
use finprec::regions::{count_pieces_exact, Line};
use ndarray::array;
use num_traits::{Signed, ToPrimitive};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn b10(p: u32) -> FloatFormat {
    FloatFormat::new(10, p, -60, 60).unwrap()
}

#[test]
fn unstable_network_at_one_loses_everything() {
    let fmt = b10(16);
    let net = build_unstable(10.0, 65, 8).unwrap();
    let adm = unstable_admissibility(10.0, 65, 8, fmt.machine_epsilon());
    assert!((16.0..16.04).contains(&adm), "{adm}");
    let x = FpValue::from_parts(false, 1_000_000_000_000_000, 0, &fmt).unwrap();
    let xr = x.to_rational(&fmt);
    assert_eq!(net.realize_exact(std::slice::from_ref(&xr)).unwrap()[0], xr);
    assert!(net.realize_fp(&[x], &fmt).unwrap()[0].is_zero());
}

#[test]
fn unstable_network_absorbs_only_below_half_ulp() {
    // x + R·x with R = 10·640^5 keeps x once the leading digit of R·x exceeds R·ε ≈ 5.5
    let fmt = b10(16);
    let net = build_unstable(10.0, 65, 8).unwrap();
    let x = FpValue::from_parts(false, 6_000_000_000_000_000, -1, &fmt).unwrap();
    let fp = net.realize_fp(&[x], &fmt).unwrap()[0];
    assert!(!fp.is_zero());
    let xr = x.to_rational(&fmt);
    let rel = ((fp.to_rational(&fmt) - &xr).abs() / &xr).to_f64().unwrap();
    assert!(rel < 1.0 && rel > 0.0);
    let small = FpValue::from_parts(false, 4_000_000_000_000_000, -1, &fmt).unwrap();
    assert!(net.realize_fp(&[small], &fmt).unwrap()[0].is_zero());
}

#[test]
fn inadmissible_unstable_network_keeps_signal() {
    let fmt = b10(16);
    assert!(unstable_admissibility(1.0, 3, 5, fmt.machine_epsilon()) < 16.0);
    let net = build_unstable(1.0, 3, 5).unwrap();
    let x = FpValue::from_parts(false, 5_000_000_000_000_000, -1, &fmt).unwrap();
    let fp = net.realize_fp(&[x], &fmt).unwrap();
    assert!(!fp[0].is_zero());
    let exact = net.realize_exact(&[x.to_rational(&fmt)]).unwrap();
    let rel = ((fp[0].to_rational(&fmt) - &exact[0]).abs() / exact[0].abs()).to_f64().unwrap();
    assert!(rel < 1.0);
    assert_eq!(net.realize_fp(&[FpValue::ZERO], &fmt).unwrap()[0], FpValue::ZERO);
}

#[test]
fn cancellation_error_matches_closed_form() {
    let (lambda, depth, eps) = (2.0f64, 10usize, 1e-3);
    let base = build_cancellation(lambda, depth, &vec![0.0; depth]).unwrap();
    for j in 0..depth {
        let mut p = vec![0.0; depth];
        p[j] = eps;
        let net = build_cancellation(lambda, depth, &p).unwrap();
        let (y0, y) = (base.realize_scalar(1.0), net.realize_scalar(1.0));
        let ratio = (y - y0) / y0;
        let expected = eps * (1.0 + lambda.powi(depth as i32));
        assert!((ratio / expected - 1.0).abs() < 1e-12, "layer {}: {ratio}", j + 1);
    }
}

#[test]
fn yarotsky_pieces_and_error() {
    for l in 2..=10 {
        let net = build_yarotsky(l).unwrap();
        assert_eq!(count_pieces_exact(&net, &Line::unit()).unwrap().piece_count, 1 << (l - 1));
        let worst = (0..=10_000)
            .map(|i| i as f64 / 10_000.0)
            .map(|x| (net.realize_scalar(x) - x * x).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 4f64.powi(-(l as i32)), "L = {l}: {worst}");
        assert_eq!((net.realize_scalar(0.0), net.realize_scalar(1.0)), (0.0, 1.0));
    }
}

#[test]
fn simple_realisations() {
    let one = Network::new(1, vec![Layer::new(array![[2.0]], array![1.0])]).unwrap();
    assert_eq!(one.realize(&[3.0]).unwrap(), vec![7.0]);
    let zero = Network::zeros(&Architecture::uniform(2, 5, 3).unwrap());
    assert_eq!(zero.realize(&[0.3, -4.0]).unwrap(), vec![0.0]);
    let hinge = Network::new(
        1,
        vec![Layer::new(array![[1.0]], array![-0.5]), Layer::new(array![[1.0]], array![0.0])],
    )
    .unwrap();
    assert!((hinge.preactivations(&[0.7]).unwrap()[0][0] - 0.2).abs() < 1e-15);
    assert_eq!(hinge.indicators(&[0.5]).unwrap()[0], vec![true]);
    assert!(hinge.realize(&[1.0, 2.0]).is_err());
}

#[test]
fn he_variance_is_two_over_fan_in() {
    let net = he_init(&Architecture::new(vec![100, 100, 100]).unwrap(), 4);
    for l in net.layers() {
        let n = l.weights.len() as f64;
        let var = l.weights.iter().map(|w| w * w).sum::<f64>() / n;
        assert!((var * 100.0 / 2.0 - 1.0).abs() < 0.05, "{var}");
    }
}

#[test]
fn finite_precision_converges_with_precision() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..10 {
        let net = he_init_with_bias(&Architecture::uniform(1, 6, 4).unwrap(), 0.3, seed);
        let x: f64 = rng.random();
        let exact = net.realize_exact_f64(&[x]).unwrap()[0];
        let errs: Vec<f64> = [4, 8, 16, 32]
            .iter()
            .map(|&p| {
                let fmt = b10(p);
                let y = FpNetwork::new(&net, fmt).unwrap().realize_f64(&[x]).unwrap()[0].to_f64(&fmt);
                (y - exact).abs()
            })
            .collect();
        // non-increasing up to half an ulp of the output at the coarser precision
        for (w, p) in errs.windows(2).zip([4, 8, 16]) {
            assert!(w[1] <= w[0] + 0.5 * 10f64.powi(1 - p as i32) * exact.abs().max(1e-300), "{errs:?}");
        }
        assert!(errs[3] < 1e-12 * exact.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unstable_identity_on_nonnegative_inputs(lambda in 1u32..20, width in 3usize..12, depth in 5usize..9, x in 0.0f64..5.0) {
        let net = build_unstable(lambda as f64, width, depth).unwrap();
        prop_assert_eq!(net.realize_exact_f64(&[x]).unwrap(), vec![x]);
    }

    #[test]
    fn last_layer_is_linear(seed in 0u64..1000, c in -4.0f64..4.0, x in -1.0f64..1.0) {
        let net = he_init_with_bias(&Architecture::uniform(1, 5, 3).unwrap(), 0.5, seed);
        let mut scaled = net.clone();
        let last = scaled.layer_mut(3);
        last.weights *= c;
        last.bias *= c;
        prop_assert!((scaled.realize_scalar(x) - c * net.realize_scalar(x)).abs() < 1e-12);
    }

    #[test]
    fn relu_of_preactivations_is_layer_output(seed in 0u64..1000, x in -2.0f64..2.0) {
        let net = he_init_with_bias(&Architecture::uniform(1, 7, 4).unwrap(), 0.5, seed);
        let pass = net.forward(&[x]).unwrap();
        let pre = net.preactivations(&[x]).unwrap();
        for (j, p) in pre.iter().enumerate() {
            prop_assert_eq!(&p.mapv(|v| v.max(0.0)), &pass.activations[j + 1]);
        }
    }

    #[test]
    fn json_round_trip(seed in 0u64..1000) {
        let net = he_init_with_bias(&Architecture::uniform(2, 4, 3).unwrap(), 1.0, seed);
        prop_assert_eq!(Network::from_json(&net.to_json()).unwrap(), net);
    }
}
