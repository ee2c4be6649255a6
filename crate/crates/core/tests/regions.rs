use finprec::net::{build_yarotsky, he_init_with_bias, Architecture, Layer, Network};
use finprec::oracle::{grid_piece_count, GridOracleConfig};
use finprec::regions::{
    count_activation_regions, count_pieces, count_pieces_exact, neuron_function, telgarsky_bound, theorem_threshold,
    Line, ThresholdInputs,
};
use ndarray::array;
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus_net(rng: &mut ChaCha8Rng, seed: u64) -> Network {
    let depth = rng.random_range(2..=5);
    let width = rng.random_range(2..=20);
    he_init_with_bias(&Architecture::uniform(1, width, depth).unwrap(), 0.5, seed)
}

#[test]
fn exact_counts_agree_with_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let cfg = GridOracleConfig::default();
    let line = Line::unit();
    let mut nontrivial = 0;
    for seed in 0..50 {
        let net = corpus_net(&mut rng, 1000 + seed);
        let census = count_pieces(&net, &line).unwrap();
        assert_eq!(census.piece_count, grid_piece_count(&net, &line, &cfg), "net {seed}");
        assert_eq!(census.piece_count, count_pieces_exact(&net, &line).unwrap().piece_count);
        let arch = net.architecture();
        let bound = telgarsky_bound(2, arch.max_width() as u64, net.depth() as u32);
        assert!(BigUint::from(census.activation_region_count) <= bound);
        nontrivial += usize::from(census.piece_count > 2);
    }
    assert!(nontrivial >= 10, "{nontrivial}");
}

#[test]
fn single_hinge_counts() {
    let net = Network::new(
        1,
        vec![Layer::new(array![[1.0]], array![-0.5]), Layer::new(array![[1.0]], array![0.0])],
    )
    .unwrap();
    assert_eq!(count_activation_regions(&net, &Line::unit()).unwrap(), 2);
    assert_eq!(count_pieces(&net, &Line::unit()).unwrap().piece_count, 2);
}

#[test]
fn yarotsky_regions_bound_pieces() {
    for l in 2..=8 {
        let c = count_pieces_exact(&build_yarotsky(l).unwrap(), &Line::unit()).unwrap();
        assert_eq!(c.piece_count, 1 << (l - 1));
        assert!(c.activation_region_count >= c.piece_count);
        assert!(BigUint::from(c.activation_region_count) <= telgarsky_bound(2, 4, l as u32));
    }
}

#[test]
fn telgarsky_arithmetic() {
    assert_eq!(telgarsky_bound(2, 3, 2), BigUint::from(6u8));
    assert_eq!(telgarsky_bound(2, 50, 1), BigUint::from(1u8));
}

fn threshold_by_hand(n: f64, depth: usize, step: f64, eps: &[f64], c0: f64, nu: f64, len: f64) -> f64 {
    let mut terms = vec![2.0 * (2.0 * n).powi(depth as i32 - 1)];
    for jp in 2..=depth {
        let eh = eps[..jp - 1].iter().cloned().fold(f64::INFINITY, f64::min);
        let add = 2.0 * c0 / step * len * jp as f64 / eh * n.powf(nu) * n.ln();
        terms.push(2.0 * (1.0 + add) * (2.0 * n).powi((depth - jp) as i32));
    }
    terms.into_iter().fold(f64::INFINITY, f64::min)
}

#[test]
fn threshold_matches_direct_evaluation() {
    let eps = [1e-3; 5];
    let inp = ThresholdInputs {
        neurons: 50,
        depth: 5,
        step: 0.02,
        eps: &eps,
        c0: 0.1,
        nu: 2.0,
        length: 1.0,
    };
    let (value, _) = theorem_threshold(&inp);
    let direct = threshold_by_hand(50.0, 5, 0.02, &eps, 0.1, 2.0, 1.0);
    assert!((value / direct - 1.0).abs() < 1e-12, "{value} vs {direct}");
    // (2N)^(L−1) = 100^4 wins against every perturbed term here
    assert_eq!(value, 2e8);
    let single = ThresholdInputs { depth: 1, eps: &eps[..1], ..inp };
    assert_eq!(theorem_threshold(&single), (2.0, 1));
}

#[test]
fn output_kinks_lie_on_hidden_zero_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let line = Line::unit();
    for seed in 0..20 {
        let net = corpus_net(&mut rng, 500 + seed);
        let census = count_pieces(&net, &line).unwrap();
        let hidden: Vec<_> = (1..net.depth())
            .flat_map(|j| (0..net.layer(j).out_dim()).map(move |k| (j, k)))
            .map(|(j, k)| neuron_function(&net, &line, j, k).unwrap())
            .collect();
        for &t in &census.output_breakpoints {
            let on_zero_set = hidden.iter().any(|h| {
                let scale = h.values().iter().fold(1e-300, |m: f64, v| m.max(v.abs()));
                h.eval(t).abs() <= 1e-9 * scale
            });
            assert!(on_zero_set, "net {seed}: kink at {t}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pieces_never_exceed_regions(seed in 0u64..100_000, width in 1usize..12, depth in 2usize..6) {
        let net = he_init_with_bias(&Architecture::uniform(1, width, depth).unwrap(), 0.5, seed);
        let c = count_pieces(&net, &Line::interval(-1.0, 1.0).unwrap()).unwrap();
        prop_assert!(c.piece_count <= c.activation_region_count);
        prop_assert!(BigUint::from(c.activation_region_count) <= telgarsky_bound(2, width as u64, depth as u32));
    }

    #[test]
    fn larger_noise_never_raises_threshold(e in proptest::collection::vec(1e-6f64..1.0, 5), f in 1.0f64..10.0, c0 in 1e-3f64..1.0) {
        let base = ThresholdInputs { neurons: 30, depth: 5, step: 0.05, eps: &e, c0, nu: 2.0, length: 1.0 };
        let bigger: Vec<f64> = e.iter().map(|v| v * f).collect();
        let raised = ThresholdInputs { eps: &bigger, ..base.clone() };
        prop_assert!(theorem_threshold(&raised).0 <= theorem_threshold(&base).0);
    }
}
