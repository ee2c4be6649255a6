use finprec::assumptions::{
    assumption_a_statistic, bias_update_histogram, check_dead_neurons, dagger, line_probe, max_preactivation_slope,
    max_preactivation_slope_exact, LogHistogram,
};
use finprec::graddesc::UpdateBundle;
use finprec::net::{build_yarotsky, Layer, Network};
use finprec::regions::Line;
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;

fn bundle(hidden: &[Vec<f64>]) -> UpdateBundle {
    let mut bias: Vec<Array1<f64>> = hidden.iter().map(|v| Array1::from(v.clone())).collect();
    bias.push(Array1::zeros(1));
    let weights = bias.iter().map(|b| Array2::zeros((b.len(), 1))).collect();
    UpdateBundle { bias, weights }
}

#[test]
fn statistic_hand_cases() {
    assert_eq!(assumption_a_statistic(&bundle(&[vec![0.0; 4], vec![0.0; 3]]), 2.0, 8), 0.0);
    let ones = bundle(&[vec![1.0, -1.0, 0.0], vec![1.0]]);
    assert_eq!(assumption_a_statistic(&ones, 2.0, 10), 3.0 / 100.0);
    assert_eq!(dagger(0.0), 0.0);
    assert_eq!(dagger(0.25), 4.0);
}

#[test]
fn zero_update_neurons_enter_only_through_the_count() {
    let a = bundle(&[vec![0.5, 0.1], vec![2.0]]);
    let b = bundle(&[vec![0.5, 0.1, 0.0, 0.0], vec![2.0, 0.0]]);
    assert_eq!(assumption_a_statistic(&a, 2.0, 12), assumption_a_statistic(&b, 2.0, 12));
}

#[test]
fn never_firing_neuron_is_not_a_violation() {
    let net = Network::new(
        1,
        vec![Layer::new(array![[1e-6], [1.0]], array![-10.0, 0.0]), Layer::new(array![[1.0, 1.0]], array![0.0])],
    )
    .unwrap();
    let probe = line_probe(&Line::unit(), 1000);
    assert!(check_dead_neurons(&net, &bundle(&[vec![0.0, 0.3]]), &probe).unwrap().is_empty());
}

#[test]
fn constant_positive_neuron_with_zero_update_violates() {
    let net = Network::new(
        1,
        vec![Layer::new(array![[0.0], [1.0]], array![0.7, 0.0]), Layer::new(array![[1.0, 1.0]], array![0.0])],
    )
    .unwrap();
    let probe = line_probe(&Line::unit(), 10);
    let v = check_dead_neurons(&net, &bundle(&[vec![0.0, 0.3]]), &probe).unwrap();
    assert_eq!(v.len(), 1);
    assert_eq!((v[0].layer, v[0].neuron, v[0].preactivation), (1, 0, 0.7));
}

#[test]
fn slope_reports() {
    let single = Network::new(
        1,
        vec![Layer::new(array![[0.5]], array![0.2]), Layer::new(array![[1.0]], array![0.0])],
    )
    .unwrap();
    assert_eq!(max_preactivation_slope(&single, &Line::unit()).unwrap().max_abs_slope, 0.5);
    let identity = Network::new(
        1,
        vec![Layer::new(array![[1.0]], array![0.0]), Layer::new(array![[1.0]], array![0.0])],
    )
    .unwrap();
    let r = max_preactivation_slope(&identity, &Line::unit()).unwrap();
    assert!(r.bounded_by_one() && r.max_abs_slope == 1.0);
}

#[test]
fn squaring_network_slopes_match_hat_composition() {
    // layer 1: x, 2x, 2x − 1, 2x − 2; layer 2: x − g/4 and g/2 − shifts, g the unit hat
    let r = max_preactivation_slope_exact(&build_yarotsky(3).unwrap(), &Line::unit()).unwrap();
    assert_eq!(r.per_neuron, vec![vec![1.0, 2.0, 2.0, 2.0], vec![1.5, 1.0, 1.0, 1.0]]);
    assert_eq!(r.max_abs_slope, 2.0);
}

#[test]
fn inverse_root_density_gives_half_slope() {
    // U² has density x^(−1/2)/2 on (0, 1]
    let samples: Vec<f64> = (0..200_000).map(|i| ((i as f64 + 0.5) / 200_000.0).powi(2)).collect();
    let (_, fit) = bias_update_histogram(&samples, 10).unwrap();
    assert!((fit.slope + 0.5).abs() <= 0.1, "{}", fit.slope);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn statistic_scales_inversely(v in proptest::collection::vec(-5.0f64..5.0, 1..20), c in 0.01f64..100.0) {
        let a = bundle(&[v.clone()]);
        let b = bundle(&[v.iter().map(|x| x * c).collect()]);
        let (sa, sb) = (assumption_a_statistic(&a, 2.0, 25), assumption_a_statistic(&b, 2.0, 25));
        prop_assert!((sb * c - sa).abs() <= 1e-12 * sa.abs().max(1e-300));
    }

    #[test]
    fn histogram_mass_is_one(v in proptest::collection::vec(1e-9f64..2.0, 1..500)) {
        let mut h = LogHistogram::new(8);
        h.extend(v.iter().copied());
        let rows = h.rows();
        if h.retained() > 0 {
            let mass: f64 = rows.iter().map(|r| r.2).sum();
            prop_assert!((mass - 1.0).abs() < 1e-12);
        }
        prop_assert_eq!(h.retained() + h.excluded_large() + h.zeros(), v.len() as u64);
    }
}
