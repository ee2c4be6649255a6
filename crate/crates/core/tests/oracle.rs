use finprec::graddesc::{exact_updates, Dataset, Target};
use finprec::net::{he_init_with_bias, Architecture, Layer, Network};
use finprec::oracle::{
    finite_difference_updates, lemma1_monte_carlo, prop33_monte_carlo, rescale_to_unit_slope, MonteCarloError,
};
use finprec::regions::{count_pieces, Line, PiecewiseLinear1D};
use ndarray::array;

#[test]
fn identity_level_sets() {
    let h = PiecewiseLinear1D::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    let r = lemma1_monte_carlo(&h, 0.0, 1.0, 2, 10_000, 4).unwrap();
    assert_eq!((r.tails[0].empirical, r.tails[0].bound), (1.0, 1.0));
    assert_eq!(r.tails[1].empirical, 0.0);
    assert!(r.holds());
}

#[test]
fn sawtooth_tails_respect_the_level_set_bound() {
    let h = PiecewiseLinear1D::sawtooth(8, 1.0 / 16.0);
    assert_eq!(h.max_abs_slope(), 1.0);
    let mut informative = 0;
    for (i, (lo, delta)) in [(0.0, 1.0 / 16.0), (0.0, 0.125), (-0.05, 0.5), (0.0, 1.0), (-1.0, 4.0), (0.02, 16.0)]
        .into_iter()
        .enumerate()
    {
        let r = lemma1_monte_carlo(&h, lo, delta, 8, 10_000, 40 + i as u64).unwrap();
        for p in &r.tails {
            assert!(p.holds(), "δ = {delta}, t = {}: {} > {}", p.q, p.empirical, p.bound);
            informative += usize::from(p.bound < 1.0);
        }
    }
    assert!(informative >= 16);
}

fn prop33_corpus() -> Vec<(Network, Dataset)> {
    (0..5)
        .map(|s| {
            let net = he_init_with_bias(&Architecture::new(vec![1, 10, 10, 1]).unwrap(), 0.5, 300 + s);
            let net = rescale_to_unit_slope(&net, &Line::unit()).unwrap();
            (net, Dataset::sample(Target::Sine, 32, (0.0, 1.0), 300 + s))
        })
        .collect()
}

#[test]
fn rescaling_bounds_preactivation_slopes() {
    for (net, _) in prop33_corpus() {
        let c = count_pieces(&net, &Line::unit()).unwrap();
        assert!(c.max_abs_slope() <= 1.0 + 1e-12, "{}", c.max_abs_slope());
    }
}

#[test]
fn new_breakpoint_tails_respect_bounds() {
    let line = Line::unit();
    let step = 0.1;
    let mut informative = 0;
    for (i, (net, data)) in prop33_corpus().into_iter().enumerate() {
        let upd = exact_updates(&net, &data).unwrap();
        // the neuron with the largest bias update in each hidden layer
        for j in 1..net.depth() {
            let u = upd.bias_update(j);
            let k = (0..u.len()).max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).unwrap();
            if u[k] == 0.0 {
                continue;
            }
            let eps = 4.0 * line.length() / (step * u[k].abs());
            let r = prop33_monte_carlo(&net, &data, &line, j, k, eps, step, 10, 10_000, 7 + i as u64).unwrap();
            assert!(r.max_slope <= 1.0 + 1e-9);
            assert!(r.holds(), "net {i} neuron ({j}, {k}): {r:?}");
            informative += r.tails.iter().filter(|p| p.bound < 1.0).count();
        }
    }
    assert!(informative > 0);
}

#[test]
fn monotone_neuron_gains_at_most_one_breakpoint() {
    let net = Network::new(
        1,
        vec![Layer::new(array![[0.8], [0.3]], array![-0.4, 0.1]), Layer::new(array![[1.0, -1.0]], array![0.0])],
    )
    .unwrap();
    let data = Dataset::new(vec![vec![0.2], vec![0.9]], vec![1.0, -1.0]).unwrap();
    let r = prop33_monte_carlo(&net, &data, &Line::unit(), 1, 0, 50.0, 0.1, 3, 10_000, 2).unwrap();
    assert!(r.tails[0].empirical > 0.0);
    assert_eq!(r.tails[1].empirical, 0.0);
    assert!(r.holds());
}

#[test]
fn tiny_noise_is_vacuous_and_zero_update_is_rejected() {
    let (net, data) = prop33_corpus().remove(0);
    let r = prop33_monte_carlo(&net, &data, &Line::unit(), 1, 0, 1e-12, 0.1, 3, 1000, 1);
    match r {
        Ok(r) => assert!(r.tails.iter().all(|p| p.bound > 1.0) && r.holds()),
        Err(MonteCarloError::ZeroUpdate { .. }) => {}
        Err(e) => panic!("{e}"),
    }
    let zero = Network::new(
        1,
        vec![Layer::new(array![[1.0]], array![-2.0]), Layer::new(array![[1.0]], array![0.0])],
    )
    .unwrap();
    let d = Dataset::new(vec![vec![0.5]], vec![1.0]).unwrap();
    assert!(matches!(
        prop33_monte_carlo(&zero, &d, &Line::unit(), 1, 0, 1.0, 0.1, 3, 100, 1),
        Err(MonteCarloError::ZeroUpdate { .. })
    ));
}

#[test]
fn finite_differences_exact_on_affine_coordinates() {
    let net = Network::new(1, vec![Layer::new(array![[1.5]], array![-0.25])]).unwrap();
    let data = Dataset::new(vec![vec![0.4], vec![-1.0]], vec![0.3, 2.0]).unwrap();
    let exact = exact_updates(&net, &data).unwrap();
    for h in [1e-4, 1e-5, 1e-6] {
        let fd = finite_difference_updates(&net, &data, h);
        // the risk is quadratic in each coordinate, so the only error is roundoff
        assert!((fd.updates.bias[0][0] - exact.bias[0][0]).abs() < 1e-8);
        assert!((fd.updates.weights[0][[0, 0]] - exact.weights[0][[0, 0]]).abs() < 1e-8);
    }
}
