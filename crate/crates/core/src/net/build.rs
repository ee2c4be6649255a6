use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Architecture, Layer, NetError, Network};

/// Gaussian `N(0, 2/fan_in)` weights and zero biases, deterministic in `seed`.
pub fn he_init(arch: &Architecture, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = arch
        .dims()
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || normal.sample(&mut rng));
            Layer::new(weights, Array1::zeros(fan_out))
        })
        .collect();
    Network::new(arch.input_dim(), layers).expect("architecture chains by construction")
}

/// [`he_init`] weights with `N(0, bias_std²)` biases, each layer drawing weights then biases.
pub fn he_init_with_bias(arch: &Architecture, bias_std: f64, seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bias_law = Normal::new(0.0, bias_std.abs()).unwrap();
    let layers = arch
        .dims()
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || normal.sample(&mut rng));
            let bias = Array1::from_shape_simple_fn(fan_out, || bias_law.sample(&mut rng));
            Layer::new(weights, bias)
        })
        .collect();
    Network::new(arch.input_dim(), layers).expect("architecture chains by construction")
}

/// Width-4 sawtooth network approximating `x ↦ x²` on `[0, 1]` with error at most `4^(−L)`.
///
/// Neuron 1 carries the running approximation `x − Σ g_k / 4^k`; neurons 2–4
/// build the next hat `g_k = g ∘ g_(k−1)` at scale `4^(1−k)`. The realisation
/// has `2^(L−1)` affine pieces and all parameters are dyadic, hence exact in `f64`.
pub fn build_yarotsky(depth: usize) -> Result<Network, NetError> {
    if depth < 2 {
        return Err(NetError::InvalidArchitecture("the squaring network needs L >= 2".into()));
    }
    let hidden_bias = |l: usize| -> Array1<f64> {
        let s = 4f64.powi(1 - l as i32);
        Array1::from(vec![0.0, 0.0, -s, -2.0 * s])
    };
    let interior = Array2::from_shape_vec(
        (4, 4),
        vec![
            1.0, -0.25, 0.5, -0.25, //
            0.0, 0.5, -1.0, 0.5, //
            0.0, 0.5, -1.0, 0.5, //
            0.0, 0.5, -1.0, 0.5,
        ],
    )
    .unwrap();
    let mut layers = Vec::with_capacity(depth);
    layers.push(Layer::new(
        Array2::from_shape_vec((4, 1), vec![1.0, 2.0, 2.0, 2.0]).unwrap(),
        hidden_bias(1),
    ));
    for l in 2..depth {
        layers.push(Layer::new(interior.clone(), hidden_bias(l)));
    }
    layers.push(Layer::new(
        Array2::from_shape_vec((1, 4), vec![1.0, -0.25, 0.5, -0.25]).unwrap(),
        Array1::zeros(1),
    ));
    Network::new(1, layers)
}

/// The network `Φ_{λ,N,L}`: exactly the identity on `x >= 0`, yet identically
/// zero in low enough precision.
///
/// Architecture `(1, N, …, N, 2, 2, 1)` with `L − 3` layers of width `N`.
pub fn build_unstable(weight_scale: f64, width: usize, depth: usize) -> Result<Network, NetError> {
    if width < 3 || depth < 5 {
        return Err(NetError::InvalidArchitecture(format!(
            "unstable network needs N >= 3 and L >= 5, got N = {width}, L = {depth}"
        )));
    }
    let lam = weight_scale;
    let n = width;
    let mut layers = Vec::with_capacity(depth);

    let mut a1 = Array2::from_elem((n, 1), lam);
    a1[[0, 0]] = 1.0;
    layers.push(Layer::new(a1, Array1::zeros(n)));

    let mut dense = Array2::from_elem((n, n), lam);
    dense.row_mut(0).fill(0.0);
    dense.column_mut(0).fill(0.0);
    dense[[0, 0]] = 1.0;
    for _ in 2..=depth - 3 {
        layers.push(Layer::new(dense.clone(), Array1::zeros(n)));
    }

    let mut collapse = Array2::zeros((2, n));
    collapse[[0, 0]] = 1.0;
    collapse.row_mut(1).slice_mut(ndarray::s![1..]).fill(lam);
    layers.push(Layer::new(collapse, Array1::zeros(2)));

    let pair = Array2::from_shape_vec((2, 2), vec![1.0, lam, 0.0, lam]).unwrap();
    layers.push(Layer::new(pair, Array1::zeros(2)));
    layers.push(Layer::new(
        Array2::from_shape_vec((1, 2), vec![1.0, -1.0]).unwrap(),
        Array1::zeros(1),
    ));
    Network::new(1, layers)
}

/// Left side of the admissibility inequality `(L−3)·log10(N−1) + (L−1)·log10(λ−2ε) >= 16`.
pub fn unstable_admissibility(weight_scale: f64, width: usize, depth: usize, eps: f64) -> f64 {
    (depth as f64 - 3.0) * ((width as f64) - 1.0).log10()
        + (depth as f64 - 1.0) * (weight_scale - 2.0 * eps).log10()
}

/// The `1 → 2 → … → 2 → 1` product network whose output cancels two paths of size `λ^L`.
///
/// `perturbations[j−1]` is the relative perturbation of layer `j`. With all
/// perturbations zero the realisation is the identity on `x >= 0`.
pub fn build_cancellation(weight_scale: f64, depth: usize, perturbations: &[f64]) -> Result<Network, NetError> {
    if depth < 3 {
        return Err(NetError::InvalidArchitecture("cancellation network needs L >= 3".into()));
    }
    if perturbations.len() != depth {
        return Err(NetError::DimensionMismatch {
            expected: depth,
            got: perturbations.len(),
        });
    }
    let lam = weight_scale;
    let e = perturbations;
    let mut layers = Vec::with_capacity(depth);
    layers.push(Layer::new(
        Array2::from_shape_vec((2, 1), vec![(1.0 + e[0]) * lam, lam]).unwrap(),
        Array1::zeros(2),
    ));
    for ej in &e[1..depth - 1] {
        layers.push(Layer::new(
            Array2::from_shape_vec((2, 2), vec![(1.0 + ej) * lam, 0.0, 0.0, lam]).unwrap(),
            Array1::zeros(2),
        ));
    }
    let last = (1.0 + e[depth - 1]) * (1.0 + lam.powi(-(depth as i32))) * lam;
    layers.push(Layer::new(
        Array2::from_shape_vec((1, 2), vec![last, -lam]).unwrap(),
        Array1::zeros(1),
    ));
    Network::new(1, layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn he_init_is_seeded_with_zero_bias() {
        let arch = Architecture::uniform(1, 20, 4).unwrap();
        assert_eq!(he_init(&arch, 11), he_init(&arch, 11));
        assert_ne!(he_init(&arch, 11), he_init(&arch, 12));
        assert!(he_init(&arch, 11).layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn he_init_variance() {
        let arch = Architecture::new(vec![50, 200, 1]).unwrap();
        let net = he_init(&arch, 5);
        let w = &net.layer(1).weights;
        let n = w.len() as f64;
        let mean = w.sum() / n;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / (2.0 / 50.0) - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn yarotsky_knots() {
        let net = build_yarotsky(3).unwrap();
        assert_eq!(net.realize_scalar(0.0), 0.0);
        assert_eq!(net.realize_scalar(1.0), 1.0);
        assert_eq!(net.realize_scalar(0.5), 0.25);
        assert_eq!(build_yarotsky(5).unwrap().subnetwork(2).unwrap().layers(), &build_yarotsky(5).unwrap().layers()[..2]);
    }

    #[test]
    fn unstable_shapes_and_identity() {
        let net = build_unstable(10.0, 65, 8).unwrap();
        assert_eq!(net.architecture().dims(), &[1, 65, 65, 65, 65, 65, 2, 2, 1]);
        assert_eq!(net.realize_exact_f64(&[0.75]).unwrap(), vec![0.75]);
        assert_eq!(net.realize_exact_f64(&[-1.0]).unwrap(), vec![0.0]);
        assert!(build_unstable(10.0, 2, 8).is_err());
        let adm = unstable_admissibility(10.0, 65, 8, 5e-16);
        assert!(adm >= 16.0 && adm < 16.04, "{adm}");
    }

    #[test]
    fn cancellation_identity() {
        let net = build_cancellation(2.0, 10, &[0.0; 10]).unwrap();
        assert!((net.realize_scalar(1.0) - 1.0).abs() < 1e-12);
        let mut e = [0.0; 10];
        e[4] = 1e-3;
        let out = build_cancellation(2.0, 10, &e).unwrap().realize_scalar(1.0);
        assert!((out - 2.025).abs() < 1e-12, "{out}");
    }
}
