//! Feed-forward ReLU networks and their realisations.

mod build;
mod io;

use ndarray::{Array1, Array2, Axis};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::fparith::{add_fp, round_nearest, FloatFormat, FpError, FpMatrix, FpValue};

pub use build::{
    build_cancellation, build_unstable, build_yarotsky, he_init, he_init_with_bias, unstable_admissibility,
};
pub use io::NetworkDoc;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("layer index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("non-finite parameter value")]
    NonFinite,
    #[error(transparent)]
    Fp(#[from] FpError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// `(d, N_1, …, N_L)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    dims: Vec<usize>,
}

impl Architecture {
    pub fn new(dims: Vec<usize>) -> Result<Self, NetError> {
        if dims.len() < 2 {
            return Err(NetError::InvalidArchitecture(
                "need an input dimension and at least one layer".into(),
            ));
        }
        if dims.contains(&0) {
            return Err(NetError::InvalidArchitecture(format!("zero width in {dims:?}")));
        }
        Ok(Self { dims })
    }

    /// `d` followed by `depth − 1` hidden layers of `width` and one output.
    pub fn uniform(input_dim: usize, width: usize, depth: usize) -> Result<Self, NetError> {
        if depth == 0 {
            return Err(NetError::InvalidArchitecture("depth must be >= 1".into()));
        }
        let mut dims = vec![input_dim];
        dims.extend(std::iter::repeat_n(width, depth - 1));
        dims.push(1);
        Self::new(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn depth(&self) -> usize {
        self.dims.len() - 1
    }

    /// `N = d + Σ N_j`.
    pub fn neuron_count(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn max_width(&self) -> usize {
        self.dims[1..].iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>) -> Self {
        Self { weights, bias }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(Array2::zeros((rows, cols)), Array1::zeros(rows))
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    /// `A x + b`.
    pub fn affine(&self, x: &Array1<f64>) -> Array1<f64> {
        self.weights.dot(x) + &self.bias
    }
}

/// `Φ = ((A_1, b_1), …, (A_L, b_L))` with ReLU on every layer but the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
}

/// Activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `x^(0), …, x^(L)`; entry `L` is the output.
    pub activations: Vec<Array1<f64>>,
    /// `A_j x^(j−1) + b_j` for `j = 1..=L`.
    pub preactivations: Vec<Array1<f64>>,
}

impl ForwardPass {
    pub fn output(&self) -> &Array1<f64> {
        self.activations.last().unwrap()
    }

    /// `I_j(x)` for hidden layer `j` (1-based): 1 where the preactivation is `>= 0`.
    pub fn indicator(&self, j: usize) -> Array1<f64> {
        self.preactivations[j - 1].mapv(|v| if v >= 0.0 { 1.0 } else { 0.0 })
    }
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::InvalidArchitecture("a network needs at least one layer".into()));
        }
        if input_dim == 0 {
            return Err(NetError::InvalidArchitecture("input dimension must be >= 1".into()));
        }
        let mut prev = input_dim;
        for layer in &layers {
            if layer.in_dim() != prev {
                return Err(NetError::DimensionMismatch {
                    expected: prev,
                    got: layer.in_dim(),
                });
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(NetError::DimensionMismatch {
                    expected: layer.out_dim(),
                    got: layer.bias.len(),
                });
            }
            if layer.out_dim() == 0 {
                return Err(NetError::InvalidArchitecture("zero-width layer".into()));
            }
            prev = layer.out_dim();
        }
        Ok(Self { input_dim, layers })
    }

    pub fn zeros(arch: &Architecture) -> Self {
        let layers = arch
            .dims()
            .windows(2)
            .map(|w| Layer::zeros(w[1], w[0]))
            .collect();
        Self {
            input_dim: arch.input_dim(),
            layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    /// Number of layers `L`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn architecture(&self) -> Architecture {
        let mut dims = vec![self.input_dim];
        dims.extend(self.layers.iter().map(Layer::out_dim));
        Architecture { dims }
    }

    /// `N = d + Σ N_j`.
    pub fn neuron_count(&self) -> usize {
        self.input_dim + self.layers.iter().map(Layer::out_dim).sum::<usize>()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Layer `j`, 1-based.
    pub fn layer(&self, j: usize) -> &Layer {
        &self.layers[j - 1]
    }

    pub fn layer_mut(&mut self, j: usize) -> &mut Layer {
        &mut self.layers[j - 1]
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    fn check_input(&self, len: usize) -> Result<(), NetError> {
        if len != self.input_dim {
            return Err(NetError::DimensionMismatch {
                expected: self.input_dim,
                got: len,
            });
        }
        Ok(())
    }

    /// Forward pass keeping every preactivation and activation.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardPass, NetError> {
        self.check_input(x.len())?;
        let depth = self.depth();
        let mut activations = Vec::with_capacity(depth + 1);
        let mut preactivations = Vec::with_capacity(depth);
        activations.push(Array1::from(x.to_vec()));
        for (j, layer) in self.layers.iter().enumerate() {
            let eta = layer.affine(activations.last().unwrap());
            let act = if j + 1 < depth { eta.mapv(relu) } else { eta.clone() };
            preactivations.push(eta);
            activations.push(act);
        }
        Ok(ForwardPass {
            activations,
            preactivations,
        })
    }

    /// `R(Φ)(x)` in `f64`.
    pub fn realize(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        self.check_input(x.len())?;
        let depth = self.depth();
        let mut a = Array1::from(x.to_vec());
        for (j, layer) in self.layers.iter().enumerate() {
            a = layer.affine(&a);
            if j + 1 < depth {
                a.mapv_inplace(relu);
            }
        }
        Ok(a.to_vec())
    }

    /// Scalar output of a network with `d = N_L = 1`.
    pub fn realize_scalar(&self, x: f64) -> f64 {
        self.realize(&[x]).expect("scalar network")[0]
    }

    /// Realisation on many inputs at once; `inputs` is `d × M`, the result `N_L × M`.
    pub fn realize_batch(&self, inputs: &Array2<f64>) -> Result<Array2<f64>, NetError> {
        self.check_input(inputs.nrows())?;
        let depth = self.depth();
        let mut a = inputs.to_owned();
        for (j, layer) in self.layers.iter().enumerate() {
            a = layer.weights.dot(&a);
            a += &layer.bias.view().insert_axis(Axis(1));
            if j + 1 < depth {
                a.mapv_inplace(relu);
            }
        }
        Ok(a)
    }

    /// Preactivations `η_j` on many inputs; `inputs` is `d × M`, entry `j−1` is `N_j × M`.
    pub fn preactivations_batch(&self, inputs: &Array2<f64>) -> Result<Vec<Array2<f64>>, NetError> {
        self.check_input(inputs.nrows())?;
        let mut out = Vec::with_capacity(self.depth());
        let mut a = inputs.to_owned();
        for layer in &self.layers {
            let mut z = layer.weights.dot(&a);
            z += &layer.bias.view().insert_axis(Axis(1));
            a = z.mapv(relu);
            out.push(z);
        }
        Ok(out)
    }

    /// Realisation in exact rational arithmetic, with weights taken at their exact binary values.
    pub fn realize_exact(&self, x: &[BigRational]) -> Result<Vec<BigRational>, NetError> {
        self.check_input(x.len())?;
        let rational = self.to_rational()?;
        Ok(rational.realize(x))
    }

    /// Exact realisation of an `f64` input, rounded to the nearest `f64` at the end.
    pub fn realize_exact_f64(&self, x: &[f64]) -> Result<Vec<f64>, NetError> {
        let xr = x
            .iter()
            .map(|&v| BigRational::from_float(v).ok_or(NetError::NonFinite))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self
            .realize_exact(&xr)?
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect())
    }

    pub fn to_rational(&self) -> Result<RationalNetwork, NetError> {
        RationalNetwork::from_network(self)
    }

    /// Finite-precision realisation; inputs must already be elements of `fmt`.
    pub fn realize_fp(&self, x: &[FpValue], fmt: &FloatFormat) -> Result<Vec<FpValue>, NetError> {
        FpNetwork::new(self, *fmt)?.realize(x)
    }

    /// `η_j(x)` for `j = 1..L−1`.
    pub fn preactivations(&self, x: &[f64]) -> Result<Vec<Array1<f64>>, NetError> {
        let mut pass = self.forward(x)?;
        pass.preactivations.pop();
        Ok(pass.preactivations)
    }

    /// `I_j(x)` for `j = 1..L−1`, with `(I_j)_k = 1` iff `(η_j)_k >= 0`.
    pub fn indicators(&self, x: &[f64]) -> Result<Vec<Vec<bool>>, NetError> {
        Ok(self
            .preactivations(x)?
            .into_iter()
            .map(|eta| eta.iter().map(|&v| v >= 0.0).collect())
            .collect())
    }

    /// `((A_1, b_1), …, (A_j′, b_j′))`, for `1 <= j′ <= L − 1`.
    ///
    /// The truncated network is read with the usual convention, so its last
    /// layer carries no ReLU.
    pub fn subnetwork(&self, j_prime: usize) -> Result<Network, NetError> {
        let max = self.depth().saturating_sub(1);
        if j_prime == 0 || j_prime > max {
            return Err(NetError::IndexOutOfRange { index: j_prime, max });
        }
        Ok(Self {
            input_dim: self.input_dim,
            layers: self.layers[..j_prime].to_vec(),
        })
    }
}

/// A network with exact rational parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalNetwork {
    input_dim: usize,
    /// Row-major weights and biases per layer.
    layers: Vec<(usize, usize, Vec<BigRational>, Vec<BigRational>)>,
    /// Per layer and row: common denominator and integer numerators of the weights.
    rows: Vec<Vec<(BigInt, Vec<BigInt>)>>,
}

/// Common denominator of `v` and the numerators over it.
fn over_common_denominator(v: &[BigRational]) -> (BigInt, Vec<BigInt>) {
    let den = v.iter().fold(BigInt::from(1), |d, x| d.lcm(x.denom()));
    let nums = v.iter().map(|x| x.numer() * (&den / x.denom())).collect();
    (den, nums)
}

impl RationalNetwork {
    pub fn from_network(net: &Network) -> Result<Self, NetError> {
        let exact = |v: &f64| BigRational::from_float(*v).ok_or(NetError::NonFinite);
        let layers = net
            .layers
            .iter()
            .map(|l| {
                let w = l.weights.iter().map(exact).collect::<Result<Vec<_>, _>>()?;
                let b = l.bias.iter().map(exact).collect::<Result<Vec<_>, _>>()?;
                Ok((l.out_dim(), l.in_dim(), w, b))
            })
            .collect::<Result<Vec<_>, NetError>>()?;
        let rows = layers
            .iter()
            .map(|(r, c, w, _)| (0..*r).map(|i| over_common_denominator(&w[i * c..(i + 1) * c])).collect())
            .collect();
        Ok(Self {
            input_dim: net.input_dim,
            layers,
            rows,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `(rows, cols, weights row-major, bias)` of layer `j`, 1-based.
    pub fn layer(&self, j: usize) -> (usize, usize, &[BigRational], &[BigRational]) {
        let (r, c, w, b) = &self.layers[j - 1];
        (*r, *c, w, b)
    }

    pub fn realize(&self, x: &[BigRational]) -> Vec<BigRational> {
        let depth = self.depth();
        let mut a = x.to_vec();
        for (j, ((_, _, _, b), rows)) in self.layers.iter().zip(&self.rows).enumerate() {
            // integer dot products, one reduction per neuron
            let (den, nums) = over_common_denominator(&a);
            let mut next = Vec::with_capacity(rows.len());
            for ((wden, wnums), bias) in rows.iter().zip(b) {
                let mut dot = BigInt::zero();
                for (wv, av) in wnums.iter().zip(&nums) {
                    if !wv.is_zero() && !av.is_zero() {
                        dot += wv * av;
                    }
                }
                let mut acc = BigRational::new(dot, wden * &den) + bias;
                if j + 1 < depth && acc.is_negative() {
                    acc = BigRational::zero();
                }
                next.push(acc);
            }
            a = next;
        }
        a
    }
}

/// A network with weights and biases rounded into a format once.
#[derive(Debug, Clone)]
pub struct FpNetwork {
    fmt: FloatFormat,
    input_dim: usize,
    layers: Vec<(FpMatrix, Vec<FpValue>)>,
}

impl FpNetwork {
    pub fn new(net: &Network, fmt: FloatFormat) -> Result<Self, NetError> {
        let layers = net
            .layers
            .iter()
            .map(|l| {
                let w = FpMatrix::round(&l.weights, &fmt)?;
                let b = l
                    .bias
                    .iter()
                    .map(|&v| round_nearest(v, &fmt))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((w, b))
            })
            .collect::<Result<Vec<_>, FpError>>()?;
        Ok(Self {
            fmt,
            input_dim: net.input_dim,
            layers,
        })
    }

    pub fn format(&self) -> &FloatFormat {
        &self.fmt
    }

    /// `x^(j) = ρ(A_j ⊗ x^(j−1) ⊕ b_j)`, no ReLU on the last layer.
    pub fn realize(&self, x: &[FpValue]) -> Result<Vec<FpValue>, NetError> {
        if x.len() != self.input_dim {
            return Err(NetError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let depth = self.layers.len();
        let mut a = x.to_vec();
        for (j, (w, b)) in self.layers.iter().enumerate() {
            let prod = w.matvec(&a, &self.fmt)?;
            a = prod
                .iter()
                .zip(b)
                .map(|(p, bi)| {
                    let v = add_fp(p, bi, &self.fmt)?;
                    Ok(if j + 1 < depth { v.relu() } else { v })
                })
                .collect::<Result<Vec<_>, FpError>>()?;
        }
        Ok(a)
    }

    /// Rounds `x` into the format, then evaluates.
    pub fn realize_f64(&self, x: &[f64]) -> Result<Vec<FpValue>, NetError> {
        let xr = x
            .iter()
            .map(|&v| round_nearest(v, &self.fmt))
            .collect::<Result<Vec<_>, _>>()?;
        self.realize(&xr)
    }
}
