//! Full-batch backpropagation for scalar-output ReLU networks, with the two
//! noise models: multiplicative update noise and per-matvec relative noise.

mod data;
mod schedule;
mod train;

use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;
use thiserror::Error;

use crate::net::{NetError, Network};

pub use data::{Dataset, Target};
pub use schedule::{NoiseMode, PerturbationSchedule, StepSchedule};
pub use train::{train, ProbeConfig, TraceRecord, TrainingTrace};

#[derive(Debug, Error)]
pub enum GradError {
    #[error("length mismatch: {0} labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("empty dataset")]
    Empty,
    #[error("network output dimension is {0}, expected 1")]
    OutputDim(usize),
    #[error("input dimension mismatch: network {net}, data {data}")]
    InputDim { net: usize, data: usize },
    #[error("perturbation schedule has {got} layer entries, network has {expected} layers")]
    ScheduleLength { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("training diverged at iteration {iteration}: risk {risk}")]
    Diverged { iteration: usize, risk: f64 },
    #[error(transparent)]
    Net(#[from] NetError),
}

/// `(1/M) Σ (y_i − ŷ_i)²`.
pub fn empirical_risk(labels: &[f64], predictions: &[f64]) -> Result<f64, GradError> {
    if labels.len() != predictions.len() {
        return Err(GradError::LengthMismatch(labels.len(), predictions.len()));
    }
    if labels.is_empty() {
        return Err(GradError::Empty);
    }
    let total: f64 = labels
        .iter()
        .zip(predictions)
        .map(|(y, yh)| (y - yh) * (y - yh))
        .sum();
    Ok(total / labels.len() as f64)
}

/// `ℓ′(y, ŷ) = 2(ŷ − y)`, the derivative in the prediction.
pub fn loss_derivative(label: f64, prediction: f64) -> f64 {
    2.0 * (prediction - label)
}

/// Bias updates `u_j^b` and weight updates `U_j^w` for `j = 1..L`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateBundle {
    pub bias: Vec<Array1<f64>>,
    pub weights: Vec<Array2<f64>>,
}

impl UpdateBundle {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            bias: net.layers().iter().map(|l| Array1::zeros(l.out_dim())).collect(),
            weights: net
                .layers()
                .iter()
                .map(|l| Array2::zeros(l.weights.raw_dim()))
                .collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.bias.len()
    }

    /// `u_j^b`, 1-based.
    pub fn bias_update(&self, j: usize) -> &Array1<f64> {
        &self.bias[j - 1]
    }

    /// `U_j^w`, 1-based.
    pub fn weight_update(&self, j: usize) -> &Array2<f64> {
        &self.weights[j - 1]
    }

    /// Entries of `u_j^b` for the hidden layers `j < L`.
    pub fn hidden_bias_updates(&self) -> impl Iterator<Item = f64> + '_ {
        self.bias[..self.depth().saturating_sub(1)]
            .iter()
            .flat_map(|b| b.iter().copied())
    }

    /// Smallest nonzero `|(u_j^b)_k|` over hidden layers, if any.
    pub fn min_abs_nonzero_bias_update(&self) -> Option<f64> {
        self.hidden_bias_updates()
            .map(f64::abs)
            .filter(|v| *v > 0.0)
            .min_by(f64::total_cmp)
    }

    pub fn is_zero(&self) -> bool {
        self.bias.iter().all(|b| b.iter().all(|v| *v == 0.0))
            && self.weights.iter().all(|w| w.iter().all(|v| *v == 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.bias
            .iter()
            .flat_map(|b| b.iter())
            .chain(self.weights.iter().flat_map(|w| w.iter()))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Network after `A_j − λ U_j^w`, `b_j − λ u_j^b`.
pub fn descend(net: &Network, updates: &UpdateBundle, step: f64) -> Network {
    let mut next = net.clone();
    for j in 1..=net.depth() {
        let layer = next.layer_mut(j);
        layer.weights.scaled_add(-step, updates.weight_update(j));
        layer.bias.scaled_add(-step, updates.bias_update(j));
    }
    next
}

fn check(net: &Network, data: &Dataset) -> Result<(), GradError> {
    if net.output_dim() != 1 {
        return Err(GradError::OutputDim(net.output_dim()));
    }
    if net.input_dim() != data.input_dim() {
        return Err(GradError::InputDim {
            net: net.input_dim(),
            data: data.input_dim(),
        });
    }
    Ok(())
}

/// Multiplies every entry by `1 + a·u`, `u ~ U[−½, ½]`, drawn in row-major order.
fn apply_relative_noise<R: Rng + ?Sized>(m: &mut Array2<f64>, noise: &mut Option<(f64, &mut R)>) {
    let Some((amplitude, rng)) = noise else {
        return;
    };
    let amplitude = *amplitude;
    if amplitude == 0.0 {
        return;
    }
    for v in m.iter_mut() {
        let u: f64 = rng.random::<f64>() - 0.5;
        *v *= 1.0 + amplitude * u;
    }
}

/// Outcome of a batched forward and backward pass.
#[derive(Debug, Clone)]
pub struct Backprop {
    pub updates: UpdateBundle,
    pub predictions: Vec<f64>,
    pub risk: f64,
}

fn backprop_impl<R: Rng + ?Sized>(
    net: &Network,
    data: &Dataset,
    mut noise: Option<(f64, &mut R)>,
) -> Result<Backprop, GradError> {
    check(net, data)?;
    let depth = net.depth();
    let m = data.len();
    let inv_m = 1.0 / m as f64;

    // forward: columns are samples
    let mut acts: Vec<Array2<f64>> = Vec::with_capacity(depth + 1);
    let mut pres: Vec<Array2<f64>> = Vec::with_capacity(depth);
    acts.push(data.input_matrix());
    for (j, layer) in net.layers().iter().enumerate() {
        let mut z = layer.weights.dot(acts.last().unwrap());
        apply_relative_noise(&mut z, &mut noise);
        z += &layer.bias.view().insert_axis(Axis(1));
        let a = if j + 1 < depth {
            z.mapv(|v| if v > 0.0 { v } else { 0.0 })
        } else {
            z.clone()
        };
        pres.push(z);
        acts.push(a);
    }
    let predictions: Vec<f64> = acts[depth].row(0).to_vec();
    let risk = empirical_risk(data.labels(), &predictions)?;

    // backward: delta_L = ℓ′, delta_j = I_j ⊙ (A_{j+1}ᵀ delta_{j+1})
    let mut bias = vec![Array1::zeros(0); depth];
    let mut weights = vec![Array2::zeros((0, 0)); depth];
    let mut delta = Array2::from_shape_fn((1, m), |(_, i)| loss_derivative(data.labels()[i], predictions[i]));
    for j in (1..=depth).rev() {
        if j < depth {
            let a_next = &net.layer(j + 1).weights;
            let mut g = a_next.t().dot(&delta);
            apply_relative_noise(&mut g, &mut noise);
            Zip::from(&mut g).and(&pres[j - 1]).for_each(|gv, &p| {
                if p < 0.0 {
                    *gv = 0.0;
                }
            });
            delta = g;
        }
        // sample-ordered reduction
        let mut u = Array1::<f64>::zeros(delta.nrows());
        for col in delta.columns() {
            u += &col;
        }
        bias[j - 1] = u * inv_m;
        weights[j - 1] = delta.dot(&acts[j - 1].t()) * inv_m;
    }
    Ok(Backprop {
        updates: UpdateBundle { bias, weights },
        predictions,
        risk,
    })
}

/// Exact (noise-free) forward and backward pass.
pub fn backprop(net: &Network, data: &Dataset) -> Result<Backprop, GradError> {
    backprop_impl::<rand_chacha::ChaCha8Rng>(net, data, None)
}

/// `u_j^b` and `U_j^w` of the exact gradient step.
pub fn exact_updates(net: &Network, data: &Dataset) -> Result<UpdateBundle, GradError> {
    Ok(backprop(net, data)?.updates)
}

/// Updates with every matrix-vector product entry, forward and backward,
/// multiplied by `1 + amplitude·u` with `u ~ U[−½, ½]` fresh per entry.
pub fn noisy_matvec_updates<R: Rng + ?Sized>(
    net: &Network,
    data: &Dataset,
    amplitude: f64,
    rng: &mut R,
) -> Result<UpdateBundle, GradError> {
    Ok(noisy_backprop(net, data, amplitude, rng)?.updates)
}

/// [`noisy_matvec_updates`] keeping the noisy predictions and risk.
pub fn noisy_backprop<R: Rng + ?Sized>(
    net: &Network,
    data: &Dataset,
    amplitude: f64,
    rng: &mut R,
) -> Result<Backprop, GradError> {
    if !(amplitude >= 0.0) {
        return Err(GradError::InvalidParameter(format!("noise amplitude {amplitude}")));
    }
    backprop_impl(net, data, Some((amplitude, rng)))
}

/// One update-noise step.
#[derive(Debug, Clone)]
pub struct PerturbedStep {
    pub network: Network,
    pub exact: UpdateBundle,
    pub perturbed: UpdateBundle,
    /// Risk of the network before the step.
    pub risk: f64,
}

/// `û_j^b = (I + ε_j Θ_j^b) u_j^b`, `Û_j^w = (I + ε_j Θ_j^w) U_j^w`, then descent.
///
/// `Θ_j^b` and `Θ_j^w` are independent `N_j × N_j` diagonals with entries
/// `U[−½, ½]`, drawn layer by layer (`Θ_1^b, Θ_1^w, Θ_2^b, …`). With
/// `sched.entrywise_weight_noise` each entry of `U_j^w` gets its own factor.
pub fn perturbed_step<R: Rng + ?Sized>(
    net: &Network,
    data: &Dataset,
    sched: &PerturbationSchedule,
    step: f64,
    rng: &mut R,
) -> Result<PerturbedStep, GradError> {
    if !(step > 0.0) {
        return Err(GradError::InvalidParameter(format!("step size {step}")));
    }
    if sched.eps.len() != net.depth() {
        return Err(GradError::ScheduleLength {
            expected: net.depth(),
            got: sched.eps.len(),
        });
    }
    let bp = backprop(net, data)?;
    let perturbed = perturb_updates(&bp.updates, &sched.eps, sched.entrywise_weight_noise, rng);
    Ok(PerturbedStep {
        network: descend(net, &perturbed, step),
        exact: bp.updates,
        perturbed,
        risk: bp.risk,
    })
}

/// Applies the diagonal `I + ε_j Θ` factors to an exact bundle.
pub fn perturb_updates<R: Rng + ?Sized>(
    exact: &UpdateBundle,
    eps: &[f64],
    entrywise: bool,
    rng: &mut R,
) -> UpdateBundle {
    let mut out = exact.clone();
    for (j, &e) in eps.iter().enumerate() {
        let b = &mut out.bias[j];
        for v in b.iter_mut() {
            let theta: f64 = rng.random::<f64>() - 0.5;
            *v *= 1.0 + e * theta;
        }
        let w = &mut out.weights[j];
        if entrywise {
            for v in w.iter_mut() {
                let theta: f64 = rng.random::<f64>() - 0.5;
                *v *= 1.0 + e * theta;
            }
        } else {
            for mut row in w.rows_mut() {
                let theta: f64 = rng.random::<f64>() - 0.5;
                row *= 1.0 + e * theta;
            }
        }
    }
    out
}
