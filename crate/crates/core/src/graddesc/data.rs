use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GradError;

/// Named regression targets used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Target {
    Sine,
    Cos,
    /// `x ↦ 1 − x²/2`
    OneMinusHalfSquare,
    /// `x ↦ c·x²`
    ScaledSquare { c: f64 },
    Zero,
}

impl Target {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Target::Sine => x.sin(),
            Target::Cos => x.cos(),
            Target::OneMinusHalfSquare => 1.0 - 0.5 * x * x,
            Target::ScaledSquare { c } => c * x * x,
            Target::Zero => 0.0,
        }
    }
}

/// Training samples `(x_i, y_i)`, `i = 1..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self, GradError> {
        if inputs.is_empty() {
            return Err(GradError::Empty);
        }
        if inputs.len() != labels.len() {
            return Err(GradError::LengthMismatch(labels.len(), inputs.len()));
        }
        let d = inputs[0].len();
        if d == 0 || inputs.iter().any(|x| x.len() != d) {
            return Err(GradError::InvalidParameter("inputs must share a nonzero dimension".into()));
        }
        Ok(Self { inputs, labels })
    }

    /// `m` scalar inputs uniform on `[lo, hi]`, labelled by `target`.
    pub fn sample(target: Target, m: usize, domain: (f64, f64), seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = domain;
        let inputs: Vec<Vec<f64>> = (0..m.max(1))
            .map(|_| vec![lo + (hi - lo) * rng.random::<f64>()])
            .collect();
        let labels = inputs.iter().map(|x| target.eval(x[0])).collect();
        Self { inputs, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `d × M`, one sample per column.
    pub fn input_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.input_dim(), self.len()), |(r, c)| self.inputs[c][r])
    }
}
