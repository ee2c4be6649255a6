use serde::{Deserialize, Serialize};

use super::GradError;

/// Step-size rule `n ↦ λ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum StepSchedule {
    Constant { value: f64 },
    /// `base / (1 + √n / div)`
    InvSqrt { base: f64, div: f64 },
}

impl StepSchedule {
    pub fn constant(value: f64) -> Result<Self, GradError> {
        Self::Constant { value }.validated()
    }

    pub fn inv_sqrt(base: f64, div: f64) -> Result<Self, GradError> {
        Self::InvSqrt { base, div }.validated()
    }

    pub fn validated(self) -> Result<Self, GradError> {
        let ok = match self {
            StepSchedule::Constant { value } => value > 0.0 && value.is_finite(),
            StepSchedule::InvSqrt { base, div } => base > 0.0 && base.is_finite() && div > 0.0,
        };
        if ok {
            Ok(self)
        } else {
            Err(GradError::InvalidParameter(format!("step schedule {self:?}")))
        }
    }

    pub fn at(&self, n: usize) -> f64 {
        match *self {
            StepSchedule::Constant { value } => value,
            StepSchedule::InvSqrt { base, div } => base / (1.0 + (n as f64).sqrt() / div),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    None,
    UpdateNoise,
    MatvecNoise,
}

/// Which noise model a run uses and its amplitudes.
///
/// Noise factors are `1 + a·u` with `u ~ U[−½, ½]`, so an amplitude `a`
/// perturbs by at most `a/2` relatively; `U[−s, s]` corresponds to `a = 2s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSchedule {
    pub mode: NoiseMode,
    /// `ε_1, …, ε_L` for update noise.
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Amplitude of the per-matvec relative noise.
    #[serde(default)]
    pub matvec_noise: f64,
    /// Independent factor per entry of `U_j^w` instead of per row.
    #[serde(default)]
    pub entrywise_weight_noise: bool,
}

impl PerturbationSchedule {
    pub fn none() -> Self {
        Self {
            mode: NoiseMode::None,
            eps: Vec::new(),
            matvec_noise: 0.0,
            entrywise_weight_noise: false,
        }
    }

    pub fn update_noise(eps: Vec<f64>) -> Self {
        Self {
            mode: NoiseMode::UpdateNoise,
            eps,
            ..Self::none()
        }
    }

    pub fn matvec(amplitude: f64) -> Self {
        Self {
            mode: NoiseMode::MatvecNoise,
            matvec_noise: amplitude,
            ..Self::none()
        }
    }

    pub fn validate(&self, depth: usize) -> Result<(), GradError> {
        if self.eps.iter().chain([&self.matvec_noise]).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(GradError::InvalidParameter("perturbations must be finite and >= 0".into()));
        }
        if self.mode == NoiseMode::UpdateNoise && self.eps.len() != depth {
            return Err(GradError::ScheduleLength {
                expected: depth,
                got: self.eps.len(),
            });
        }
        Ok(())
    }

    /// `ε_j` as used by the theoretical thresholds: the update-noise
    /// amplitudes, or the matvec amplitude for every layer.
    pub fn effective_eps(&self, depth: usize) -> Vec<f64> {
        match self.mode {
            NoiseMode::UpdateNoise => self.eps.clone(),
            NoiseMode::MatvecNoise => vec![self.matvec_noise; depth],
            NoiseMode::None => vec![0.0; depth],
        }
    }
}
