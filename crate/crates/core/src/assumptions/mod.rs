//! Measurements behind the two standing assumptions on the gradient step:
//! bias updates that are either zero or not too small, and preactivation
//! slopes bounded by one.

mod histogram;

use ndarray::Array2;
use serde::Serialize;

use crate::graddesc::UpdateBundle;
use crate::net::{NetError, Network};
use crate::regions::{count_pieces, count_pieces_exact, Line, RegionError};

pub use histogram::{bias_update_histogram, HistogramFit, LogHistogram, TailFitError};

/// `x† = 1/x` for `x > 0` and `0† = 0`.
pub fn dagger(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        0.0
    }
}

/// `N^(−ν) Σ_{j<L} Σ_k |(u_j^b)_k|†`.
pub fn assumption_a_statistic(updates: &UpdateBundle, nu: f64, neurons: usize) -> f64 {
    let total: f64 = updates.hidden_bias_updates().map(|u| dagger(u.abs())).sum();
    total / (neurons as f64).powf(nu)
}

/// A neuron with zero bias update that still fires somewhere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeadNeuronViolation {
    /// 1-based layer.
    pub layer: usize,
    /// 0-based neuron.
    pub neuron: usize,
    pub witness: Vec<f64>,
    pub preactivation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionAReport {
    pub statistic: f64,
    pub nu: f64,
    /// Threshold `c_0` the statistic was compared against, if any.
    pub c0_threshold: Option<f64>,
    pub dagger_zero_count: usize,
    pub dead_neuron_violations: Vec<DeadNeuronViolation>,
}

impl AssumptionAReport {
    pub fn holds(&self) -> bool {
        self.dead_neuron_violations.is_empty() && self.c0_threshold.is_none_or(|c| self.statistic <= c)
    }
}

/// For every hidden `(j, k)` with `(u_j^b)_k = 0`, checks `η̂_{j,k}(x) <= 0` on every probe input.
/// At most one witness is reported per neuron.
pub fn check_dead_neurons(
    net_after: &Network,
    updates: &UpdateBundle,
    probe: &[Vec<f64>],
) -> Result<Vec<DeadNeuronViolation>, NetError> {
    let depth = net_after.depth();
    let zero: Vec<(usize, usize)> = (1..depth)
        .flat_map(|j| {
            updates
                .bias_update(j)
                .iter()
                .enumerate()
                .filter(|(_, u)| **u == 0.0)
                .map(move |(k, _)| (j, k))
        })
        .collect();
    if zero.is_empty() || probe.is_empty() {
        return Ok(Vec::new());
    }
    let d = net_after.input_dim();
    let inputs = Array2::from_shape_fn((d, probe.len()), |(r, c)| probe[c][r]);
    let pre = net_after.preactivations_batch(&inputs)?;
    let mut out = Vec::new();
    for (j, k) in zero {
        let row = pre[j - 1].row(k);
        if let Some((i, &v)) = row.iter().enumerate().find(|(_, v)| **v > 0.0) {
            out.push(DeadNeuronViolation {
                layer: j,
                neuron: k,
                witness: probe[i].clone(),
                preactivation: v,
            });
        }
    }
    Ok(out)
}

/// `count` equispaced points on `line`, endpoints included.
pub fn line_probe(line: &Line, count: usize) -> Vec<Vec<f64>> {
    let n = count.max(2);
    (0..n)
        .map(|i| line.point(line.length() * i as f64 / (n - 1) as f64))
        .collect()
}

/// Full report for one update.
pub fn assumption_a_report(
    net_after: &Network,
    updates: &UpdateBundle,
    nu: f64,
    c0_threshold: Option<f64>,
    probe: &[Vec<f64>],
) -> Result<AssumptionAReport, NetError> {
    let neurons = net_after.neuron_count();
    Ok(AssumptionAReport {
        statistic: assumption_a_statistic(updates, nu, neurons),
        nu,
        c0_threshold,
        dagger_zero_count: updates.hidden_bias_updates().filter(|u| *u == 0.0).count(),
        dead_neuron_violations: check_dead_neurons(net_after, updates, probe)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlopeMethod {
    /// All interval slopes enumerated along a one-dimensional domain.
    ExactOnLine,
    /// Directional derivative along a line in `d > 1`; a lower bound on the gradient norm.
    Directional,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientBoundReport {
    pub per_neuron: Vec<Vec<f64>>,
    pub max_abs_slope: f64,
    pub method: SlopeMethod,
}

impl GradientBoundReport {
    pub fn bounded_by_one(&self) -> bool {
        self.max_abs_slope <= 1.0
    }
}

fn slope_report(per_neuron: Vec<Vec<f64>>, line: &Line) -> GradientBoundReport {
    let max_abs_slope = per_neuron.iter().flatten().fold(0.0, |m: f64, v| m.max(*v));
    GradientBoundReport {
        per_neuron,
        max_abs_slope,
        method: if line.dim() == 1 {
            SlopeMethod::ExactOnLine
        } else {
            SlopeMethod::Directional
        },
    }
}

/// `max |d(η_j)_k/dt|` along the line for every hidden neuron.
pub fn max_preactivation_slope(net: &Network, line: &Line) -> Result<GradientBoundReport, RegionError> {
    Ok(slope_report(count_pieces(net, line)?.max_abs_slopes, line))
}

/// As [`max_preactivation_slope`], propagated in exact rational arithmetic.
pub fn max_preactivation_slope_exact(net: &Network, line: &Line) -> Result<GradientBoundReport, RegionError> {
    Ok(slope_report(count_pieces_exact(net, line)?.max_abs_slopes, line))
}
