use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graddesc::{descend, exact_updates, Dataset, GradError};
use crate::net::Network;
use crate::regions::{count_pieces, neuron_function, Line, PiecewiseLinear1D, RegionError};

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("slope bound violated: max |h'| = {0} > 1")]
    SlopeBound(f64),
    #[error("bias update of neuron ({layer}, {neuron}) is zero")]
    ZeroUpdate { layer: usize, neuron: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// Wilson score interval at `z` standard deviations.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Empirical tail `P(count >= q)` against an analytic bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailPoint {
    pub q: usize,
    pub empirical: f64,
    pub bound: f64,
    /// Binomial standard deviation at the larger of `empirical` and `min(1, bound)`.
    pub sigma: f64,
    pub wilson: (f64, f64),
}

impl TailPoint {
    fn new(q: usize, hits: usize, trials: usize, bound: f64) -> Self {
        let n = trials as f64;
        let empirical = hits as f64 / n;
        let p = empirical.max(bound.min(1.0));
        Self {
            q,
            empirical,
            bound,
            sigma: (p * (1.0 - p) / n).sqrt(),
            wilson: wilson_interval(hits, trials, 3.0),
        }
    }

    /// `empirical <= min(1, bound) + 3σ`.
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound.min(1.0) + 3.0 * self.sigma
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `#{x : h(x) = level}` counted per piece on `[t_i, t_{i+1})`, plus the right end.
fn level_crossings(h: &PiecewiseLinear1D, level: f64) -> usize {
    let (ts, vs) = (h.vertices(), h.values());
    let mut count = 0;
    for i in 0..ts.len() - 1 {
        let (a, b) = (vs[i], vs[i + 1]);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if a == b {
            count += usize::from(a == level);
        } else if (a < b && lo <= level && level < hi) || (a > b && lo < level && level <= hi) {
            count += 1;
        }
    }
    count + usize::from(vs[vs.len() - 1] == level)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    /// `c`, the length of the domain of `h`.
    pub domain: f64,
    pub level_lo: f64,
    pub delta: f64,
    pub trials: usize,
    pub tails: Vec<TailPoint>,
}

impl Lemma1Report {
    pub fn holds(&self) -> bool {
        self.tails.iter().all(TailPoint::holds)
    }
}

/// Draws `U ~ U[lo, lo + δ]` and reports `P(#{x : h(x) = U} >= t)` for
/// `t = 1..=t_max` against `min(1, c/(δt))`.
pub fn lemma1_monte_carlo(
    h: &PiecewiseLinear1D,
    lo: f64,
    delta: f64,
    t_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Lemma1Report, MonteCarloError> {
    let slope = h.max_abs_slope();
    if slope > 1.0 {
        return Err(MonteCarloError::SlopeBound(slope));
    }
    if !(delta > 0.0) || trials == 0 || t_max == 0 {
        return Err(MonteCarloError::InvalidParameter("need δ > 0, trials >= 1, t_max >= 1".into()));
    }
    let c = h.end() - h.start();
    let mut hits = vec![0usize; t_max + 1];
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let u = lo + delta * rng.random::<f64>();
        let k = level_crossings(h, u).min(t_max);
        for v in hits.iter_mut().take(k + 1).skip(1) {
            *v += 1;
        }
    }
    let tails = (1..=t_max)
        .map(|t| TailPoint::new(t, hits[t], trials, c / (delta * t as f64)))
        .collect();
    Ok(Lemma1Report {
        domain: c,
        level_lo: lo,
        delta,
        trials,
        tails,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop33Report {
    pub layer: usize,
    pub neuron: usize,
    pub bias_update: f64,
    pub eps: f64,
    pub step: f64,
    pub length: f64,
    /// `max |h'|` of the neuron's preactivation after the exact step.
    pub max_slope: f64,
    pub trials: usize,
    pub tails: Vec<TailPoint>,
    pub mean: f64,
    pub mean_sigma: f64,
    pub mean_bound: f64,
}

impl Prop33Report {
    pub fn holds(&self) -> bool {
        self.tails.iter().all(TailPoint::holds) && self.mean <= self.mean_bound + 3.0 * self.mean_sigma
    }
}

/// Perturbs only `b_{j,k}` by `−λ ε_j θ (u_j^b)_k`, `θ ~ U[−½, ½]`, after an
/// exact step and counts the new breakpoints of neuron `(j, k)` along `line`.
///
/// Tails are compared with `2𝓛/(λ ε_j q |u|)` and the mean with
/// `(2𝓛/(λ ε_j)) |u|⁻¹ ln(N^(j+1))`.
#[allow(clippy::too_many_arguments)]
pub fn prop33_monte_carlo(
    net: &Network,
    data: &Dataset,
    line: &Line,
    layer: usize,
    neuron: usize,
    eps: f64,
    step: f64,
    q_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Prop33Report, MonteCarloError> {
    if !(eps > 0.0) || !(step > 0.0) || trials == 0 {
        return Err(MonteCarloError::InvalidParameter("need ε > 0, λ > 0, trials >= 1".into()));
    }
    let upd = exact_updates(net, data)?;
    if layer == 0 || layer >= net.depth() || neuron >= upd.bias_update(layer).len() {
        return Err(RegionError::NoSuchNeuron(layer, neuron).into());
    }
    let u = upd.bias_update(layer)[neuron];
    if u == 0.0 {
        return Err(MonteCarloError::ZeroUpdate { layer, neuron });
    }
    let after = descend(net, &upd, step);
    let h = neuron_function(&after, line, layer, neuron)?;
    let mut hits = vec![0usize; q_max + 1];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial as u64);
        let theta = rng.random::<f64>() - 0.5;
        let k = h.interior_zero_crossings(-step * eps * theta * u);
        sum += k as f64;
        sum2 += (k * k) as f64;
        for v in hits.iter_mut().take(k.min(q_max) + 1).skip(1) {
            *v += 1;
        }
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    let len = line.length();
    let base = 2.0 * len / (step * eps * u.abs());
    let neurons = net.neuron_count() as f64;
    Ok(Prop33Report {
        layer,
        neuron,
        bias_update: u,
        eps,
        step,
        length: len,
        max_slope: h.max_abs_slope(),
        trials,
        tails: (1..=q_max).map(|q| TailPoint::new(q, hits[q], trials, base / q as f64)).collect(),
        mean,
        mean_sigma: (var / n).sqrt(),
        mean_bound: base * (layer as f64 + 1.0) * neurons.ln(),
    })
}

/// Scales hidden layers so that every preactivation has slope at most 1 along `line`.
///
/// Layer `j` is multiplied by `min(1, 1/(C·m_j))`, with `m_j` its largest slope
/// and `C` the product of earlier factors; positive homogeneity of the ReLU
/// keeps every activation pattern.
pub fn rescale_to_unit_slope(net: &Network, line: &Line) -> Result<Network, RegionError> {
    let census = count_pieces(net, line)?;
    let mut out = net.clone();
    let mut cumulative = 1.0;
    for (j, slopes) in census.max_abs_slopes.iter().enumerate() {
        let m = slopes.iter().fold(0.0f64, |a, b| a.max(*b)) * cumulative;
        let f = if m > 1.0 { 1.0 / m } else { 1.0 };
        cumulative *= f;
        let layer = out.layer_mut(j + 1);
        layer.weights *= f;
        layer.bias *= f;
    }
    Ok(out)
}
