//! Affine pieces and activation regions of network realisations along lines.

mod bounds;
mod line;
mod propagate;
mod pwl;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::Network;
use crate::scalar::Scalar;

pub use bounds::{telgarsky_bound, telgarsky_bound_f64, theorem_threshold, ThresholdInputs};
pub use line::Line;
pub use propagate::{propagate, LayerTrace, Propagation};
pub use pwl::PiecewiseLinear1D;

#[derive(Debug, Error, PartialEq)]
pub enum RegionError {
    #[error("invalid line: {0}")]
    InvalidLine(String),
    #[error("invalid piecewise-linear function: {0}")]
    InvalidFunction(String),
    #[error("dimension mismatch: network input {expected}, line {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("network output dimension is {0}, expected 1")]
    OutputDim(usize),
    #[error("neuron ({0}, {1}) does not exist")]
    NoSuchNeuron(usize, usize),
}

/// Tolerances of the floating-point counting path. The exact path ignores them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountConfig {
    /// Vertex values with `|η| <= zero_tol · max|η|` count as zero.
    pub zero_tol: f64,
    /// Crossings within this distance in `t` of a vertex are merged into it.
    pub snap_tol: f64,
    /// Relative slope difference below which a vertex is not a breakpoint.
    pub slope_tol: f64,
}

impl Default for CountConfig {
    fn default() -> Self {
        Self {
            zero_tol: 1e-12,
            snap_tol: 1e-12,
            slope_tol: 1e-9,
        }
    }
}

/// Counts for one network on one line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionCensus {
    pub piece_count: usize,
    pub activation_region_count: usize,
    /// `#ω̂_{j,k}`: kinks of `ρ((η_j)_k)` along the line, per hidden layer.
    pub neuron_breakpoints: Vec<Vec<usize>>,
    /// `#(ω̂_{j,k} \ ω_{j,k})`: kinks that `(η_j)_k` itself does not have.
    pub new_breakpoints: Vec<Vec<usize>>,
    /// Locations of the output's breakpoints.
    pub output_breakpoints: Vec<f64>,
    /// Per hidden layer and neuron, `max |d(η_j)_k / dt|` along the line.
    pub max_abs_slopes: Vec<Vec<f64>>,
    pub exact: bool,
}

impl RegionCensus {
    pub fn max_abs_slope(&self) -> f64 {
        self.max_abs_slopes
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(*v))
    }
}

fn changed<S: Scalar>(a: &S, b: &S, rel: f64) -> bool {
    if S::EXACT {
        a != b
    } else {
        pwl::slope_changed(a.to_f64(), b.to_f64(), rel)
    }
}

fn census_of<S: Scalar>(prop: &Propagation<S>, cfg: &CountConfig) -> RegionCensus {
    let p = prop.intervals();
    let out = prop.output();
    let slopes = &out.slopes[0];
    let mut output_breakpoints = Vec::new();
    for i in 1..p {
        if changed(&slopes[i - 1], &slopes[i], cfg.slope_tol) {
            output_breakpoints.push(prop.ts[i].to_f64());
        }
    }
    let piece_count = 1 + output_breakpoints.len();

    let hidden = &prop.layers[..prop.layers.len() - 1];
    let mut regions = 1;
    for i in 1..p {
        let differs = hidden
            .iter()
            .any(|tr| (0..tr.width()).any(|k| tr.active(k, i - 1) != tr.active(k, i)));
        if differs {
            regions += 1;
        }
    }

    let mut neuron_breakpoints = Vec::with_capacity(hidden.len());
    let mut new_breakpoints = Vec::with_capacity(hidden.len());
    let mut max_abs_slopes = Vec::with_capacity(hidden.len());
    for tr in hidden {
        let mut nb = Vec::with_capacity(tr.width());
        let mut nn = Vec::with_capacity(tr.width());
        let mut ms = Vec::with_capacity(tr.width());
        for k in 0..tr.width() {
            let (mut kinks, mut fresh) = (0, 0);
            for i in 1..p {
                let post = changed(&tr.post_slope(k, i - 1), &tr.post_slope(k, i), cfg.slope_tol);
                if post {
                    kinks += 1;
                    if !changed(&tr.slopes[k][i - 1], &tr.slopes[k][i], cfg.slope_tol) {
                        fresh += 1;
                    }
                }
            }
            nb.push(kinks);
            nn.push(fresh);
            ms.push(tr.slopes[k].iter().fold(0.0, |m: f64, s| m.max(s.to_f64().abs())));
        }
        neuron_breakpoints.push(nb);
        new_breakpoints.push(nn);
        max_abs_slopes.push(ms);
    }

    RegionCensus {
        piece_count,
        activation_region_count: regions,
        neuron_breakpoints,
        new_breakpoints,
        output_breakpoints,
        max_abs_slopes,
        exact: S::EXACT,
    }
}

fn check_output(net: &Network) -> Result<(), RegionError> {
    if net.output_dim() != 1 {
        return Err(RegionError::OutputDim(net.output_dim()));
    }
    Ok(())
}

/// Census in `f64` arithmetic with the given tolerances.
pub fn census_with(net: &Network, line: &Line, cfg: &CountConfig) -> Result<RegionCensus, RegionError> {
    check_output(net)?;
    let prop = propagate::<f64>(net, line, cfg)?;
    Ok(census_of(&prop, cfg))
}

/// Census in `f64` arithmetic with default tolerances.
pub fn count_pieces(net: &Network, line: &Line) -> Result<RegionCensus, RegionError> {
    census_with(net, line, &CountConfig::default())
}

/// Census in exact rational arithmetic, with parameters and line taken at
/// their exact binary values.
pub fn count_pieces_exact(net: &Network, line: &Line) -> Result<RegionCensus, RegionError> {
    check_output(net)?;
    let cfg = CountConfig::default();
    let prop = propagate::<BigRational>(net, line, &cfg)?;
    Ok(census_of(&prop, &cfg))
}

/// Maximal runs of constant activation pattern along the line.
pub fn count_activation_regions(net: &Network, line: &Line) -> Result<usize, RegionError> {
    Ok(count_pieces(net, line)?.activation_region_count)
}

/// The preactivation `(η_j)_k` restricted to the line, `j` 1-based hidden layer.
pub fn neuron_function(net: &Network, line: &Line, j: usize, k: usize) -> Result<PiecewiseLinear1D, RegionError> {
    if j == 0 || j >= net.depth() || k >= net.layer(j).out_dim() {
        return Err(RegionError::NoSuchNeuron(j, k));
    }
    let cfg = CountConfig::default();
    let prop = propagate::<f64>(&net.subnetwork(j).expect("j < L"), line, &cfg)?;
    // the final layer of the truncated network is the raw preactivation of layer j
    let tr = prop.output();
    PiecewiseLinear1D::with_slopes(prop.ts.clone(), tr.values[k].clone(), tr.slopes[k].clone())
}

/// The realisation restricted to the line.
pub fn output_function(net: &Network, line: &Line) -> Result<PiecewiseLinear1D, RegionError> {
    check_output(net)?;
    let prop = propagate::<f64>(net, line, &CountConfig::default())?;
    let tr = prop.output();
    PiecewiseLinear1D::with_slopes(prop.ts.clone(), tr.values[0].clone(), tr.slopes[0].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_yarotsky, he_init, Architecture, Layer};
    use ndarray::array;

    fn hinge() -> Network {
        Network::new(
            1,
            vec![Layer::new(array![[1.0]], array![-0.5]), Layer::new(array![[1.0]], array![0.0])],
        )
        .unwrap()
    }

    #[test]
    fn single_hinge() {
        let c = count_pieces(&hinge(), &Line::unit()).unwrap();
        assert_eq!(c.piece_count, 2);
        assert_eq!(c.activation_region_count, 2);
        assert_eq!(c.output_breakpoints, vec![0.5]);
        assert_eq!(c.new_breakpoints, vec![vec![1]]);
    }

    #[test]
    fn affine_network_has_one_piece() {
        let net = Network::new(
            1,
            vec![Layer::new(array![[2.0]], array![1.0]), Layer::new(array![[3.0]], array![0.0])],
        )
        .unwrap();
        let c = count_pieces(&net, &Line::unit()).unwrap();
        assert_eq!((c.piece_count, c.activation_region_count), (1, 1));
    }

    #[test]
    fn yarotsky_exact_counts() {
        for l in 2..=7 {
            let net = build_yarotsky(l).unwrap();
            let c = count_pieces_exact(&net, &Line::unit()).unwrap();
            assert_eq!(c.piece_count, 1 << (l - 1), "L = {l}");
            let f = count_pieces(&net, &Line::unit()).unwrap();
            assert_eq!(f.piece_count, 1 << (l - 1), "float L = {l}");
        }
    }

    #[test]
    fn pieces_bounded_by_regions() {
        for seed in 0..10 {
            let net = he_init(&Architecture::uniform(1, 8, 4).unwrap(), seed);
            let c = count_pieces(&net, &Line::interval(-1.0, 1.0).unwrap()).unwrap();
            assert!(c.piece_count <= c.activation_region_count);
        }
    }

    #[test]
    fn neuron_function_matches_preactivation() {
        let net = he_init(&Architecture::uniform(1, 5, 3).unwrap(), 8);
        let h = neuron_function(&net, &Line::unit(), 2, 3).unwrap();
        for t in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let eta = net.preactivations(&[t]).unwrap()[1][3];
            assert!((h.eval(t) - eta).abs() < 1e-12);
        }
    }
}
