use ndarray::{Array1, Array2};

use crate::graddesc::{Dataset, UpdateBundle};
use crate::net::Network;

/// Per-sample forward pass with plain loops; returns risk and the activation pattern.
fn risk_and_pattern(net: &Network, data: &Dataset) -> (f64, Vec<bool>) {
    let depth = net.depth();
    let mut pattern = Vec::new();
    let mut total = 0.0;
    for (x, y) in data.inputs().iter().zip(data.labels()) {
        let mut a = x.clone();
        for (j, layer) in net.layers().iter().enumerate() {
            let (rows, cols) = layer.weights.dim();
            let mut z = vec![0.0; rows];
            for (r, zr) in z.iter_mut().enumerate() {
                let mut s = 0.0;
                for c in 0..cols {
                    s += layer.weights[[r, c]] * a[c];
                }
                *zr = s + layer.bias[r];
            }
            if j + 1 < depth {
                pattern.extend(z.iter().map(|v| *v >= 0.0));
                a = z.iter().map(|v| v.max(0.0)).collect();
            } else {
                a = z;
            }
        }
        total += (a[0] - y) * (a[0] - y);
    }
    (total / data.len() as f64, pattern)
}

/// One parameter coordinate: layer (1-based), bias or weight, flat index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coordinate {
    pub layer: usize,
    pub weight: bool,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct FiniteDifference {
    pub updates: UpdateBundle,
    /// Coordinates whose `±h` perturbation changed some activation indicator.
    pub kinked: Vec<Coordinate>,
}

impl FiniteDifference {
    pub fn is_smooth(&self, c: Coordinate) -> bool {
        !self.kinked.contains(&c)
    }
}

/// Central differences `(R(θ + h e_i) − R(θ − h e_i)) / 2h` of the empirical risk
/// in every bias and weight coordinate.
pub fn finite_difference_updates(net: &Network, data: &Dataset, h: f64) -> FiniteDifference {
    let (_, base) = risk_and_pattern(net, data);
    let mut bias = Vec::new();
    let mut weights = Vec::new();
    let mut kinked = Vec::new();
    let probe = |j: usize, weight: bool, idx: usize, kinked: &mut Vec<Coordinate>| -> f64 {
        let mut plus = net.clone();
        let mut minus = net.clone();
        {
            let (p, m) = (plus.layer_mut(j), minus.layer_mut(j));
            if weight {
                let cols = p.weights.ncols();
                p.weights[[idx / cols, idx % cols]] += h;
                m.weights[[idx / cols, idx % cols]] -= h;
            } else {
                p.bias[idx] += h;
                m.bias[idx] -= h;
            }
        }
        let (rp, pp) = risk_and_pattern(&plus, data);
        let (rm, pm) = risk_and_pattern(&minus, data);
        if pp != base || pm != base {
            kinked.push(Coordinate { layer: j, weight, index: idx });
        }
        (rp - rm) / (2.0 * h)
    };
    for j in 1..=net.depth() {
        let layer = net.layer(j);
        let b = Array1::from_iter((0..layer.bias.len()).map(|i| probe(j, false, i, &mut kinked)));
        let (r, c) = layer.weights.dim();
        let flat: Vec<f64> = (0..r * c).map(|i| probe(j, true, i, &mut kinked)).collect();
        bias.push(b);
        weights.push(Array2::from_shape_vec((r, c), flat).unwrap());
    }
    FiniteDifference {
        updates: UpdateBundle { bias, weights },
        kinked,
    }
}
