use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::net::Network;
use crate::regions::Line;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOracleConfig {
    pub points: usize,
    /// Relative slope change that counts as a breakpoint.
    pub tolerance: f64,
    /// Subdivisions per refinement of a flagged cluster.
    pub refine: usize,
    pub max_depth: u32,
}

impl Default for GridOracleConfig {
    fn default() -> Self {
        Self {
            points: 1_000_000,
            tolerance: 1e-6,
            refine: 32,
            max_depth: 4,
        }
    }
}

const CHUNK: usize = 8192;

/// Scalar output of `net` at `line.point(t)` for every `t`, by dense layer sweeps.
pub fn eval_on_line(net: &Network, line: &Line, ts: &[f64]) -> Vec<f64> {
    eval_with_error(net, line, ts).0
}

/// Outputs and a running forward error bound
/// `e_j = |A_j| e_(j−1) + (n_(j−1) + 1)·u·(|A_j| |x_(j−1)| + |b_j|)`.
fn eval_with_error(net: &Network, line: &Line, ts: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut out = Vec::with_capacity(ts.len());
    let mut err = Vec::with_capacity(ts.len());
    let (w, v) = (line.anchor(), line.direction());
    let depth = net.depth();
    let abs: Vec<(Array2<f64>, Array2<f64>)> = net
        .layers()
        .iter()
        .map(|l| (l.weights.mapv(f64::abs), l.bias.mapv(f64::abs).insert_axis(Axis(1))))
        .collect();
    for chunk in ts.chunks(CHUNK) {
        let mut x = Array2::from_shape_fn((w.len(), chunk.len()), |(r, c)| w[r] + chunk[c] * v[r]);
        let mut e = x.mapv(|s| s.abs() * f64::EPSILON);
        for (j, layer) in net.layers().iter().enumerate() {
            let (aw, ab) = &abs[j];
            let gamma = (layer.in_dim() as f64 + 2.0) * f64::EPSILON;
            let mag = aw.dot(&x.mapv(f64::abs)) + ab;
            e = aw.dot(&e) + mag * gamma;
            let mut z = layer.weights.dot(&x);
            z += &layer.bias.view().insert_axis(Axis(1));
            if j + 1 < depth {
                z.mapv_inplace(|s| s.max(0.0));
            }
            x = z;
        }
        out.extend(x.row(0).iter().copied());
        err.extend(e.row(0).iter().copied());
    }
    (out, err)
}

struct Grid<'a> {
    net: &'a Network,
    line: &'a Line,
    cfg: &'a GridOracleConfig,
}

impl Grid<'_> {
    /// Indices `i` where the secant slopes of cells `i−1` and `i` differ by more
    /// than the tolerance plus what evaluation error can explain.
    fn changes(&self, f: &[f64], e: &[f64], h: f64) -> Vec<bool> {
        let s: Vec<f64> = f.windows(2).map(|w| (w[1] - w[0]) / h).collect();
        let mut out = vec![false; f.len()];
        for i in 1..s.len() {
            let scale = s[i].abs().max(s[i - 1].abs());
            let floor = 2.0 * (e[i - 1] + 2.0 * e[i] + e[i + 1]) / h;
            out[i] = (s[i] - s[i - 1]).abs() > self.cfg.tolerance * scale + floor;
        }
        out
    }

    /// Breakpoints among the grid `t_i = lo + i·h`.
    fn count(&self, lo: f64, h: f64, f: &[f64], e: &[f64], depth: u32) -> usize {
        let ch = self.changes(f, e, h);
        let mut total = 0;
        let mut i = 1;
        while i < ch.len() {
            if !ch[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < ch.len() && ch[i] {
                i += 1;
            }
            let len = i - start;
            if depth < self.cfg.max_depth {
                // cells start−1 and end are clean, so the cluster lies in between
                let a = lo + (start as f64 - 1.0) * h;
                let b = lo + (i.min(f.len() - 1)) as f64 * h;
                let k = self.cfg.refine.max(4);
                let hh = (b - a) / k as f64;
                let ts: Vec<f64> = (0..=k).map(|m| a + m as f64 * hh).collect();
                let (sf, se) = eval_with_error(self.net, self.line, &ts);
                total += self.count(a, hh, &sf, &se, depth + 1).max(1);
            } else {
                total += len.div_ceil(2);
            }
        }
        total
    }
}

/// Affine pieces of the realisation along `line` found by sampling on a uniform grid.
///
/// Successive secant slopes that differ by more than `tolerance` relative to the
/// larger of the two, plus a roundoff floor from a forward error bound, flag a
/// breakpoint. Each flagged cluster is resampled on a finer grid so that nearby
/// breakpoints separate.
pub fn grid_piece_count(net: &Network, line: &Line, cfg: &GridOracleConfig) -> usize {
    let g = cfg.points.max(3);
    let h = line.length() / (g - 1) as f64;
    let ts: Vec<f64> = (0..g).map(|i| i as f64 * h).collect();
    let (f, e) = eval_with_error(net, line, &ts);
    let grid = Grid { net, line, cfg };
    1 + grid.count(0.0, h, &f, &e, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_yarotsky, Layer};
    use ndarray::array;

    #[test]
    fn affine_is_one_piece() {
        let net = Network::new(
            1,
            vec![Layer::new(array![[2.0]], array![1.0]), Layer::new(array![[-3.0]], array![0.5])],
        )
        .unwrap();
        for tol in [1e-9, 1e-6, 1e-2] {
            let cfg = GridOracleConfig {
                points: 1000,
                tolerance: tol,
                ..Default::default()
            };
            assert_eq!(grid_piece_count(&net, &Line::unit(), &cfg), 1);
        }
    }

    #[test]
    fn yarotsky_four_has_eight_pieces() {
        assert_eq!(grid_piece_count(&build_yarotsky(4).unwrap(), &Line::unit(), &Default::default()), 8);
    }

    #[test]
    fn close_hinges_are_separated() {
        // kinks at 0.5 and 0.5 + 1e-7, inside one coarse cell
        let net = Network::new(
            1,
            vec![
                Layer::new(array![[1.0], [1.0]], array![-0.5, -0.5 - 1e-7]),
                Layer::new(array![[1.0, 1.0]], array![0.0]),
            ],
        )
        .unwrap();
        let cfg = GridOracleConfig {
            points: 1001,
            ..Default::default()
        };
        assert_eq!(grid_piece_count(&net, &Line::unit(), &cfg), 3);
    }
}
