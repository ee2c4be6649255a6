use crate::net::Network;
use crate::scalar::Scalar;

use super::{CountConfig, Line, RegionError};

/// Preactivations of one layer restricted to the line, on the common vertex set.
#[derive(Debug, Clone)]
pub struct LayerTrace<S> {
    /// `values[k][i]` is `(η_j)_k(t_i)`.
    pub values: Vec<Vec<S>>,
    /// `slopes[k][i]` is the derivative of `(η_j)_k` on `(t_i, t_{i+1})`.
    pub slopes: Vec<Vec<S>>,
}

impl<S: Scalar> LayerTrace<S> {
    pub fn width(&self) -> usize {
        self.values.len()
    }

    /// Whether neuron `k` is active (preactivation `>= 0`) on interval `i`.
    pub fn active(&self, k: usize, i: usize) -> bool {
        !self.values[k][i].add(&self.values[k][i + 1]).is_negative()
    }

    /// Slope of `ρ((η_j)_k)` on interval `i`.
    pub fn post_slope(&self, k: usize, i: usize) -> S {
        let mid = self.values[k][i].add(&self.values[k][i + 1]);
        if mid.is_positive() {
            self.slopes[k][i].clone()
        } else {
            S::zero()
        }
    }
}

/// Every layer of a network restricted to a line, refined so that no
/// preactivation changes sign strictly inside an interval.
#[derive(Debug, Clone)]
pub struct Propagation<S> {
    /// Vertices `0 = t_0 < t_1 < … < t_P = 𝓛`.
    pub ts: Vec<S>,
    /// Layers `1..=L`; the last one is the output.
    pub layers: Vec<LayerTrace<S>>,
}

impl<S: Scalar> Propagation<S> {
    pub fn intervals(&self) -> usize {
        self.ts.len() - 1
    }

    pub fn output(&self) -> &LayerTrace<S> {
        self.layers.last().unwrap()
    }
}

fn affine<S: Scalar>(
    weights: &[Vec<S>],
    bias: &[S],
    xs: &[Vec<S>],
    slopes: &[Vec<S>],
) -> (Vec<Vec<S>>, Vec<Vec<S>>) {
    let nv = xs[0].len();
    let ni = slopes[0].len();
    let mut z = Vec::with_capacity(weights.len());
    let mut g = Vec::with_capacity(weights.len());
    for (row, b) in weights.iter().zip(bias) {
        let mut zv = vec![b.clone(); nv];
        let mut gv = vec![S::zero(); ni];
        for (w, (x, s)) in row.iter().zip(xs.iter().zip(slopes)) {
            if w.is_zero() {
                continue;
            }
            for (acc, xi) in zv.iter_mut().zip(x) {
                *acc = acc.add(&w.mul(xi));
            }
            for (acc, si) in gv.iter_mut().zip(s) {
                *acc = acc.add(&w.mul(si));
            }
        }
        z.push(zv);
        g.push(gv);
    }
    (z, g)
}

/// Inserts vertices given as `(interval index, t)` sorted by t, interpolating affinely.
fn refine<S: Scalar>(values: &mut [Vec<S>], slopes: &mut [Vec<S>], ts: &[S], inserts: &[(usize, S)]) {
    for (vals, sl) in values.iter_mut().zip(slopes.iter_mut()) {
        let mut nv = Vec::with_capacity(vals.len() + inserts.len());
        let mut ns = Vec::with_capacity(sl.len() + inserts.len());
        let mut next = inserts.iter().peekable();
        for i in 0..sl.len() {
            nv.push(vals[i].clone());
            ns.push(sl[i].clone());
            while let Some((_, t)) = next.next_if(|(iv, _)| *iv == i) {
                let v = vals[i].add(&sl[i].mul(&t.sub(&ts[i])));
                nv.push(v);
                ns.push(sl[i].clone());
            }
        }
        nv.push(vals[sl.len()].clone());
        *vals = nv;
        *sl = ns;
    }
}

fn merged_ts<S: Scalar>(ts: &[S], inserts: &[(usize, S)]) -> Vec<S> {
    let mut out = Vec::with_capacity(ts.len() + inserts.len());
    let mut next = inserts.iter().peekable();
    for i in 0..ts.len() {
        out.push(ts[i].clone());
        while let Some((_, t)) = next.next_if(|(iv, _)| *iv == i) {
            out.push(t.clone());
        }
    }
    out
}

/// Restricts `net` to `line` layer by layer.
pub fn propagate<S: Scalar>(net: &Network, line: &Line, cfg: &CountConfig) -> Result<Propagation<S>, RegionError> {
    if net.input_dim() != line.dim() {
        return Err(RegionError::DimensionMismatch {
            expected: net.input_dim(),
            got: line.dim(),
        });
    }
    let len = S::from_f64(line.length());
    let mut ts = vec![S::zero(), len.clone()];
    let mut xs: Vec<Vec<S>> = line
        .anchor()
        .iter()
        .zip(line.direction())
        .map(|(&w, &v)| vec![S::from_f64(w), S::from_f64(w).add(&S::from_f64(v).mul(&len))])
        .collect();
    let mut xslopes: Vec<Vec<S>> = line.direction().iter().map(|&v| vec![S::from_f64(v)]).collect();
    let snap = cfg.snap_tol;
    let depth = net.depth();
    let mut layers: Vec<LayerTrace<S>> = Vec::with_capacity(depth);

    for (j, layer) in net.layers().iter().enumerate() {
        let w: Vec<Vec<S>> = layer
            .weights
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|&v| S::from_f64(v)).collect())
            .collect();
        let b: Vec<S> = layer.bias.iter().map(|&v| S::from_f64(v)).collect();
        let (mut z, mut g) = affine(&w, &b, &xs, &xslopes);
        let hidden = j + 1 < depth;

        if hidden {
            let mut inserts: Vec<(usize, S, usize)> = Vec::new();
            for (k, (zk, gk)) in z.iter().zip(&g).enumerate() {
                let scale = zk.iter().fold(S::zero(), |m, v| S::max(m, v.abs()));
                let sign = |v: &S| -> i8 {
                    if S::negligible(v, &scale, cfg.zero_tol) {
                        0
                    } else if v.is_positive() {
                        1
                    } else {
                        -1
                    }
                };
                for i in 0..gk.len() {
                    let (sa, sb) = (sign(&zk[i]), sign(&zk[i + 1]));
                    if sa * sb >= 0 {
                        continue;
                    }
                    let t = ts[i].sub(&zk[i].div(&gk[i]));
                    if !S::EXACT {
                        let (ta, tb) = (ts[i].to_f64(), ts[i + 1].to_f64());
                        let tf = t.to_f64();
                        if !(tf - ta > snap && tb - tf > snap) {
                            continue;
                        }
                    }
                    inserts.push((i, t, k));
                }
            }
            if !inserts.is_empty() {
                inserts.sort_by(|a, b| {
                    a.0.cmp(&b.0)
                        .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                });
                let mut dedup: Vec<(usize, S, Vec<usize>)> = Vec::with_capacity(inserts.len());
                for (i, t, k) in inserts {
                    if let Some(last) = dedup.last_mut() {
                        let same = last.0 == i
                            && if S::EXACT {
                                last.1 == t
                            } else {
                                (t.to_f64() - last.1.to_f64()).abs() <= snap
                            };
                        if same {
                            last.2.push(k);
                            continue;
                        }
                    }
                    dedup.push((i, t, vec![k]));
                }
                let plain: Vec<(usize, S)> = dedup.iter().map(|(i, t, _)| (*i, t.clone())).collect();
                for tr in layers.iter_mut() {
                    refine(&mut tr.values, &mut tr.slopes, &ts, &plain);
                }
                refine(&mut z, &mut g, &ts, &plain);
                let new_ts = merged_ts(&ts, &plain);
                if !S::EXACT {
                    // pin the crossing neurons to zero at their own crossings
                    let mut pos = 0;
                    for (_, t, ks) in &dedup {
                        while new_ts[pos] != *t {
                            pos += 1;
                        }
                        for &k in ks {
                            z[k][pos] = S::zero();
                        }
                    }
                }
                ts = new_ts;
            }
            xs = z.iter().map(|zk| zk.iter().map(|v| S::max(v.clone(), S::zero())).collect()).collect();
            let trace = LayerTrace { values: z, slopes: g };
            xslopes = (0..trace.width())
                .map(|k| (0..ts.len() - 1).map(|i| trace.post_slope(k, i)).collect())
                .collect();
            layers.push(trace);
        } else {
            layers.push(LayerTrace { values: z, slopes: g });
        }
    }
    Ok(Propagation { ts, layers })
}
