use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TailFitError {
    #[error("no samples in (0, 1)")]
    Empty,
    #[error("fewer than two decades hold at least {0} samples")]
    SparseTail(u64),
}

/// Log-binned counts of magnitudes in `(0, 1)`; bin `i` is `[10^(i/B), 10^((i+1)/B))`.
///
/// Accumulation is order-independent and histograms with the same bin density merge by addition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogHistogram {
    bins_per_decade: u32,
    counts: BTreeMap<i64, u64>,
    zeros: u64,
    at_least_one: u64,
}

impl LogHistogram {
    pub fn new(bins_per_decade: u32) -> Self {
        Self {
            bins_per_decade: bins_per_decade.max(1),
            counts: BTreeMap::new(),
            zeros: 0,
            at_least_one: 0,
        }
    }

    pub fn bins_per_decade(&self) -> u32 {
        self.bins_per_decade
    }

    /// Records `|v|`; exact zeros and magnitudes `>= 1` are tallied but not binned.
    pub fn add(&mut self, v: f64) {
        let a = v.abs();
        if a == 0.0 {
            self.zeros += 1;
        } else if a >= 1.0 || !a.is_finite() {
            self.at_least_one += 1;
        } else {
            let mut bin = (a.log10() * self.bins_per_decade as f64).floor() as i64;
            // guard log10 rounding at bin edges
            if self.lower_edge(bin + 1) <= a {
                bin += 1;
            } else if self.lower_edge(bin) > a {
                bin -= 1;
            }
            *self.counts.entry(bin).or_insert(0) += 1;
        }
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, it: I) {
        for v in it {
            self.add(v);
        }
    }

    pub fn merge(&mut self, other: &LogHistogram) {
        assert_eq!(self.bins_per_decade, other.bins_per_decade, "bin densities differ");
        for (b, c) in &other.counts {
            *self.counts.entry(*b).or_insert(0) += c;
        }
        self.zeros += other.zeros;
        self.at_least_one += other.at_least_one;
    }

    pub fn retained(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn zeros(&self) -> u64 {
        self.zeros
    }

    pub fn excluded_large(&self) -> u64 {
        self.at_least_one
    }

    pub fn lower_edge(&self, bin: i64) -> f64 {
        10f64.powf(bin as f64 / self.bins_per_decade as f64)
    }

    /// `(lower, upper, relative frequency, density)` per nonempty bin, ascending.
    pub fn rows(&self) -> Vec<(f64, f64, f64, f64)> {
        let total = self.retained() as f64;
        self.counts
            .iter()
            .map(|(&b, &c)| {
                let (lo, hi) = (self.lower_edge(b), self.lower_edge(b + 1));
                let freq = c as f64 / total;
                (lo, hi, freq, freq / (hi - lo))
            })
            .collect()
    }

    fn decade_counts(&self) -> BTreeMap<i64, u64> {
        let mut out = BTreeMap::new();
        for (&b, &c) in &self.counts {
            *out.entry(b.div_euclid(self.bins_per_decade as i64)).or_insert(0) += c;
        }
        out
    }

    /// Least-squares fit of `log10(density)` against `log10(x)` over the two lowest
    /// decades holding at least `min_per_decade` samples each.
    pub fn tail_fit(&self, min_per_decade: u64) -> Result<HistogramFit, TailFitError> {
        if self.retained() == 0 {
            return Err(TailFitError::Empty);
        }
        let decades: Vec<i64> = self
            .decade_counts()
            .into_iter()
            .filter(|(_, c)| *c >= min_per_decade)
            .map(|(d, _)| d)
            .take(2)
            .collect();
        if decades.len() < 2 {
            return Err(TailFitError::SparseTail(min_per_decade));
        }
        let bpd = self.bins_per_decade as i64;
        let points: Vec<(f64, f64)> = self
            .rows()
            .into_iter()
            .zip(self.counts.keys())
            .filter(|(_, b)| decades.contains(&b.div_euclid(bpd)))
            .map(|((lo, hi, _, dens), _)| (((lo * hi).sqrt()).log10(), dens.log10()))
            .collect();
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        // C in C·x^(−1/2) fitted to the relative frequencies over the same window
        let freq_rows: Vec<(f64, f64)> = self
            .rows()
            .into_iter()
            .zip(self.counts.keys())
            .filter(|(_, b)| decades.contains(&b.div_euclid(bpd)))
            .map(|((lo, hi, f, _), _)| ((lo * hi).sqrt(), f))
            .collect();
        let log_c = freq_rows.iter().map(|(x, f)| f.log10() + 0.5 * x.log10()).sum::<f64>()
            / freq_rows.len() as f64;
        Ok(HistogramFit {
            slope,
            intercept: my - slope * mx,
            window: (self.lower_edge(decades[0] * bpd), self.lower_edge((decades[1] + 1) * bpd)),
            points: points.len(),
            reference_constant: 10f64.powf(log_c),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramFit {
    /// Fitted exponent `α` in `density ∝ x^α`.
    pub slope: f64,
    pub intercept: f64,
    /// `[lo, hi)` range of the fit.
    pub window: (f64, f64),
    pub points: usize,
    /// `C` such that `C·x^(−1/2)` matches the relative frequencies in the window.
    pub reference_constant: f64,
}

/// Histogram of `|u|` for `u` in `samples` with `|u| < 1`, and its tail fit
/// over the two lowest decades with at least 30 samples.
pub fn bias_update_histogram(
    samples: &[f64],
    bins_per_decade: u32,
) -> Result<(LogHistogram, HistogramFit), TailFitError> {
    let mut h = LogHistogram::new(bins_per_decade);
    h.extend(samples.iter().copied());
    let fit = h.tail_fit(30)?;
    Ok((h, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_sqrt_law_gives_half_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // density ∝ x^(−1/2) on (0, 1] is the law of U²
        let samples: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>().powi(2)).collect();
        let (h, fit) = bias_update_histogram(&samples, 4).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.1, "slope {}", fit.slope);
        let mass: f64 = h.rows().iter().map(|r| r.2).sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_law_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let samples: Vec<f64> = (0..200_000).map(|_| rng.random::<f64>()).collect();
        let (_, fit) = bias_update_histogram(&samples, 4).unwrap();
        assert!(fit.slope.abs() < 0.1, "slope {}", fit.slope);
    }

    #[test]
    fn merge_is_order_independent() {
        let xs = [0.5, 0.01, 0.0, 2.0, 0.03, 1e-5];
        let mut a = LogHistogram::new(4);
        a.extend(xs[..3].iter().copied());
        let mut b = LogHistogram::new(4);
        b.extend(xs[3..].iter().copied());
        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        let mut all = LogHistogram::new(4);
        all.extend(xs.iter().rev().copied());
        assert_eq!(ab, all);
        assert_eq!((all.zeros(), all.excluded_large(), all.retained()), (1, 1, 4));
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert_eq!(bias_update_histogram(&[0.0, 3.0], 4).unwrap_err(), TailFitError::Empty);
    }
}
