use super::RegionError;

/// A continuous piecewise-affine function on `[t_0, t_P]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear1D {
    ts: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PiecewiseLinear1D {
    /// Interpolates `values` at the strictly increasing `ts`.
    pub fn new(ts: Vec<f64>, values: Vec<f64>) -> Result<Self, RegionError> {
        if ts.len() < 2 || ts.len() != values.len() {
            return Err(RegionError::InvalidFunction(
                "need at least two vertices and one value per vertex".into(),
            ));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(RegionError::InvalidFunction("vertices must increase strictly".into()));
        }
        let slopes = ts
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
            .collect();
        Ok(Self { ts, values, slopes })
    }

    /// Builds from vertices, vertex values and separately known interval slopes.
    pub fn with_slopes(ts: Vec<f64>, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self, RegionError> {
        let mut f = Self::new(ts, values)?;
        if slopes.len() != f.slopes.len() {
            return Err(RegionError::InvalidFunction("one slope per interval".into()));
        }
        f.slopes = slopes;
        Ok(f)
    }

    /// `k` teeth of slope `±1` on `[0, 2k·peak]`, starting at 0.
    pub fn sawtooth(teeth: usize, peak: f64) -> Self {
        let n = 2 * teeth.max(1);
        let ts = (0..=n).map(|i| i as f64 * peak).collect();
        let values = (0..=n).map(|i| if i % 2 == 1 { peak } else { 0.0 }).collect();
        Self::new(ts, values).unwrap()
    }

    pub fn vertices(&self) -> &[f64] {
        &self.ts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn start(&self) -> f64 {
        self.ts[0]
    }

    pub fn end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = match self.ts.partition_point(|&v| v <= t) {
            0 => 0,
            p => (p - 1).min(self.slopes.len() - 1),
        };
        self.values[i] + self.slopes[i] * (t - self.ts[i])
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.slopes.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// `#{t : h(t) = level}`, counting each piece on `[t_i, t_{i+1})` and the final endpoint.
    ///
    /// A piece constant at `level` has infinitely many solutions and is counted once.
    pub fn crossings(&self, level: f64) -> usize {
        let mut count = 0;
        for i in 0..self.slopes.len() {
            let (a, b) = (self.values[i], self.values[i + 1]);
            let hit = if a == b {
                a == level
            } else if a < b {
                a <= level && level < b
            } else {
                b < level && level <= a
            };
            if hit {
                count += 1;
            }
        }
        if *self.values.last().unwrap() == level {
            count += 1;
        }
        count
    }

    /// Number of sign changes of `h + shift` strictly inside pieces: points where
    /// `ρ(h + shift)` gains a kink although `h` is affine there.
    pub fn interior_zero_crossings(&self, shift: f64) -> usize {
        let mut count = 0;
        for i in 0..self.slopes.len() {
            let (a, b) = (self.values[i] + shift, self.values[i + 1] + shift);
            if (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0) {
                count += 1;
            }
        }
        count
    }

    /// `1 +` the number of vertices where the slope changes by more than `rel` relative.
    pub fn piece_count(&self, rel: f64) -> usize {
        1 + self
            .slopes
            .windows(2)
            .filter(|w| slope_changed(w[0], w[1], rel))
            .count()
    }
}

pub(crate) fn slope_changed(a: f64, b: f64, rel: f64) -> bool {
    let diff = (a - b).abs();
    diff > rel * a.abs().max(b.abs()) && diff > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sawtooth_crossings() {
        let h = PiecewiseLinear1D::sawtooth(8, 1.0 / 16.0);
        assert_eq!(h.end(), 1.0);
        assert_eq!(h.max_abs_slope(), 1.0);
        assert_eq!(h.crossings(0.03), 16);
        assert_eq!(h.crossings(1.0 / 16.0), 8);
        assert_eq!(h.crossings(0.5), 0);
        assert_eq!(h.piece_count(1e-9), 16);
    }

    #[test]
    fn identity_crossing() {
        let h = PiecewiseLinear1D::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        for u in [0.0, 0.3, 1.0] {
            assert_eq!(h.crossings(u), 1);
        }
        assert_eq!(h.eval(0.25), 0.25);
        assert_eq!(h.interior_zero_crossings(-0.5), 1);
        assert_eq!(h.interior_zero_crossings(0.5), 0);
    }
}
