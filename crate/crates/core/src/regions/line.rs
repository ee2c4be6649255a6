use serde::{Deserialize, Serialize};

use super::RegionError;

#[derive(Serialize, Deserialize)]
struct RawLine {
    anchor: Vec<f64>,
    direction: Vec<f64>,
    length: f64,
}

impl TryFrom<RawLine> for Line {
    type Error = RegionError;

    fn try_from(r: RawLine) -> Result<Self, RegionError> {
        Line::new(r.anchor, r.direction, r.length)
    }
}

impl From<Line> for RawLine {
    fn from(l: Line) -> Self {
        RawLine {
            anchor: l.anchor,
            direction: l.direction,
            length: l.length,
        }
    }
}

/// The segment `{w + t·v : t ∈ [0, 𝓛]}` with `‖v‖ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLine", into = "RawLine")]
pub struct Line {
    anchor: Vec<f64>,
    direction: Vec<f64>,
    length: f64,
}

impl Line {
    /// `direction` is normalized; it must be nonzero and `length > 0`.
    pub fn new(anchor: Vec<f64>, direction: Vec<f64>, length: f64) -> Result<Self, RegionError> {
        if anchor.len() != direction.len() || anchor.is_empty() {
            return Err(RegionError::InvalidLine("anchor and direction must share a nonzero dimension".into()));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(RegionError::InvalidLine(format!("length {length} must be positive")));
        }
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(RegionError::InvalidLine("direction must be nonzero".into()));
        }
        Ok(Self {
            anchor,
            direction: direction.iter().map(|v| v / norm).collect(),
            length,
        })
    }

    /// The segment from `a` to `b`.
    pub fn between(a: &[f64], b: &[f64]) -> Result<Self, RegionError> {
        let dir: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
        let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self::new(a.to_vec(), dir, len)
    }

    /// `[lo, hi]` in one dimension.
    pub fn interval(lo: f64, hi: f64) -> Result<Self, RegionError> {
        Self::new(vec![lo], vec![1.0], hi - lo)
    }

    /// `[0, 1]` in one dimension.
    pub fn unit() -> Self {
        Self::interval(0.0, 1.0).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        self.anchor
            .iter()
            .zip(&self.direction)
            .map(|(w, v)| w + t * v)
            .collect()
    }

    /// Whether the segment lies in `[lo, hi]^d`.
    pub fn within_box(&self, lo: f64, hi: f64) -> bool {
        [self.point(0.0), self.point(self.length)]
            .iter()
            .all(|p| p.iter().all(|&c| c >= lo - 1e-12 && c <= hi + 1e-12))
    }
}
