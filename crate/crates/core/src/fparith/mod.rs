//! Software floating-point arithmetic over a parametric format.
//!
//! Every operation computes the exact result first and rounds once, so
//! `add_fp`, `mul_fp` and `matvec_fp` are the correctly rounded operations
//! of the format and not an approximation of them.

mod format;
mod value;

use ndarray::Array2;
use thiserror::Error;

pub use format::FloatFormat;
pub use value::{add_fp, mul_fp, one, parse_decimal, round_nearest, round_rational, sub_fp, FpValue};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FpError {
    #[error("invalid float format: {0}")]
    InvalidFormat(String),
    #[error("overflow: result exponent {exponent} exceeds emax {emax}")]
    Overflow { exponent: i64, emax: i32 },
    #[error("cannot round non-finite value {0}")]
    NonFinite(f64),
    #[error("not representable: {0}")]
    NotRepresentable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// `½·b^(1−p)`.
pub fn machine_epsilon(fmt: &FloatFormat) -> f64 {
    fmt.machine_epsilon()
}

/// A real matrix with every entry rounded into a format once.
#[derive(Debug, Clone, PartialEq)]
pub struct FpMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<FpValue>,
}

impl FpMatrix {
    pub fn round(a: &Array2<f64>, fmt: &FloatFormat) -> Result<Self, FpError> {
        let (rows, cols) = a.dim();
        let entries = a
            .iter()
            .map(|&v| round_nearest(v, fmt))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> FpValue {
        self.entries[i * self.cols + j]
    }

    /// Row `i` is `(a_i1 ⊗ x_1) ⊕ (a_i2 ⊗ x_2) ⊕ … ⊕ (a_in ⊗ x_n)`, folded left to right.
    pub fn matvec(&self, x: &[FpValue], fmt: &FloatFormat) -> Result<Vec<FpValue>, FpError> {
        if x.len() != self.cols {
            return Err(FpError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        if self.cols == 0 {
            return Ok(vec![FpValue::ZERO; self.rows]);
        }
        let mut out = Vec::with_capacity(self.rows);
        for row in self.entries.chunks(self.cols) {
            let mut acc: Option<FpValue> = None;
            for (a, xi) in row.iter().zip(x) {
                let term = mul_fp(a, xi, fmt)?;
                acc = Some(match acc {
                    None => term,
                    Some(s) => add_fp(&s, &term, fmt)?,
                });
            }
            out.push(acc.unwrap_or(FpValue::ZERO));
        }
        Ok(out)
    }
}

/// Finite-precision matrix-vector product with entries of `a` rounded into `fmt`.
pub fn matvec_fp(a: &Array2<f64>, x: &[FpValue], fmt: &FloatFormat) -> Result<Vec<FpValue>, FpError> {
    FpMatrix::round(a, fmt)?.matvec(x, fmt)
}
