use num_bigint::BigUint;
use num_traits::Pow;

/// `(pN)^(L−1)`, exact.
pub fn telgarsky_bound(p: u64, n: u64, depth: u32) -> BigUint {
    Pow::pow(&BigUint::from(p * n), depth.saturating_sub(1))
}

/// `(pN)^(L−1)` as a float, saturating to infinity.
pub fn telgarsky_bound_f64(p: u64, n: u64, depth: u32) -> f64 {
    ((p * n) as f64).powi(depth.saturating_sub(1) as i32)
}

/// Parameters of the high-probability piece bound after one perturbed step.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdInputs<'a> {
    /// `N = d + Σ N_j`.
    pub neurons: usize,
    pub depth: usize,
    /// Step size `λ`.
    pub step: f64,
    /// `ε_1, …, ε_L`.
    pub eps: &'a [f64],
    pub c0: f64,
    pub nu: f64,
    /// `𝓛(κ)`.
    pub length: f64,
}

/// `2 · min_{j′} (1 + (2c_0/λ)·𝓛·j′·ε̂_{j′}⁻¹·N^ν·ln N) · (2N)^(L−j′)` with
/// `ε̂_{j′} = min_{j<j′} ε_j`. The `j′ = 1` term has no perturbation to draw
/// on and keeps only `(2N)^(L−1)`. Returns the bound and the minimizing `j′`.
pub fn theorem_threshold(inp: &ThresholdInputs<'_>) -> (f64, usize) {
    let n = inp.neurons as f64;
    let two_n = 2.0 * n;
    let mut best = (f64::INFINITY, 1);
    let mut eps_hat = f64::INFINITY;
    for jp in 1..=inp.depth {
        if jp >= 2 {
            eps_hat = eps_hat.min(inp.eps.get(jp - 2).copied().unwrap_or(0.0));
        }
        let additive = if jp == 1 {
            0.0
        } else if eps_hat > 0.0 {
            2.0 * inp.c0 / inp.step * inp.length * jp as f64 / eps_hat * n.powf(inp.nu) * n.ln()
        } else {
            f64::INFINITY
        };
        let value = 2.0 * (1.0 + additive) * two_n.powi((inp.depth - jp) as i32);
        if value < best.0 {
            best = (value, jp);
        }
    }
    best
}
