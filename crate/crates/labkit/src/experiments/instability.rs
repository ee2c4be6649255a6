use finprec::fparith::{round_nearest, FloatFormat};
use finprec::net::{build_unstable, unstable_admissibility, FpNetwork};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{nonempty, positive};
use crate::output::{mean, write_csv};
use crate::{derive_seed, Experiment, Result, RunContext, Scale};

/// `(λ, N, L)` of one unstable network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnstableCase {
    pub weight_scale: f64,
    pub width: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilityConfig {
    pub format: String,
    pub cases: Vec<UnstableCase>,
    pub inputs: usize,
}

impl Experiment for InstabilityConfig {
    fn defaults(_: Scale) -> Self {
        let case = |weight_scale, width, depth| UnstableCase {
            weight_scale,
            width,
            depth,
        };
        Self {
            format: "b10p16e-60:60".into(),
            cases: vec![case(10.0, 65, 8), case(10.0, 33, 9), case(100.0, 9, 7), case(3.0, 5, 6), case(1.0, 3, 5)],
            inputs: 100,
        }
    }

    fn validate(&self) -> Result<()> {
        nonempty(&self.cases, "cases")?;
        positive(self.inputs, "inputs")?;
        self.format.parse::<FloatFormat>()?;
        Ok(())
    }
}

/// One input through one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilityRow {
    pub weight_scale: f64,
    pub width: usize,
    pub depth: usize,
    pub input: f64,
    pub exact: f64,
    pub floating: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstabilitySummary {
    pub weight_scale: f64,
    pub width: usize,
    pub depth: usize,
    /// Left side of the admissibility inequality; admissible when at least `p`.
    pub admissibility: f64,
    pub admissible: bool,
    pub inputs: usize,
    pub zero_outputs: usize,
    pub mean_relative_error: f64,
    pub min_relative_error: f64,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityReport {
    pub rows: Vec<InstabilityRow>,
    pub summaries: Vec<InstabilitySummary>,
}

pub fn run_instability(cfg: &InstabilityConfig, ctx: &RunContext) -> Result<InstabilityReport> {
    cfg.validate()?;
    ctx.ensure_out()?;
    let fmt: FloatFormat = cfg.format.parse()?;
    let eps = fmt.machine_epsilon();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (ci, c) in cfg.cases.iter().enumerate() {
        let net = build_unstable(c.weight_scale, c.width, c.depth)?;
        let fp_net = FpNetwork::new(&net, fmt)?;
        let exact_net = net.to_rational()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed, ci as u64, 0));
        let mut errs = Vec::with_capacity(cfg.inputs);
        let mut zeros = 0;
        for _ in 0..cfg.inputs {
            // positive, exactly representable in the target format
            let x = loop {
                let v = round_nearest(rng.random::<f64>(), &fmt)?;
                if !v.is_zero() {
                    break v;
                }
            };
            let xr = x.to_rational(&fmt);
            let exact = exact_net.realize(std::slice::from_ref(&xr)).remove(0);
            let fp = fp_net.realize(std::slice::from_ref(&x))?.remove(0);
            zeros += usize::from(fp.is_zero());
            let rel = relative_error(&fp.to_rational(&fmt), &exact);
            errs.push(rel);
            rows.push(InstabilityRow {
                weight_scale: c.weight_scale,
                width: c.width,
                depth: c.depth,
                input: x.to_f64(&fmt),
                exact: exact.to_f64().unwrap_or(f64::NAN),
                floating: fp.to_f64(&fmt),
                relative_error: rel,
            });
        }
        let admissibility = unstable_admissibility(c.weight_scale, c.width, c.depth, eps);
        summaries.push(InstabilitySummary {
            weight_scale: c.weight_scale,
            width: c.width,
            depth: c.depth,
            admissibility,
            admissible: admissibility >= fmt.precision() as f64,
            inputs: cfg.inputs,
            zero_outputs: zeros,
            mean_relative_error: mean(&errs),
            min_relative_error: errs.iter().copied().fold(f64::INFINITY, f64::min),
            max_relative_error: errs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
        log::info!(
            "instability: lambda = {}, N = {}, L = {}: {zeros}/{} outputs zero",
            c.weight_scale,
            c.width,
            c.depth,
            cfg.inputs
        );
    }
    write_csv(&ctx.path("instability_inputs.csv"), &rows)?;
    write_csv(&ctx.path("instability.csv"), &summaries)?;
    Ok(InstabilityReport { rows, summaries })
}

/// `|a − b| / |b|`, computed exactly; `0` when both vanish.
pub fn relative_error(approx: &BigRational, exact: &BigRational) -> f64 {
    if exact.is_zero() {
        return if approx.is_zero() { 0.0 } else { f64::INFINITY };
    }
    ((approx - exact) / exact).abs().to_f64().unwrap_or(f64::INFINITY)
}
