use std::f64::consts::PI;

use finprec::assumptions::assumption_a_statistic;
use finprec::graddesc::{exact_updates, Dataset, Target};
use finprec::net::{he_init_with_bias, Architecture};
use finprec::regions::{census_with, telgarsky_bound_f64, theorem_threshold, CountConfig, Line, ThresholdInputs};
use serde::{Deserialize, Serialize};

use crate::config::{nonempty, positive};
use crate::output::write_csv;
use crate::{derive_seed, Experiment, LabError, Result, RunContext, Scale};

/// Region counts of random networks against the combinatorial and noisy-training bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecesConfig {
    pub architecture: Vec<usize>,
    pub nets: usize,
    pub bias_std: f64,
    /// Segments `[lo, hi]` of the input axis to count on.
    pub lines: Vec<(f64, f64)>,
    /// Data for the one-step statistic entering the threshold.
    pub target: Target,
    pub samples: usize,
    pub domain: (f64, f64),
    pub step: f64,
    /// Per-layer noise amplitude used in the threshold.
    pub eps: f64,
    pub nu: f64,
    pub tolerance: f64,
}

impl Experiment for PiecesConfig {
    fn defaults(scale: Scale) -> Self {
        Self {
            architecture: vec![1, 20, 20, 20, 1],
            nets: if scale == Scale::Paper { 1000 } else { 100 },
            bias_std: 0.5,
            lines: vec![(0.0, 1.0), (-1.0, 1.0), (0.0, 2.0 * PI)],
            target: Target::Sine,
            samples: 500,
            domain: (0.0, 2.0 * PI),
            step: 0.02,
            eps: 1e-4,
            nu: 2.0,
            tolerance: CountConfig::default().zero_tol,
        }
    }

    fn validate(&self) -> Result<()> {
        nonempty(&self.lines, "lines")?;
        positive(self.nets, "nets")?;
        positive(self.samples, "samples")?;
        if self.architecture.first() != Some(&1) {
            return Err(LabError::Config("counting is along the input axis and needs d = 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecesRow {
    pub net_id: usize,
    pub line_id: usize,
    pub pieces: usize,
    pub activation_regions: usize,
    pub telgarsky_bound: f64,
    pub theorem_threshold: f64,
    pub tolerance: f64,
}

pub fn run_pieces(cfg: &PiecesConfig, ctx: &RunContext) -> Result<Vec<PiecesRow>> {
    cfg.validate()?;
    ctx.ensure_out()?;
    let arch = Architecture::new(cfg.architecture.clone())?;
    let lines = cfg
        .lines
        .iter()
        .map(|&(lo, hi)| Line::interval(lo, hi))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let count = CountConfig {
        zero_tol: cfg.tolerance,
        ..CountConfig::default()
    };
    let depth = arch.depth();
    let width = arch.max_width() as u64;
    let eps = vec![cfg.eps; depth];
    let per_net: Vec<Result<Vec<PiecesRow>>> = ctx.par_map((0..cfg.nets).collect(), |id| {
        let seed = derive_seed(ctx.seed, 0, id as u64);
        let net = he_init_with_bias(&arch, cfg.bias_std, seed);
        let data = Dataset::sample(cfg.target, cfg.samples, cfg.domain, derive_seed(seed, 0, 1));
        let c0 = assumption_a_statistic(&exact_updates(&net, &data)?, cfg.nu, net.neuron_count());
        let mut rows = Vec::new();
        for (li, line) in lines.iter().enumerate() {
            let c = census_with(&net, line, &count)?;
            let (threshold, _) = theorem_threshold(&ThresholdInputs {
                neurons: net.neuron_count(),
                depth,
                step: cfg.step,
                eps: &eps,
                c0,
                nu: cfg.nu,
                length: line.length(),
            });
            rows.push(PiecesRow {
                net_id: id,
                line_id: li,
                pieces: c.piece_count,
                activation_regions: c.activation_region_count,
                telgarsky_bound: telgarsky_bound_f64(2, width, depth as u32),
                theorem_threshold: threshold,
                tolerance: cfg.tolerance,
            });
        }
        Ok(rows)
    })?;
    let mut rows = Vec::new();
    for r in per_net {
        rows.extend(r?);
    }
    write_csv(&ctx.path("pieces.csv"), &rows)?;
    Ok(rows)
}
