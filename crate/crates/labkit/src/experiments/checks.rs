use finprec::assumptions::{max_preactivation_slope, LogHistogram};
use finprec::graddesc::{exact_updates, train, Dataset, PerturbationSchedule, ProbeConfig, StepSchedule, Target};
use finprec::net::{he_init, Architecture};
use finprec::regions::Line;
use serde::{Deserialize, Serialize};

use crate::config::positive;
use crate::output::write_csv;
use crate::{derive_seed, Experiment, LabError, Result, RunContext, Scale};

/// Assumption A, the dead-neuron condition and the slope bound along short training runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecksConfig {
    pub architecture: Vec<usize>,
    pub nets: usize,
    pub target: Target,
    pub samples: usize,
    pub domain: (f64, f64),
    pub noise: PerturbationSchedule,
    pub steps: StepSchedule,
    pub iterations: usize,
    pub bins_per_decade: u32,
    pub min_per_decade: u64,
}

impl Experiment for ChecksConfig {
    fn defaults(scale: Scale) -> Self {
        Self {
            architecture: vec![1, 50, 50, 50, 1],
            nets: if scale == Scale::Paper { 100 } else { 10 },
            target: Target::Sine,
            samples: 500,
            domain: (0.0, 1.0),
            noise: PerturbationSchedule::matvec(1e-4),
            steps: StepSchedule::InvSqrt { base: 0.02, div: 8.0 },
            iterations: 20,
            bins_per_decade: 5,
            min_per_decade: 30,
        }
    }

    fn validate(&self) -> Result<()> {
        positive(self.nets, "nets")?;
        positive(self.samples, "samples")?;
        positive(self.iterations, "iterations")?;
        self.steps.validated()?;
        if self.architecture.first() != Some(&1) {
            return Err(LabError::Config("slopes are measured along the input axis and need d = 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecksRow {
    pub net_id: usize,
    pub iteration: usize,
    pub statistic_nu2: f64,
    pub dagger_zero_count: usize,
    pub dead_violations: Option<usize>,
    pub max_abs_slope: Option<f64>,
    /// Fitted log-log slope of the small-update density, pooled over all initial networks.
    pub pole_slope_estimate: Option<f64>,
}

pub fn run_checks(cfg: &ChecksConfig, ctx: &RunContext) -> Result<Vec<ChecksRow>> {
    cfg.validate()?;
    ctx.ensure_out()?;
    let arch = Architecture::new(cfg.architecture.clone())?;
    let line = Line::interval(cfg.domain.0, cfg.domain.1)?;
    let per_net: Vec<Result<(Vec<ChecksRow>, LogHistogram)>> = ctx.par_map((0..cfg.nets).collect(), |id| {
        let seed = derive_seed(ctx.seed, 0, id as u64);
        let net = he_init(&arch, seed);
        let data = Dataset::sample(cfg.target, cfg.samples, cfg.domain, derive_seed(seed, 0, 1));
        let probes = ProbeConfig {
            line: line.clone(),
            nu: 2.0,
            check_dead_neurons: true,
            initial_census: false,
            ..ProbeConfig::every(1)
        };
        let trace = train(&net, &data, &cfg.noise, &cfg.steps, cfg.iterations, derive_seed(seed, 1, 0), &probes)?;
        let mut hist = LogHistogram::new(cfg.bins_per_decade);
        hist.extend(exact_updates(&net, &data)?.hidden_bias_updates());
        let mut rows: Vec<ChecksRow> = trace
            .records
            .iter()
            .map(|r| ChecksRow {
                net_id: id,
                iteration: r.iteration,
                statistic_nu2: r.assumption_a_statistic,
                dagger_zero_count: r.zero_bias_updates,
                dead_violations: r.dead_neuron_violations,
                max_abs_slope: r.max_abs_preact_gradient,
                pole_slope_estimate: None,
            })
            .collect();
        if let Some(last) = rows.last_mut() {
            if last.max_abs_slope.is_none() {
                last.max_abs_slope = Some(max_preactivation_slope(&trace.final_network, &line)?.max_abs_slope);
            }
        }
        Ok((rows, hist))
    })?;
    let mut rows = Vec::new();
    let mut pooled = LogHistogram::new(cfg.bins_per_decade);
    for r in per_net {
        let (r, h) = r?;
        rows.extend(r);
        pooled.merge(&h);
    }
    // one-step updates of all initial networks, pooled
    let pole = pooled.tail_fit(cfg.min_per_decade).ok().map(|f| f.slope);
    for r in &mut rows {
        r.pole_slope_estimate = pole;
    }
    write_csv(&ctx.path("assumptions.csv"), &rows)?;
    Ok(rows)
}
