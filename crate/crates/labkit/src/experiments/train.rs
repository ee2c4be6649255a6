use std::path::PathBuf;

use finprec::graddesc::{train, Dataset, PerturbationSchedule, ProbeConfig, StepSchedule, Target, TraceRecord};
use finprec::net::{build_yarotsky, he_init, he_init_with_bias, Architecture, Network};
use finprec::regions::Line;
use serde::{Deserialize, Serialize};

use crate::config::{nonempty, positive};
use crate::output::{write_csv, write_text};
use crate::{derive_seed, Experiment, LabError, Result, RunContext, Scale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum InitScheme {
    /// He-normal weights, zero biases.
    He,
    /// He-normal weights, `N(0, bias_std²)` biases.
    HeWithBias { bias_std: f64 },
    /// The squaring network of the given depth; ignores `architecture`.
    Squaring { depth: usize },
    /// A network saved as JSON.
    File { path: PathBuf },
}

impl InitScheme {
    pub fn build(&self, dims: &[usize], seed: u64) -> Result<Network> {
        Ok(match self {
            InitScheme::He => he_init(&Architecture::new(dims.to_vec())?, seed),
            InitScheme::HeWithBias { bias_std } => he_init_with_bias(&Architecture::new(dims.to_vec())?, *bias_std, seed),
            InitScheme::Squaring { depth } => build_yarotsky(*depth)?,
            InitScheme::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
                Network::from_json(&text)?
            }
        })
    }
}

/// A single training run with a full trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub architecture: Vec<usize>,
    pub init: InitScheme,
    pub target: Target,
    pub samples: usize,
    pub domain: (f64, f64),
    pub noise: PerturbationSchedule,
    pub steps: StepSchedule,
    pub iterations: usize,
    /// Census every this many iterations; `0` disables counting.
    pub probe_interval: usize,
    pub nu: f64,
    pub exact_counts: bool,
    pub check_dead_neurons: bool,
}

impl Experiment for TrainConfig {
    fn defaults(scale: Scale) -> Self {
        Self {
            architecture: vec![1, 50, 50, 50, 50, 1],
            init: InitScheme::He,
            target: Target::Cos,
            samples: 500,
            domain: (0.0, 1.0),
            noise: PerturbationSchedule::matvec(1e-4),
            steps: StepSchedule::InvSqrt { base: 0.02, div: 8.0 },
            iterations: if scale == Scale::Paper { 5000 } else { 300 },
            probe_interval: 10,
            nu: 2.0,
            exact_counts: false,
            check_dead_neurons: false,
        }
    }

    fn validate(&self) -> Result<()> {
        nonempty(&self.architecture, "architecture")?;
        positive(self.samples, "samples")?;
        positive(self.iterations, "iterations")?;
        self.steps.validated()?;
        if !(self.domain.0 < self.domain.1) {
            return Err(LabError::Config("domain must satisfy lo < hi".into()));
        }
        Ok(())
    }
}

/// One trace line; the counts describe the network the iteration produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainRow {
    pub iteration: usize,
    pub lambda: f64,
    pub risk: f64,
    pub min_abs_nonzero_bias_update: Option<f64>,
    pub assumption_a_statistic: f64,
    pub max_abs_preact_gradient: Option<f64>,
    pub pieces: Option<usize>,
    pub activation_regions: Option<usize>,
    pub seed: u64,
    pub exact_risk: f64,
    pub max_abs_update: f64,
    pub zero_bias_updates: usize,
    pub dead_neuron_violations: Option<usize>,
}

impl From<&TraceRecord> for TrainRow {
    fn from(r: &TraceRecord) -> Self {
        Self {
            iteration: r.iteration,
            lambda: r.lambda,
            risk: r.risk,
            min_abs_nonzero_bias_update: r.min_abs_nonzero_bias_update,
            assumption_a_statistic: r.assumption_a_statistic,
            max_abs_preact_gradient: r.max_abs_preact_gradient,
            pieces: r.pieces,
            activation_regions: r.activation_regions,
            seed: r.seed,
            exact_risk: r.exact_risk,
            max_abs_update: r.max_abs_update,
            zero_bias_updates: r.zero_bias_updates,
            dead_neuron_violations: r.dead_neuron_violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub rows: Vec<TrainRow>,
    pub initial_pieces: Option<usize>,
    pub initial_activation_regions: Option<usize>,
    pub final_risk: f64,
    #[serde(skip)]
    pub final_network: Network,
}

pub fn run_train(cfg: &TrainConfig, ctx: &RunContext) -> Result<TrainReport> {
    cfg.validate()?;
    ctx.ensure_out()?;
    let init = cfg.init.build(&cfg.architecture, derive_seed(ctx.seed, 0, 0))?;
    if init.input_dim() != 1 && cfg.probe_interval > 0 {
        return Err(LabError::Config("region counting runs along [0, 1] and needs d = 1".into()));
    }
    let data = Dataset::sample(cfg.target, cfg.samples, cfg.domain, derive_seed(ctx.seed, 0, 1));
    let probes = ProbeConfig {
        line: Line::interval(cfg.domain.0, cfg.domain.1)?,
        nu: cfg.nu,
        exact: cfg.exact_counts,
        check_dead_neurons: cfg.check_dead_neurons,
        ..ProbeConfig::every(cfg.probe_interval)
    };
    let trace = train(&init, &data, &cfg.noise, &cfg.steps, cfg.iterations, derive_seed(ctx.seed, 1, 0), &probes)?;
    let rows: Vec<TrainRow> = trace.records.iter().map(TrainRow::from).collect();
    write_csv(&ctx.path("trace.csv"), &rows)?;
    write_text(&ctx.path("initial_network.json"), &init.to_json())?;
    write_text(&ctx.path("final_network.json"), &trace.final_network.to_json())?;
    log::info!("train: {} iterations, final risk {:.3e}", cfg.iterations, trace.final_risk);
    Ok(TrainReport {
        rows,
        initial_pieces: trace.initial_census.as_ref().map(|c| c.piece_count),
        initial_activation_regions: trace.initial_census.as_ref().map(|c| c.activation_region_count),
        final_risk: trace.final_risk,
        final_network: trace.final_network,
    })
}
