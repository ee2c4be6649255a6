use std::path::Path;

use finprec::graddesc::{train, Dataset, PerturbationSchedule, ProbeConfig, StepSchedule, Target, TrainingTrace};
use finprec::net::{he_init, Architecture};
use finprec::regions::{theorem_threshold, ThresholdInputs};
use serde::{Deserialize, Serialize};

use crate::config::{nonempty, positive};
use crate::output::{mean, read_csv, write_csv, write_text};
use crate::plot::{Chart, Series, Style};
use crate::{derive_seed, Experiment, LabError, Result, RunContext, Scale};

/// Training He-initialised networks under matvec noise, with region censuses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig34Config {
    pub targets: Vec<Target>,
    pub layers: Vec<usize>,
    pub width: usize,
    pub noise: Vec<f64>,
    /// Adds a noise-free run per grid point.
    pub control: bool,
    pub seeds: usize,
    pub samples: usize,
    pub domain: (f64, f64),
    pub steps: StepSchedule,
    pub iterations: usize,
    pub probe_interval: usize,
    pub nu: f64,
}

impl Experiment for Fig34Config {
    fn defaults(scale: Scale) -> Self {
        let (layers, iterations) = match scale {
            Scale::Desk => (vec![5], 300),
            Scale::Paper => (vec![5, 8], 5000),
        };
        Self {
            targets: vec![Target::OneMinusHalfSquare, Target::Cos],
            layers,
            width: 50,
            noise: vec![1e-5, 5e-5, 1e-4, 5e-4, 1e-3],
            control: false,
            seeds: 5,
            samples: 500,
            domain: (0.0, 1.0),
            steps: StepSchedule::InvSqrt { base: 0.02, div: 8.0 },
            iterations,
            probe_interval: 10,
            nu: 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        nonempty(&self.targets, "targets")?;
        nonempty(&self.layers, "layers")?;
        positive(self.width, "width")?;
        positive(self.seeds, "seeds")?;
        positive(self.iterations, "iterations")?;
        positive(self.probe_interval, "probe_interval")?;
        if self.noise.is_empty() && !self.control {
            return Err(LabError::Grid("no noise levels".into()));
        }
        if self.noise.iter().any(|v| !(*v >= 0.0)) {
            return Err(LabError::Grid("noise levels must be >= 0".into()));
        }
        self.steps.validated()?;
        Ok(())
    }
}

impl Fig34Config {
    pub fn noise_levels(&self) -> Vec<f64> {
        let mut v = self.noise.clone();
        if self.control && !v.contains(&0.0) {
            v.insert(0, 0.0);
        }
        v
    }
}

pub fn target_name(t: &Target) -> String {
    match t {
        Target::Sine => "sine".into(),
        Target::Cos => "cos".into(),
        Target::OneMinusHalfSquare => "one_minus_half_square".into(),
        Target::ScaledSquare { c } => format!("scaled_square_{c}"),
        Target::Zero => "zero".into(),
    }
}

/// One iteration of one run; iteration 0 is the initial network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig34Row {
    pub target: String,
    pub layers: usize,
    pub noise: f64,
    pub repeat: usize,
    pub seed: u64,
    pub iteration: usize,
    pub lambda: Option<f64>,
    pub risk: Option<f64>,
    pub exact_risk: Option<f64>,
    pub c0: Option<f64>,
    pub pieces: Option<usize>,
    pub activation_regions: Option<usize>,
    pub threshold: Option<f64>,
    pub threshold_j: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig34MeanRow {
    pub target: String,
    pub layers: usize,
    pub noise: f64,
    pub iteration: usize,
    pub runs: usize,
    pub mean_exact_risk: Option<f64>,
    pub mean_activation_regions: f64,
    pub mean_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig34Report {
    pub rows: Vec<Fig34Row>,
    pub runs: usize,
    /// Censused iterations with a threshold.
    pub checked: usize,
    pub violations: usize,
    /// Largest `regions / threshold` over all censused iterations.
    pub max_ratio: f64,
    pub max_regions: usize,
}

fn trace_rows(
    trace: &TrainingTrace,
    head: &Fig34Row,
    neurons: usize,
    depth: usize,
    eps: &[f64],
    nu: f64,
) -> Vec<Fig34Row> {
    let mut out = Vec::new();
    if let Some(c) = &trace.initial_census {
        out.push(Fig34Row {
            iteration: 0,
            pieces: Some(c.piece_count),
            activation_regions: Some(c.activation_region_count),
            ..head.clone()
        });
    }
    for r in &trace.records {
        let threshold = r.activation_regions.map(|_| {
            theorem_threshold(&ThresholdInputs {
                neurons,
                depth,
                step: r.lambda,
                eps,
                c0: r.assumption_a_statistic,
                nu,
                length: 1.0,
            })
        });
        out.push(Fig34Row {
            iteration: r.iteration,
            lambda: Some(r.lambda),
            risk: Some(r.risk),
            exact_risk: Some(r.exact_risk),
            c0: Some(r.assumption_a_statistic),
            pieces: r.pieces,
            activation_regions: r.activation_regions,
            threshold: threshold.map(|t| t.0),
            threshold_j: threshold.map(|t| t.1),
            ..head.clone()
        });
    }
    out
}

pub fn run_fig34(cfg: &Fig34Config, ctx: &RunContext) -> Result<Fig34Report> {
    cfg.validate()?;
    ctx.ensure_out()?;
    let levels = cfg.noise_levels();
    let mut jobs = Vec::new();
    for t in &cfg.targets {
        for &l in &cfg.layers {
            for &a in &levels {
                let grid = jobs.len() / cfg.seeds;
                for r in 0..cfg.seeds {
                    jobs.push((grid, *t, l, a, r));
                }
            }
        }
    }
    log::info!(
        "fig34: {} targets x {} depths x {} noise levels x {} seeds = {} runs of {} iterations",
        cfg.targets.len(),
        cfg.layers.len(),
        levels.len(),
        cfg.seeds,
        jobs.len(),
        cfg.iterations
    );
    let runs = jobs.len();
    let per_run: Vec<Result<Vec<Fig34Row>>> = ctx.par_map(jobs, |(grid, target, l, a, r)| {
        // the initial network and data depend on the repeat only, so noise levels share them
        let seed = derive_seed(ctx.seed, grid as u64, r as u64);
        let base = derive_seed(ctx.seed, u64::MAX, r as u64);
        let init = he_init(&Architecture::uniform(1, cfg.width, l)?, base);
        let data = Dataset::sample(target, cfg.samples, cfg.domain, derive_seed(base, 0, 1));
        let sched = PerturbationSchedule::matvec(a);
        let probes = ProbeConfig {
            nu: cfg.nu,
            ..ProbeConfig::every(cfg.probe_interval)
        };
        let trace = train(&init, &data, &sched, &cfg.steps, cfg.iterations, seed, &probes)?;
        let head = Fig34Row {
            target: target_name(&target),
            layers: l,
            noise: a,
            repeat: r,
            seed,
            iteration: 0,
            lambda: None,
            risk: None,
            exact_risk: None,
            c0: None,
            pieces: None,
            activation_regions: None,
            threshold: None,
            threshold_j: None,
        };
        let eps = sched.effective_eps(l);
        Ok(trace_rows(&trace, &head, init.neuron_count(), l, &eps, cfg.nu))
    })?;
    let mut rows = Vec::new();
    for r in per_run {
        rows.extend(r?);
    }

    let (mut checked, mut violations, mut max_ratio, mut max_regions) = (0, 0, 0.0f64, 0);
    for r in &rows {
        if let Some(n) = r.activation_regions {
            max_regions = max_regions.max(n);
        }
        if let (Some(n), Some(t)) = (r.activation_regions, r.threshold) {
            checked += 1;
            violations += usize::from(n as f64 > t);
            max_ratio = max_ratio.max(n as f64 / t);
        }
    }
    let means = mean_rows(&rows);
    write_csv(&ctx.path("fig34_runs.csv"), &rows)?;
    write_csv(&ctx.path("fig34_mean.csv"), &means)?;
    for t in &cfg.targets {
        for &l in &cfg.layers {
            let name = format!("{}_L{l}", target_name(t));
            let fig = if *t == Target::Cos { "fig4" } else { "fig3" };
            let (regions, risk) = plot_fig34(&ctx.path("fig34_mean.csv"), &target_name(t), l)?;
            write_text(&ctx.path(&format!("{fig}_{name}_regions.svg")), &regions)?;
            write_text(&ctx.path(&format!("{fig}_{name}_risk.svg")), &risk)?;
        }
    }
    Ok(Fig34Report {
        rows,
        runs,
        checked,
        violations,
        max_ratio,
        max_regions,
    })
}

fn mean_rows(rows: &[Fig34Row]) -> Vec<Fig34MeanRow> {
    let mut keys: Vec<(String, usize, u64, usize)> = rows
        .iter()
        .filter(|r| r.activation_regions.is_some())
        .map(|r| (r.target.clone(), r.layers, r.noise.to_bits(), r.iteration))
        .collect();
    // bit patterns of nonnegative floats sort like the floats
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(t, l, a, it)| {
            let group: Vec<&Fig34Row> = rows
                .iter()
                .filter(|r| r.target == t && r.layers == l && r.noise.to_bits() == a && r.iteration == it)
                .filter(|r| r.activation_regions.is_some())
                .collect();
            let risks: Vec<f64> = group.iter().filter_map(|r| r.exact_risk).collect();
            let thr: Vec<f64> = group.iter().filter_map(|r| r.threshold).collect();
            Fig34MeanRow {
                target: t,
                layers: l,
                noise: f64::from_bits(a),
                iteration: it,
                runs: group.len(),
                mean_exact_risk: (!risks.is_empty()).then(|| mean(&risks)),
                mean_activation_regions: mean(&group.iter().map(|r| r.activation_regions.unwrap() as f64).collect::<Vec<_>>()),
                mean_threshold: (!thr.is_empty()).then(|| mean(&thr)),
            }
        })
        .collect()
}

/// Mean activation regions and mean risk against iteration, one series per noise level.
pub fn plot_fig34(mean_csv: &Path, target: &str, layers: usize) -> Result<(String, String)> {
    let rows: Vec<Fig34MeanRow> = read_csv(mean_csv)?;
    let rows: Vec<&Fig34MeanRow> = rows.iter().filter(|r| r.target == target && r.layers == layers).collect();
    let mut levels: Vec<f64> = rows.iter().map(|r| r.noise).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let title = format!("{target}, width 50, {layers} layers");
    let mut regions = Chart::new(format!("Activation regions: {title}"), "iteration", "mean activation regions");
    let mut risk = Chart::new(format!("Training risk: {title}"), "iteration", "mean squared error").log_y();
    for a in levels {
        let g: Vec<&&Fig34MeanRow> = rows.iter().filter(|r| r.noise == a).collect();
        let label = format!("noise {a:.0e}");
        regions = regions.with(Series::new(
            label.clone(),
            g.iter().map(|r| (r.iteration as f64, r.mean_activation_regions)).collect(),
            Style::Line,
        ));
        risk = risk.with(Series::new(
            label,
            g.iter().filter_map(|r| Some((r.iteration as f64, r.mean_exact_risk?))).collect(),
            Style::Line,
        ));
    }
    Ok((regions.render(), risk.render()))
}
