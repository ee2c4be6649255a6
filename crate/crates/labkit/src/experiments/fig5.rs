use std::path::Path;

use finprec::graddesc::{train, Dataset, PerturbationSchedule, ProbeConfig, StepSchedule, Target};
use finprec::net::build_yarotsky;
use finprec::regions::{count_pieces_exact, Line};
use serde::{Deserialize, Serialize};

use crate::config::{nonempty, positive};
use crate::output::{mean, read_csv, write_csv, write_text};
use crate::plot::{Chart, Series, Style};
use crate::{derive_seed, Experiment, LabError, Result, RunContext, Scale};

/// Training the squaring network towards `c·x²` under matvec noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig5Config {
    pub layers: Vec<usize>,
    pub noise: Vec<f64>,
    pub seeds: usize,
    pub samples: usize,
    pub c: f64,
    pub steps: StepSchedule,
    pub iterations: usize,
    pub probe_interval: usize,
}

impl Experiment for Fig5Config {
    fn defaults(scale: Scale) -> Self {
        Self {
            layers: match scale {
                Scale::Desk => vec![12],
                Scale::Paper => vec![12, 14],
            },
            noise: vec![5e-5, 1e-4, 5e-4, 1e-3, 5e-3],
            seeds: 5,
            samples: 5000,
            c: 0.99999,
            steps: StepSchedule::InvSqrt { base: 0.1, div: 1.0 },
            iterations: 200,
            probe_interval: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        nonempty(&self.layers, "layers")?;
        nonempty(&self.noise, "noise")?;
        positive(self.seeds, "seeds")?;
        positive(self.samples, "samples")?;
        positive(self.iterations, "iterations")?;
        positive(self.probe_interval, "probe_interval")?;
        if self.layers.iter().any(|&l| l < 2) {
            return Err(LabError::Grid("the squaring network needs L >= 2".into()));
        }
        self.steps.validated()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig5Row {
    pub layers: usize,
    pub noise: f64,
    pub repeat: usize,
    pub seed: u64,
    pub iteration: usize,
    pub lambda: Option<f64>,
    pub risk: Option<f64>,
    /// Exact-arithmetic MSE of the network entering this iteration, or of the
    /// final network on the last row.
    pub mse: Option<f64>,
    pub pieces: Option<usize>,
    pub activation_regions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig5MeanRow {
    pub layers: usize,
    pub noise: f64,
    pub iteration: usize,
    pub runs: usize,
    pub mean_activation_regions: f64,
    pub mean_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig5Summary {
    pub layers: usize,
    pub noise: f64,
    /// Exact piece count of the initial network.
    pub initial_pieces_exact: usize,
    pub mean_initial_regions: f64,
    pub mean_final_regions: f64,
    pub mean_initial_mse: f64,
    pub mean_final_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig5Report {
    pub summaries: Vec<Fig5Summary>,
}

pub fn run_fig5(cfg: &Fig5Config, ctx: &RunContext) -> Result<Fig5Report> {
    cfg.validate()?;
    ctx.ensure_out()?;
    let mut jobs = Vec::new();
    for &l in &cfg.layers {
        for &a in &cfg.noise {
            let grid = jobs.len() / cfg.seeds;
            for r in 0..cfg.seeds {
                jobs.push((grid, l, a, r));
            }
        }
    }
    log::info!(
        "fig5: {} depths x {} noise levels x {} seeds = {} runs of {} iterations",
        cfg.layers.len(),
        cfg.noise.len(),
        cfg.seeds,
        jobs.len(),
        cfg.iterations
    );
    let probes = ProbeConfig::every(cfg.probe_interval);
    let per_run: Vec<Result<Vec<Fig5Row>>> = ctx.par_map(jobs, |(grid, l, a, r)| {
        let seed = derive_seed(ctx.seed, grid as u64, r as u64);
        let init = build_yarotsky(l)?;
        let data = Dataset::sample(
            Target::ScaledSquare { c: cfg.c },
            cfg.samples,
            (0.0, 1.0),
            derive_seed(ctx.seed, u64::MAX, r as u64),
        );
        let trace = train(&init, &data, &PerturbationSchedule::matvec(a), &cfg.steps, cfg.iterations, seed, &probes)?;
        let head = Fig5Row {
            layers: l,
            noise: a,
            repeat: r,
            seed,
            iteration: 0,
            lambda: None,
            risk: None,
            mse: None,
            pieces: None,
            activation_regions: None,
        };
        let mut rows = Vec::with_capacity(trace.records.len() + 2);
        let init_census = trace.initial_census.as_ref().expect("census enabled");
        rows.push(Fig5Row {
            pieces: Some(init_census.piece_count),
            activation_regions: Some(init_census.activation_region_count),
            mse: trace.records.first().map(|r| r.exact_risk),
            ..head.clone()
        });
        let n = trace.records.len();
        for (i, rec) in trace.records.iter().enumerate() {
            rows.push(Fig5Row {
                iteration: rec.iteration,
                lambda: Some(rec.lambda),
                risk: Some(rec.risk),
                mse: Some(if i + 1 == n { trace.final_risk } else { trace.records[i + 1].exact_risk }),
                pieces: rec.pieces,
                activation_regions: rec.activation_regions,
                ..head.clone()
            });
        }
        Ok(rows)
    })?;
    let mut rows = Vec::new();
    for r in per_run {
        rows.extend(r?);
    }

    let mut summaries = Vec::new();
    let mut means = Vec::new();
    for &l in &cfg.layers {
        let exact = count_pieces_exact(&build_yarotsky(l)?, &Line::unit())?.piece_count;
        for &a in &cfg.noise {
            let group: Vec<&Fig5Row> = rows.iter().filter(|r| r.layers == l && r.noise == a).collect();
            let at = |it: usize| -> Vec<&Fig5Row> { group.iter().copied().filter(|r| r.iteration == it).collect() };
            let regions = |v: &[&Fig5Row]| mean(&v.iter().filter_map(|r| r.activation_regions).map(|n| n as f64).collect::<Vec<_>>());
            let mse = |v: &[&Fig5Row]| mean(&v.iter().filter_map(|r| r.mse).collect::<Vec<_>>());
            let (first, last) = (at(0), at(cfg.iterations));
            summaries.push(Fig5Summary {
                layers: l,
                noise: a,
                initial_pieces_exact: exact,
                mean_initial_regions: regions(&first),
                mean_final_regions: regions(&last),
                mean_initial_mse: mse(&first),
                mean_final_mse: mse(&last),
            });
            for it in 0..=cfg.iterations {
                let g = at(it);
                if g.iter().all(|r| r.activation_regions.is_none()) {
                    continue;
                }
                let m: Vec<f64> = g.iter().filter_map(|r| r.mse).collect();
                means.push(Fig5MeanRow {
                    layers: l,
                    noise: a,
                    iteration: it,
                    runs: g.len(),
                    mean_activation_regions: regions(&g),
                    mean_mse: (!m.is_empty()).then(|| mean(&m)),
                });
            }
        }
    }
    write_csv(&ctx.path("fig5_runs.csv"), &rows)?;
    write_csv(&ctx.path("fig5_mean.csv"), &means)?;
    write_csv(&ctx.path("fig5_summary.csv"), &summaries)?;
    for &l in &cfg.layers {
        let (regions, mse) = plot_fig5(&ctx.path("fig5_mean.csv"), l)?;
        write_text(&ctx.path(&format!("fig5_L{l}_regions.svg")), &regions)?;
        write_text(&ctx.path(&format!("fig5_L{l}_mse.svg")), &mse)?;
    }
    Ok(Fig5Report { summaries })
}

pub fn plot_fig5(mean_csv: &Path, layers: usize) -> Result<(String, String)> {
    let rows: Vec<Fig5MeanRow> = read_csv(mean_csv)?;
    let rows: Vec<&Fig5MeanRow> = rows.iter().filter(|r| r.layers == layers).collect();
    let mut levels: Vec<f64> = rows.iter().map(|r| r.noise).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut regions = Chart::new(
        format!("Squaring network, {layers} layers"),
        "iteration",
        "mean activation regions",
    );
    let mut mse = Chart::new(format!("Squaring network, {layers} layers"), "iteration", "mean squared error").log_y();
    for a in levels {
        let g: Vec<&&Fig5MeanRow> = rows.iter().filter(|r| r.noise == a).collect();
        let label = format!("noise {a:.0e}");
        regions = regions.with(Series::new(
            label.clone(),
            g.iter().map(|r| (r.iteration as f64, r.mean_activation_regions)).collect(),
            Style::Line,
        ));
        mse = mse.with(Series::new(
            label,
            g.iter().filter_map(|r| Some((r.iteration as f64, r.mean_mse?))).collect(),
            Style::Line,
        ));
    }
    Ok((regions.render(), mse.render()))
}
