use std::f64::consts::PI;

use finprec::assumptions::assumption_a_statistic;
use finprec::graddesc::{exact_updates, Dataset, Target};
use finprec::net::{he_init, Architecture};
use serde::{Deserialize, Serialize};

use crate::config::{nonempty, positive};
use crate::output::{mean, median, read_csv, write_csv, write_text};
use crate::plot::{Chart, Series, Style};
use crate::{derive_seed, Experiment, LabError, Result, RunContext, Scale};

/// Assumption A statistic after one exact step of freshly initialised networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Config {
    pub layers: Vec<usize>,
    pub widths: Vec<usize>,
    pub nets_per_cell: usize,
    pub samples: usize,
    pub domain: (f64, f64),
    pub nu: f64,
}

impl Experiment for Fig1Config {
    fn defaults(scale: Scale) -> Self {
        let (widths, nets) = match scale {
            Scale::Desk => (vec![100], 50),
            Scale::Paper => ((100..=400).step_by(10).collect(), 500),
        };
        Self {
            layers: (3..=7).collect(),
            widths,
            nets_per_cell: nets,
            samples: 500,
            domain: (0.0, 2.0 * PI),
            nu: 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        nonempty(&self.layers, "layers")?;
        nonempty(&self.widths, "widths")?;
        positive(self.nets_per_cell, "nets_per_cell")?;
        positive(self.samples, "samples")?;
        if self.layers.iter().any(|&l| l < 2) || self.widths.contains(&0) {
            return Err(LabError::Grid("need layers >= 2 and widths >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1NetRow {
    pub layers: usize,
    pub width: usize,
    pub repeat: usize,
    pub seed: u64,
    pub statistic: f64,
    pub dagger_zero_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1CellRow {
    pub layers: usize,
    pub width: usize,
    pub nets: usize,
    pub mean_statistic: f64,
    pub median_statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1CdfRow {
    pub layers: usize,
    pub statistic: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Report {
    pub cells: Vec<Fig1CellRow>,
    /// Per depth, the largest per-width mean.
    pub max_of_means: Vec<(usize, f64)>,
    pub pooled_median: f64,
    pub fraction_at_most_0_1: f64,
}

pub fn run_fig1(cfg: &Fig1Config, ctx: &RunContext) -> Result<Fig1Report> {
    cfg.validate()?;
    ctx.ensure_out()?;
    let mut jobs = Vec::new();
    for &l in &cfg.layers {
        for &w in &cfg.widths {
            for r in 0..cfg.nets_per_cell {
                jobs.push((jobs.len() / cfg.nets_per_cell, l, w, r));
            }
        }
    }
    log::info!(
        "fig1: {} depths x {} widths x {} nets = {} runs",
        cfg.layers.len(),
        cfg.widths.len(),
        cfg.nets_per_cell,
        jobs.len()
    );
    let rows: Vec<Result<Fig1NetRow>> = ctx.par_map(jobs, |(cell, l, w, r)| {
        let seed = derive_seed(ctx.seed, cell as u64, r as u64);
        let net = he_init(&Architecture::uniform(1, w, l)?, seed);
        let data = Dataset::sample(Target::Sine, cfg.samples, cfg.domain, derive_seed(seed, 0, 1));
        let u = exact_updates(&net, &data)?;
        Ok(Fig1NetRow {
            layers: l,
            width: w,
            repeat: r,
            seed,
            statistic: assumption_a_statistic(&u, cfg.nu, net.neuron_count()),
            dagger_zero_count: u.hidden_bias_updates().filter(|v| *v == 0.0).count(),
        })
    })?;
    let rows: Vec<Fig1NetRow> = rows.into_iter().collect::<Result<_>>()?;
    summarise(cfg, ctx, rows)
}

fn summarise(cfg: &Fig1Config, ctx: &RunContext, rows: Vec<Fig1NetRow>) -> Result<Fig1Report> {
    let mut cells = Vec::new();
    let mut cdf = Vec::new();
    let mut max_of_means = Vec::new();
    for &l in &cfg.layers {
        let mut best = f64::NEG_INFINITY;
        for &w in &cfg.widths {
            let s: Vec<f64> = rows.iter().filter(|r| r.layers == l && r.width == w).map(|r| r.statistic).collect();
            let m = mean(&s);
            best = best.max(m);
            cells.push(Fig1CellRow {
                layers: l,
                width: w,
                nets: s.len(),
                mean_statistic: m,
                median_statistic: median(&s),
            });
        }
        max_of_means.push((l, best));
        let mut s: Vec<f64> = rows.iter().filter(|r| r.layers == l).map(|r| r.statistic).collect();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        cdf.extend(s.into_iter().enumerate().map(|(i, v)| Fig1CdfRow {
            layers: l,
            statistic: v,
            cdf: (i + 1) as f64 / n,
        }));
    }
    let all: Vec<f64> = rows.iter().map(|r| r.statistic).collect();
    write_csv(&ctx.path("fig1_nets.csv"), &rows)?;
    write_csv(&ctx.path("fig1_cells.csv"), &cells)?;
    write_csv(&ctx.path("fig1_cdf.csv"), &cdf)?;
    write_text(&ctx.path("fig1.svg"), &plot_fig1(&ctx.path("fig1_cdf.csv"))?)?;
    Ok(Fig1Report {
        cells,
        max_of_means,
        pooled_median: median(&all),
        fraction_at_most_0_1: all.iter().filter(|v| **v <= 0.1).count() as f64 / all.len() as f64,
    })
}

/// CDF of the statistic per depth, from `fig1_cdf.csv`.
pub fn plot_fig1(cdf_csv: &std::path::Path) -> Result<String> {
    let rows: Vec<Fig1CdfRow> = read_csv(cdf_csv)?;
    let mut chart = Chart::new("One-step bias updates: N^-2 sum |u|^-1", "statistic (nu = 2)", "empirical CDF").log_x();
    let mut depths: Vec<usize> = rows.iter().map(|r| r.layers).collect();
    depths.dedup();
    for l in depths {
        let pts = rows.iter().filter(|r| r.layers == l).map(|r| (r.statistic, r.cdf)).collect();
        chart = chart.with(Series::new(format!("L = {l}"), pts, Style::Step));
    }
    Ok(chart.render())
}
