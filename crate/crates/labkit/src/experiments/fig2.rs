use std::f64::consts::PI;
use std::path::Path;

use finprec::assumptions::{HistogramFit, LogHistogram};
use finprec::graddesc::{exact_updates, Dataset, Target};
use finprec::net::{he_init, Architecture};
use serde::{Deserialize, Serialize};

use crate::config::{nonempty, positive};
use crate::output::{read_csv, write_csv, write_text};
use crate::plot::{Chart, Series, Style};
use crate::{derive_seed, Experiment, LabError, Result, RunContext, Scale};

/// Distribution of one-step bias updates near zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Config {
    pub layers: Vec<usize>,
    pub width: usize,
    /// Networks per depth.
    pub instantiations: usize,
    pub samples: usize,
    pub domain: (f64, f64),
    pub bins_per_decade: u32,
    /// Minimum samples per decade for a decade to enter the tail fit.
    pub min_per_decade: u64,
    /// Constants of the reference curves `C·x^(−1/2)`, one per depth.
    pub reference_constants: Vec<f64>,
}

impl Experiment for Fig2Config {
    fn defaults(scale: Scale) -> Self {
        let (layers, n) = match scale {
            Scale::Desk => (vec![4], 2000),
            Scale::Paper => (vec![4, 5, 6], 10_000),
        };
        Self {
            layers,
            width: 200,
            instantiations: n,
            samples: 500,
            domain: (0.0, 2.0 * PI),
            bins_per_decade: 5,
            min_per_decade: 1000,
            reference_constants: vec![1.0 / 160.0, 1.0 / 270.0, 1.0 / 160.0],
        }
    }

    fn validate(&self) -> Result<()> {
        nonempty(&self.layers, "layers")?;
        positive(self.width, "width")?;
        positive(self.instantiations, "instantiations")?;
        positive(self.samples, "samples")?;
        if self.layers.iter().any(|&l| l < 2) {
            return Err(LabError::Grid("need layers >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2HistRow {
    pub layers: usize,
    pub lower: f64,
    pub upper: f64,
    pub frequency: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2FitRow {
    pub layers: usize,
    pub instantiations: usize,
    pub retained: u64,
    pub zeros: u64,
    pub excluded_at_least_one: u64,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub fitted_constant: Option<f64>,
    pub reference_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig2Report {
    pub fits: Vec<(usize, Option<HistogramFit>)>,
    pub histograms: Vec<(usize, LogHistogram)>,
}

/// Histogram of `|(u_j^b)_k|` over a fixed corpus; also used with synthetic samplers.
pub fn histogram_of(samples: impl IntoIterator<Item = f64>, bins_per_decade: u32) -> LogHistogram {
    let mut h = LogHistogram::new(bins_per_decade);
    h.extend(samples);
    h
}

pub fn run_fig2(cfg: &Fig2Config, ctx: &RunContext) -> Result<Fig2Report> {
    cfg.validate()?;
    ctx.ensure_out()?;
    let mut hist_rows = Vec::new();
    let mut fit_rows = Vec::new();
    let mut report = Fig2Report {
        fits: Vec::new(),
        histograms: Vec::new(),
    };
    for (gi, &l) in cfg.layers.iter().enumerate() {
        log::info!("fig2: L = {l}, {} networks of width {}", cfg.instantiations, cfg.width);
        let arch = Architecture::uniform(1, cfg.width, l)?;
        let parts: Vec<Result<LogHistogram>> = ctx.par_map((0..cfg.instantiations).collect(), |r| {
            let seed = derive_seed(ctx.seed, gi as u64, r as u64);
            let net = he_init(&arch, seed);
            let data = Dataset::sample(Target::Sine, cfg.samples, cfg.domain, derive_seed(seed, 0, 1));
            let u = exact_updates(&net, &data)?;
            Ok(histogram_of(u.hidden_bias_updates(), cfg.bins_per_decade))
        })?;
        let mut h = LogHistogram::new(cfg.bins_per_decade);
        for p in parts {
            h.merge(&p?);
        }
        let fit = h.tail_fit(cfg.min_per_decade).ok();
        hist_rows.extend(h.rows().into_iter().map(|(lower, upper, frequency, density)| Fig2HistRow {
            layers: l,
            lower,
            upper,
            frequency,
            density,
        }));
        fit_rows.push(Fig2FitRow {
            layers: l,
            instantiations: cfg.instantiations,
            retained: h.retained(),
            zeros: h.zeros(),
            excluded_at_least_one: h.excluded_large(),
            slope: fit.as_ref().map(|f| f.slope),
            intercept: fit.as_ref().map(|f| f.intercept),
            window_lo: fit.as_ref().map(|f| f.window.0),
            window_hi: fit.as_ref().map(|f| f.window.1),
            fitted_constant: fit.as_ref().map(|f| f.reference_constant),
            reference_constant: cfg.reference_constants.get(gi).copied(),
        });
        report.fits.push((l, fit));
        report.histograms.push((l, h));
    }
    write_csv(&ctx.path("fig2_hist.csv"), &hist_rows)?;
    write_csv(&ctx.path("fig2_fit.csv"), &fit_rows)?;
    write_text(
        &ctx.path("fig2.svg"),
        &plot_fig2(&ctx.path("fig2_hist.csv"), &ctx.path("fig2_fit.csv"))?,
    )?;
    Ok(report)
}

/// Log-log relative frequencies per depth with `C·x^(−1/2)` reference curves.
pub fn plot_fig2(hist_csv: &Path, fit_csv: &Path) -> Result<String> {
    let hist: Vec<Fig2HistRow> = read_csv(hist_csv)?;
    let fits: Vec<Fig2FitRow> = read_csv(fit_csv)?;
    let mut chart = Chart::new("Bias update magnitudes below one", "|u|", "relative frequency per bin")
        .log_x()
        .log_y();
    for f in &fits {
        let rows: Vec<&Fig2HistRow> = hist.iter().filter(|r| r.layers == f.layers).collect();
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.lower * r.upper).sqrt(), r.frequency)).collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        chart = chart.with(Series::new(format!("L = {}", f.layers), pts, Style::Markers));
        for (label, c) in [("fit", f.fitted_constant), ("ref", f.reference_constant)] {
            if let Some(c) = c {
                let curve = xs.iter().map(|&x| (x, c * x.powf(-0.5))).collect();
                chart = chart.with(Series::new(format!("{label} {c:.2e}·x^-1/2"), curve, Style::Dashed));
            }
        }
    }
    Ok(chart.render())
}
