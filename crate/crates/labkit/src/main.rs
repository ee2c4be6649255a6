use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finlab::experiments::*;
use finlab::output::write_json;
use finlab::{load_config, Experiment, Result, RunContext, Scale};
use finprec::graddesc::Target;

#[derive(Parser)]
#[command(name = "finlab", version, about = "Finite-precision ReLU training experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON or TOML file overriding individual defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Use the full-size grids instead of the desk presets.
    #[arg(long)]
    paper_scale: bool,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Assumption A statistic after one step, per depth.
    Fig1(Common),
    /// Histogram of small bias updates and its pole.
    Fig2(Common),
    /// Noisy training towards 1 − x²/2.
    Fig3(Common),
    /// Noisy training towards cos.
    Fig4(Common),
    /// Noisy training of the squaring network.
    Fig5(Common),
    /// Exact versus floating realisation of the unstable networks.
    Instability(Common),
    /// One training run with a full trace.
    Train(Common),
    /// Region census of random networks.
    Pieces(Common),
    /// Assumption checks along training.
    CheckAssumptions(Common),
}

impl Common {
    fn scale(&self) -> Scale {
        if self.paper_scale {
            Scale::Paper
        } else {
            Scale::Desk
        }
    }

    fn context(&self) -> RunContext {
        let workers = self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        RunContext::new(self.seed, &self.out, workers)
    }

    fn load<T: Experiment>(&self) -> Result<(T, RunContext)> {
        let cfg = load_config(self.config.as_deref(), self.scale())?;
        let ctx = self.context();
        ctx.ensure_out()?;
        write_json(&ctx.path("config.json"), &cfg)?;
        Ok((cfg, ctx))
    }
}

fn fig34(c: &Common, target: Target) -> Result<()> {
    let (mut cfg, ctx): (Fig34Config, _) = c.load()?;
    cfg.targets = vec![target];
    let r = run_fig34(&cfg, &ctx)?;
    println!(
        "{} runs, {} censuses, {} above threshold, max regions {}, max regions/threshold {:.3e}",
        r.runs, r.checked, r.violations, r.max_regions, r.max_ratio
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Fig1(c) => {
            let (cfg, ctx): (Fig1Config, _) = c.load()?;
            let r = run_fig1(&cfg, &ctx)?;
            for (l, m) in &r.max_of_means {
                println!("L = {l}: largest cell mean {m:.4}");
            }
            println!("pooled median {:.4}, fraction <= 0.1: {:.3}", r.pooled_median, r.fraction_at_most_0_1);
        }
        Command::Fig2(c) => {
            let (cfg, ctx): (Fig2Config, _) = c.load()?;
            for (l, fit) in run_fig2(&cfg, &ctx)?.fits {
                match fit {
                    Some(f) => println!("L = {l}: slope {:.3} on [{:.1e}, {:.1e}]", f.slope, f.window.0, f.window.1),
                    None => println!("L = {l}: too few small updates for a fit"),
                }
            }
        }
        Command::Fig3(c) => fig34(c, Target::OneMinusHalfSquare)?,
        Command::Fig4(c) => fig34(c, Target::Cos)?,
        Command::Fig5(c) => {
            let (cfg, ctx): (Fig5Config, _) = c.load()?;
            for s in run_fig5(&cfg, &ctx)?.summaries {
                println!(
                    "L = {}, noise {:.0e}: regions {:.1} -> {:.1}, mse {:.3e} -> {:.3e}",
                    s.layers, s.noise, s.mean_initial_regions, s.mean_final_regions, s.mean_initial_mse, s.mean_final_mse
                );
            }
        }
        Command::Instability(c) => {
            let (cfg, ctx): (InstabilityConfig, _) = c.load()?;
            for s in run_instability(&cfg, &ctx)?.summaries {
                println!(
                    "lambda = {}, N = {}, L = {}: admissibility {:.3} ({}), {}/{} zero, mean relative error {:.3}",
                    s.weight_scale,
                    s.width,
                    s.depth,
                    s.admissibility,
                    if s.admissible { "admissible" } else { "not admissible" },
                    s.zero_outputs,
                    s.inputs,
                    s.mean_relative_error
                );
            }
        }
        Command::Train(c) => {
            let (cfg, ctx): (TrainConfig, _) = c.load()?;
            let r = run_train(&cfg, &ctx)?;
            println!("final risk {:.6e}", r.final_risk);
        }
        Command::Pieces(c) => {
            let (cfg, ctx): (PiecesConfig, _) = c.load()?;
            let rows = run_pieces(&cfg, &ctx)?;
            let above = rows.iter().filter(|r| r.activation_regions as f64 > r.telgarsky_bound).count();
            println!("{} censuses, {above} above the combinatorial bound", rows.len());
        }
        Command::CheckAssumptions(c) => {
            let (cfg, ctx): (ChecksConfig, _) = c.load()?;
            let rows = run_checks(&cfg, &ctx)?;
            let dead: usize = rows.iter().filter_map(|r| r.dead_violations).sum();
            let worst = rows.iter().map(|r| r.statistic_nu2).fold(0.0, f64::max);
            println!("{} iterations checked, largest statistic {worst:.4}, {dead} dead-neuron violations", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
