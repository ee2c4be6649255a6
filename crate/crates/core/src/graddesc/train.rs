use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{backprop, descend, noisy_backprop, perturb_updates, Dataset, GradError, NoiseMode};
use super::{PerturbationSchedule, StepSchedule, UpdateBundle};
use crate::assumptions::{assumption_a_statistic, check_dead_neurons, line_probe};
use crate::net::Network;
use crate::regions::{count_pieces, count_pieces_exact, Line, RegionCensus};

/// What to measure besides risk, and how often.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Census every `interval` iterations and at the last one; `0` disables it.
    pub interval: usize,
    pub line: Line,
    /// Exponent `ν` of the Assumption A statistic.
    pub nu: f64,
    /// Equispaced points on `line` added to the training inputs for the dead-neuron check.
    pub probe_points: usize,
    /// Count in exact rational arithmetic.
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub check_dead_neurons: bool,
    /// Census of the initial network.
    #[serde(default = "yes")]
    pub initial_census: bool,
}

fn yes() -> bool {
    true
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            interval: 0,
            line: Line::unit(),
            nu: 2.0,
            probe_points: 1000,
            exact: false,
            check_dead_neurons: false,
            initial_census: true,
        }
    }
}

impl ProbeConfig {
    pub fn every(interval: usize) -> Self {
        Self {
            interval,
            ..Self::default()
        }
    }

    fn due(&self, n: usize, last: usize) -> bool {
        self.interval > 0 && (n % self.interval == 0 || n == last)
    }

    fn census(&self, net: &Network) -> Result<RegionCensus, GradError> {
        let c = if self.exact {
            count_pieces_exact(net, &self.line)
        } else {
            count_pieces(net, &self.line)
        };
        c.map_err(|e| GradError::InvalidParameter(e.to_string()))
    }
}

/// One iteration. Risk is that of the network the iteration starts from;
/// the census describes the network it produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub lambda: f64,
    /// Risk as seen by the training loop: the noisy forward pass in matvec mode.
    pub risk: f64,
    pub min_abs_nonzero_bias_update: Option<f64>,
    /// `c_0^{(n)}` of the applied bundle.
    pub assumption_a_statistic: f64,
    pub max_abs_preact_gradient: Option<f64>,
    pub pieces: Option<usize>,
    pub activation_regions: Option<usize>,
    pub seed: u64,
    /// Risk of the same network without matvec noise.
    pub exact_risk: f64,
    pub max_abs_update: f64,
    pub zero_bias_updates: usize,
    pub dead_neuron_violations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingTrace {
    pub seed: u64,
    pub initial_census: Option<RegionCensus>,
    pub records: Vec<TraceRecord>,
    /// Censuses at probe iterations, keyed by iteration.
    pub censuses: Vec<(usize, RegionCensus)>,
    #[serde(skip)]
    pub final_network: Network,
    pub final_risk: f64,
}

fn exact_risk(net: &Network, data: &Dataset) -> Result<f64, GradError> {
    let pred = net.realize_batch(&data.input_matrix())?;
    super::empirical_risk(data.labels(), pred.row(0).as_slice().expect("row of standard layout"))
}

/// Runs `iterations` steps of (perturbed) gradient descent from `init`.
///
/// The step at iteration `n = 1..=iterations` uses `λ_n = steps.at(n)`.
/// All randomness comes from one ChaCha8 stream seeded with `seed`.
pub fn train(
    init: &Network,
    data: &Dataset,
    sched: &PerturbationSchedule,
    steps: &StepSchedule,
    iterations: usize,
    seed: u64,
    probes: &ProbeConfig,
) -> Result<TrainingTrace, GradError> {
    if iterations == 0 {
        return Err(GradError::InvalidParameter("iterations must be >= 1".into()));
    }
    sched.validate(init.depth())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let neurons = init.neuron_count();
    let probe_set: Vec<Vec<f64>> = if probes.check_dead_neurons {
        let mut p = line_probe(&probes.line, probes.probe_points);
        p.extend(data.inputs().iter().cloned());
        p
    } else {
        Vec::new()
    };
    let initial_census = if probes.initial_census && probes.interval > 0 {
        Some(probes.census(init)?)
    } else {
        None
    };

    let mut net = init.clone();
    let mut records = Vec::with_capacity(iterations);
    let mut censuses = Vec::new();
    for n in 1..=iterations {
        let lambda = steps.at(n);
        let (applied, risk, exact): (UpdateBundle, f64, f64) = match sched.mode {
            NoiseMode::None => {
                let bp = backprop(&net, data)?;
                (bp.updates, bp.risk, bp.risk)
            }
            NoiseMode::UpdateNoise => {
                let bp = backprop(&net, data)?;
                let u = perturb_updates(&bp.updates, &sched.eps, sched.entrywise_weight_noise, &mut rng);
                (u, bp.risk, bp.risk)
            }
            NoiseMode::MatvecNoise => {
                let bp = noisy_backprop(&net, data, sched.matvec_noise, &mut rng)?;
                let exact = exact_risk(&net, data)?;
                (bp.updates, bp.risk, exact)
            }
        };
        if !risk.is_finite() {
            return Err(GradError::Diverged { iteration: n, risk });
        }
        let next = descend(&net, &applied, lambda);
        if !next.is_finite() {
            return Err(GradError::Diverged {
                iteration: n,
                risk: f64::INFINITY,
            });
        }

        let mut rec = TraceRecord {
            iteration: n,
            lambda,
            risk,
            min_abs_nonzero_bias_update: applied.min_abs_nonzero_bias_update(),
            assumption_a_statistic: assumption_a_statistic(&applied, probes.nu, neurons),
            max_abs_preact_gradient: None,
            pieces: None,
            activation_regions: None,
            seed,
            exact_risk: exact,
            max_abs_update: applied.max_abs(),
            zero_bias_updates: applied.hidden_bias_updates().filter(|u| *u == 0.0).count(),
            dead_neuron_violations: None,
        };
        if probes.due(n, iterations) {
            let c = probes.census(&next)?;
            rec.max_abs_preact_gradient = Some(c.max_abs_slope());
            rec.pieces = Some(c.piece_count);
            rec.activation_regions = Some(c.activation_region_count);
            if probes.check_dead_neurons {
                rec.dead_neuron_violations = Some(check_dead_neurons(&next, &applied, &probe_set)?.len());
            }
            censuses.push((n, c));
        }
        records.push(rec);
        net = next;
    }
    let final_risk = exact_risk(&net, data)?;
    Ok(TrainingTrace {
        seed,
        initial_census,
        records,
        censuses,
        final_network: net,
        final_risk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graddesc::Target;
    use crate::net::{he_init, Architecture};

    #[test]
    fn zero_residual_is_a_fixed_point() {
        let net = he_init(&Architecture::uniform(1, 5, 3).unwrap(), 3);
        let xs: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64 / 15.0]).collect();
        let probe = Dataset::new(xs.clone(), vec![0.0; 16]).unwrap();
        let ys = net.realize_batch(&probe.input_matrix()).unwrap().row(0).to_vec();
        let data = Dataset::new(xs, ys).unwrap();
        let sched = PerturbationSchedule::update_noise(vec![0.5; 3]);
        let tr = train(&net, &data, &sched, &StepSchedule::constant(0.1).unwrap(), 5, 1, &ProbeConfig::default())
            .unwrap();
        assert_eq!(tr.final_network, net);
        assert_eq!(tr.records.len(), 5);
    }

    #[test]
    fn equal_seeds_equal_traces() {
        let net = he_init(&Architecture::uniform(1, 6, 4).unwrap(), 5);
        let data = Dataset::sample(Target::Sine, 32, (0.0, 1.0), 2);
        let sched = PerturbationSchedule::matvec(1e-3);
        let steps = StepSchedule::inv_sqrt(0.02, 8.0).unwrap();
        let probes = ProbeConfig::every(3);
        let a = train(&net, &data, &sched, &steps, 7, 11, &probes).unwrap();
        let b = train(&net, &data, &sched, &steps, 7, 11, &probes).unwrap();
        assert_eq!(a, b);
        let c = train(&net, &data, &sched, &steps, 7, 12, &probes).unwrap();
        assert_ne!(a.final_network, c.final_network);
        assert_eq!(a.censuses.iter().map(|c| c.0).collect::<Vec<_>>(), vec![3, 6, 7]);
    }

    #[test]
    fn divergence_is_reported() {
        let net = he_init(&Architecture::uniform(1, 4, 3).unwrap(), 1);
        let data = Dataset::sample(Target::ScaledSquare { c: 50.0 }, 16, (0.0, 1.0), 1);
        let r = train(
            &net,
            &data,
            &PerturbationSchedule::none(),
            &StepSchedule::constant(1e3).unwrap(),
            200,
            0,
            &ProbeConfig::default(),
        );
        assert!(matches!(r, Err(GradError::Diverged { .. })));
    }
}
