//! Two-replica ("bang-bang") parallel tempering.
//!
//! One replica runs cold and acts as a greedy searcher, the other runs
//! slightly hotter; after every `exchange_interval` sweeps the two may swap
//! temperatures. A run returns the lowest-energy configuration seen by either
//! replica over its whole trajectory.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{DenseIsing, IsingModel, SpinConfig};
use crate::rng::{mix, rng_from_seed};

/// Parameters of a single solver run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub n_sweeps: usize,
    pub t_low: f64,
    pub t_high: f64,
    pub exchange_interval: usize,
    pub seed: u64,
    pub scaling: Scaling,
}

/// Unit in which temperatures are expressed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// Raw energy units.
    None,
    /// Multiples of the largest coefficient magnitude `max(|g_ij|, |f_i|)`,
    /// which makes the schedule invariant to rescaling the model.
    #[default]
    MaxAbs,
}

impl Scaling {
    pub fn energy_unit(self, model: &IsingModel) -> f64 {
        match self {
            Self::None => 1.0,
            Self::MaxAbs => {
                let max = model
                    .couplings()
                    .map(|(_, g)| g.abs())
                    .chain(model.fields().iter().map(|f| f.abs()))
                    .fold(0.0f64, f64::max);
                if max > 0.0 {
                    max
                } else {
                    1.0
                }
            }
        }
    }
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            n_sweeps: 50,
            t_low: 0.05,
            t_high: 0.06,
            exchange_interval: 1,
            seed: 0,
            scaling: Scaling::MaxAbs,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_sweeps == 0 {
            return Err(Error::InvalidArgument("n_sweeps must be positive".into()));
        }
        if self.exchange_interval == 0 {
            return Err(Error::InvalidArgument("exchange_interval must be positive".into()));
        }
        if !(self.t_low > 0.0 && self.t_low < self.t_high && self.t_high.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < t_low < t_high, got t_low={} t_high={}",
                self.t_low, self.t_high
            )));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// `min{1, exp(-β ΔH)}`.
#[inline]
pub fn metropolis_acceptance(beta: f64, delta: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-beta * delta).exp()
    }
}

/// Probability of swapping the temperatures of two replicas:
/// `min{1, exp((β₁ − β₂)(H₁ − H₂))}`.
pub fn exchange_probability(beta_1: f64, beta_2: f64, energy_1: f64, energy_2: f64) -> f64 {
    let x = (beta_1 - beta_2) * (energy_1 - energy_2);
    if x >= 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// One replica with cached local fields `h_i = f_i + Σ_j G_ij s_j`, so that
/// a flip proposal costs O(1) and an accepted flip O(N).
#[derive(Debug, Clone)]
pub struct Replica {
    spins: Vec<i8>,
    local: Vec<f64>,
    energy: f64,
}

impl Replica {
    pub fn new(kernel: &DenseIsing, config: SpinConfig) -> Self {
        let spins = config.into_inner();
        let local = kernel.local_fields(&spins);
        let energy = kernel.energy(&spins);
        Self { spins, local, energy }
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// Energy tracked incrementally from the initial configuration.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn config(&self) -> SpinConfig {
        SpinConfig::new(self.spins.clone()).expect("replica spins are always ±1")
    }

    #[inline]
    fn flip(&mut self, kernel: &DenseIsing, i: usize, delta: f64) {
        let new = -self.spins[i];
        self.spins[i] = new;
        self.energy += delta;
        let step = 2.0 * f64::from(new);
        for (h, g) in self.local.iter_mut().zip(kernel.row(i)) {
            *h += step * g;
        }
    }
}

/// Tracks the lowest energy visited.
#[derive(Debug, Clone)]
pub(crate) struct BestSeen {
    pub(crate) energy: f64,
    pub(crate) spins: Vec<i8>,
}

impl BestSeen {
    pub(crate) fn from_replica(r: &Replica) -> Self {
        Self {
            energy: r.energy,
            spins: r.spins.clone(),
        }
    }

    #[inline]
    pub(crate) fn offer(&mut self, r: &Replica) {
        if r.energy < self.energy {
            self.energy = r.energy;
            self.spins.copy_from_slice(&r.spins);
        }
    }
}

/// One sequential Metropolis pass over spins `0..n` at inverse temperature
/// `beta`.
pub fn metropolis_sweep<R: Rng + ?Sized>(kernel: &DenseIsing, replica: &mut Replica, beta: f64, rng: &mut R) {
    sweep_tracking(kernel, replica, beta, rng, None);
}

pub(crate) fn sweep_tracking<R: Rng + ?Sized>(
    kernel: &DenseIsing,
    replica: &mut Replica,
    beta: f64,
    rng: &mut R,
    mut best: Option<&mut BestSeen>,
) {
    for i in 0..replica.spins.len() {
        let delta = -2.0 * f64::from(replica.spins[i]) * replica.local[i];
        let accept = delta <= 0.0 || rng.random::<f64>() < metropolis_acceptance(beta, delta);
        if accept {
            replica.flip(kernel, i, delta);
            if delta < 0.0 {
                if let Some(best) = best.as_deref_mut() {
                    best.offer(replica);
                }
            }
        }
    }
}

/// Result of one solver run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: SpinConfig,
    /// Offset-free energy of `config`.
    pub energy: f64,
    pub latency: Duration,
}

/// Hooks for observing a run; used by tests to check schedule invariants.
pub trait RunObserver {
    /// Called after every sweep pair with the replica temperatures and the
    /// running best energy.
    fn after_sweep(&mut self, _sweep: usize, _temperatures: [f64; 2], _best_energy: f64) {}
}

impl RunObserver for () {}

/// A single two-replica parallel tempering run.
pub fn pmis_run(model: &IsingModel, params: &SolverParams) -> Result<RunOutput> {
    params.validate()?;
    let kernel = DenseIsing::from_model(model);
    run_with_kernel(model, &kernel, params, &mut ())
}

pub fn pmis_run_observed(
    model: &IsingModel,
    params: &SolverParams,
    observer: &mut impl RunObserver,
) -> Result<RunOutput> {
    params.validate()?;
    let kernel = DenseIsing::from_model(model);
    run_with_kernel(model, &kernel, params, observer)
}

fn run_with_kernel(
    model: &IsingModel,
    kernel: &DenseIsing,
    params: &SolverParams,
    observer: &mut impl RunObserver,
) -> Result<RunOutput> {
    let start = Instant::now();
    let mut rng = rng_from_seed(params.seed);
    let n = kernel.n_vars();
    let mut replicas = [
        Replica::new(kernel, SpinConfig::random(n, &mut rng)),
        Replica::new(kernel, SpinConfig::random(n, &mut rng)),
    ];
    // replica 0 starts cold
    let unit = params.scaling.energy_unit(model);
    let mut temps = [params.t_low, params.t_high];
    let mut best = BestSeen::from_replica(&replicas[0]);
    best.offer(&replicas[1]);

    for sweep in 1..=params.n_sweeps {
        for (replica, &t) in replicas.iter_mut().zip(&temps) {
            sweep_tracking(kernel, replica, 1.0 / (t * unit), &mut rng, Some(&mut best));
        }
        if sweep % params.exchange_interval == 0 {
            let p = exchange_probability(
                1.0 / (temps[0] * unit),
                1.0 / (temps[1] * unit),
                replicas[0].energy,
                replicas[1].energy,
            );
            if p >= 1.0 || rng.random::<f64>() < p {
                temps.swap(0, 1);
            }
        }
        observer.after_sweep(sweep, temps, best.energy);
    }

    let config = SpinConfig::new(best.spins).expect("spins are ±1");
    let energy = model.energy(&config)?;
    Ok(RunOutput {
        config,
        energy,
        latency: start.elapsed(),
    })
}

/// `n_runs` independent runs; run `k` uses seed `mix(params.seed, k)`.
///
/// Runs execute in parallel but the returned list is in run order and does
/// not depend on scheduling.
pub fn run_batch(model: &IsingModel, params: &SolverParams, n_runs: usize) -> Result<Vec<RunOutput>> {
    params.validate()?;
    if n_runs == 0 {
        return Err(Error::InvalidArgument("n_runs must be at least 1".into()));
    }
    let kernel = DenseIsing::from_model(model);
    (0..n_runs as u64)
        .into_par_iter()
        .map(|k| run_with_kernel(model, &kernel, &params.with_seed(mix(params.seed, k)), &mut ()))
        .collect()
}

/// Sequential variant of [`run_batch`]; identical output.
pub fn run_batch_sequential(model: &IsingModel, params: &SolverParams, n_runs: usize) -> Result<Vec<RunOutput>> {
    params.validate()?;
    if n_runs == 0 {
        return Err(Error::InvalidArgument("n_runs must be at least 1".into()));
    }
    let kernel = DenseIsing::from_model(model);
    (0..n_runs as u64)
        .map(|k| run_with_kernel(model, &kernel, &params.with_seed(mix(params.seed, k)), &mut ()))
        .collect()
}
