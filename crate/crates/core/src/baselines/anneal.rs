use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{DenseIsing, IsingModel, SpinConfig};
use crate::pmis::{sweep_tracking, BestSeen, Replica, RunOutput, Scaling};
use crate::rng::{mix, rng_from_seed};

/// Single-replica simulated annealing with a geometric schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaParams {
    pub n_sweeps: usize,
    pub t_high: f64,
    pub t_low: f64,
    pub seed: u64,
    pub scaling: Scaling,
}

impl Default for SaParams {
    fn default() -> Self {
        Self {
            n_sweeps: 100,
            t_high: 1.0,
            t_low: 0.05,
            seed: 0,
            scaling: Scaling::MaxAbs,
        }
    }
}

impl SaParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_sweeps == 0 {
            return Err(Error::InvalidArgument("n_sweeps must be positive".into()));
        }
        if !(self.t_low > 0.0 && self.t_low <= self.t_high && self.t_high.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < t_low <= t_high, got t_low={} t_high={}",
                self.t_low, self.t_high
            )));
        }
        Ok(())
    }

    /// Temperature of sweep `k` (0-based).
    pub fn temperature(&self, k: usize) -> f64 {
        if self.n_sweeps == 1 {
            return self.t_low;
        }
        let frac = k as f64 / (self.n_sweeps - 1) as f64;
        self.t_high * (self.t_low / self.t_high).powf(frac)
    }
}

fn anneal(model: &IsingModel, kernel: &DenseIsing, params: &SaParams) -> Result<RunOutput> {
    let start = Instant::now();
    let mut rng = rng_from_seed(params.seed);
    let unit = params.scaling.energy_unit(model);
    let mut replica = Replica::new(kernel, SpinConfig::random(kernel.n_vars(), &mut rng));
    let mut best = BestSeen::from_replica(&replica);
    for k in 0..params.n_sweeps {
        let beta = 1.0 / (params.temperature(k) * unit);
        sweep_tracking(kernel, &mut replica, beta, &mut rng, Some(&mut best));
    }
    let config = SpinConfig::new(best.spins).expect("spins are ±1");
    let energy = model.energy(&config)?;
    Ok(RunOutput {
        config,
        energy,
        latency: start.elapsed(),
    })
}

/// One annealing run returning the best configuration seen.
pub fn sa_run(model: &IsingModel, params: &SaParams) -> Result<RunOutput> {
    params.validate()?;
    anneal(model, &DenseIsing::from_model(model), params)
}

/// `n_runs` independent annealing runs seeded like the tempering batch.
pub fn sa_batch(model: &IsingModel, params: &SaParams, n_runs: usize) -> Result<Vec<RunOutput>> {
    params.validate()?;
    if n_runs == 0 {
        return Err(Error::InvalidArgument("n_runs must be at least 1".into()));
    }
    let kernel = DenseIsing::from_model(model);
    (0..n_runs as u64)
        .into_par_iter()
        .map(|k| {
            anneal(
                model,
                &kernel,
                &SaParams {
                    seed: mix(params.seed, k),
                    ..*params
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_endpoints() {
        let p = SaParams {
            n_sweeps: 11,
            ..Default::default()
        };
        assert_eq!(p.temperature(0), 1.0);
        assert!((p.temperature(10) - 0.05).abs() < 1e-15);
        assert!((1..11).all(|k| p.temperature(k) < p.temperature(k - 1)));
    }

    #[test]
    fn single_spin() {
        let m = IsingModel::new(1, [], vec![-1.0], 0.0).unwrap();
        for seed in 0..10 {
            let out = sa_run(
                &m,
                &SaParams {
                    seed,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(out.config.as_slice(), &[1]);
            assert_eq!(out.energy, -1.0);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let inst = crate::mimo::generate_instance(4, 4, crate::mimo::Constellation::Qam16, 12.0, 5).unwrap();
        let m = crate::mimo::ml_to_ising(&inst).unwrap();
        let p = SaParams {
            seed: 9,
            ..Default::default()
        };
        let a = sa_run(&m, &p).unwrap();
        let b = sa_run(&m, &p).unwrap();
        assert_eq!(a.config, b.config);
        assert_eq!(a.energy, b.energy);
        let batch = sa_batch(&m, &p, 8).unwrap();
        let again = sa_batch(&m, &p, 8).unwrap();
        assert!(batch.iter().zip(&again).all(|(x, y)| x.config == y.config));
    }
}
