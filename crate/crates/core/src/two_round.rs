//! Two-round detection: pre-decide confident spins, re-solve the rest.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingModel, SpinConfig};
use crate::pmis::{run_batch, SolverParams};
use crate::rng::mix;
use crate::soft::{confidence, tabulate, SoftOutput};

pub const DEFAULT_C_TH: f64 = 0.97;

/// Spins fixed after round 1. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct PreDecision {
    pub threshold: f64,
    pub decided: BTreeMap<usize, i8>,
    pub n_vars: usize,
}

impl PreDecision {
    pub fn decided_fraction(&self) -> f64 {
        self.decided.len() as f64 / self.n_vars as f64
    }

    pub fn is_complete(&self) -> bool {
        self.decided.len() == self.n_vars
    }
}

#[derive(Serialize, Deserialize)]
struct PreDecisionWire {
    threshold: f64,
    n_vars: usize,
    /// `[index, spin]` pairs, 1-based.
    decided: Vec<(usize, i8)>,
}

impl Serialize for PreDecision {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PreDecisionWire {
            threshold: self.threshold,
            n_vars: self.n_vars,
            decided: self.decided.iter().map(|(&k, &v)| (k + 1, v)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PreDecision {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = PreDecisionWire::deserialize(d)?;
        let mut decided = BTreeMap::new();
        for (k, v) in w.decided {
            if k == 0 || k > w.n_vars || (v != 1 && v != -1) {
                return Err(D::Error::custom(format!("bad decided entry [{k}, {v}]")));
            }
            decided.insert(k - 1, v);
        }
        Ok(Self {
            threshold: w.threshold,
            decided,
            n_vars: w.n_vars,
        })
    }
}

fn check_threshold(c_th: f64) -> Result<()> {
    if !(c_th > 0.5 && c_th <= 1.0) {
        return Err(Error::InvalidArgument(format!("c_th must lie in (0.5, 1], got {c_th}")));
    }
    Ok(())
}

/// Fixes every spin whose confidence reaches `c_th` to its value in `best`.
pub fn pre_decide(confidences: &[f64], best: &SpinConfig, c_th: f64) -> Result<PreDecision> {
    check_threshold(c_th)?;
    if confidences.len() != best.len() {
        return Err(Error::DimensionMismatch {
            expected: best.len(),
            got: confidences.len(),
        });
    }
    let decided = confidences
        .iter()
        .zip(best.as_slice())
        .enumerate()
        .filter(|(_, (&c, _))| c >= c_th)
        .map(|(j, (_, &s))| (j, s))
        .collect();
    Ok(PreDecision {
        threshold: c_th,
        decided,
        n_vars: best.len(),
    })
}

/// Threshold as a function of the per-round run count.
///
/// Fewer runs give noisier confidences, so a schedule may demand a higher
/// threshold for small batches. An override `(max_runs, c_th)` applies when
/// `n_runs <= max_runs`; the smallest matching `max_runs` wins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CthSchedule {
    pub default: f64,
    pub overrides: Vec<(usize, f64)>,
}

impl Default for CthSchedule {
    fn default() -> Self {
        Self {
            default: DEFAULT_C_TH,
            overrides: Vec::new(),
        }
    }
}

impl CthSchedule {
    pub fn constant(c_th: f64) -> Self {
        Self {
            default: c_th,
            overrides: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_threshold(self.default)?;
        self.overrides.iter().try_for_each(|&(_, c)| check_threshold(c))
    }

    pub fn threshold(&self, n_runs: usize) -> f64 {
        self.overrides
            .iter()
            .filter(|(max_runs, _)| n_runs <= *max_runs)
            .min_by_key(|(max_runs, _)| *max_runs)
            .map_or(self.default, |&(_, c)| c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoRoundOptions {
    pub n_runs: usize,
    pub n_runs_round2: usize,
    pub c_th: f64,
}

impl Default for TwoRoundOptions {
    fn default() -> Self {
        Self {
            n_runs: 256,
            n_runs_round2: 256,
            c_th: DEFAULT_C_TH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub pre_decision: PreDecision,
    pub decided_fraction: f64,
    /// Offset-free energies on the full model.
    pub round1_best_energy: f64,
    pub round2_best_energy: Option<f64>,
    pub improved: bool,
    pub round1: SoftOutput,
    /// Soft output over the reduced (free) spins only.
    pub round2: Option<SoftOutput>,
    /// Original indices of the spins solved in round 2.
    pub free_indices: Vec<usize>,
    #[serde(skip)]
    pub latency: Duration,
}

/// Two-round detection with equal budgets in both rounds.
pub fn two_round_detect(
    model: &IsingModel,
    params: &SolverParams,
    n_runs: usize,
    c_th: f64,
) -> Result<(SpinConfig, RoundReport)> {
    two_round_detect_with(
        model,
        params,
        &TwoRoundOptions {
            n_runs,
            n_runs_round2: n_runs,
            c_th,
        },
    )
}

pub fn two_round_detect_with(
    model: &IsingModel,
    params: &SolverParams,
    options: &TwoRoundOptions,
) -> Result<(SpinConfig, RoundReport)> {
    let start = Instant::now();
    check_threshold(options.c_th)?;
    if options.n_runs_round2 == 0 {
        return Err(Error::InvalidArgument("n_runs_round2 must be at least 1".into()));
    }

    let first = run_batch(model, params, options.n_runs)?;
    let table = tabulate(first.iter().map(|r| (&r.config, r.energy)))?;
    let soft1 = SoftOutput::from_table(&table);
    let best1 = soft1.best.clone();
    let energy1 = table.best().energy;
    let decision = pre_decide(&soft1.confidence, &best1, options.c_th)?;

    let mut report = RoundReport {
        decided_fraction: decision.decided_fraction(),
        pre_decision: decision,
        round1_best_energy: energy1,
        round2_best_energy: None,
        improved: false,
        round1: soft1,
        round2: None,
        free_indices: Vec::new(),
        latency: Duration::ZERO,
    };
    if report.pre_decision.is_complete() {
        report.latency = start.elapsed();
        return Ok((best1, report));
    }

    let clamp = model.clamp(&report.pre_decision.decided)?;
    let round2_params = params.with_seed(mix(params.seed, u64::MAX));
    let second = run_batch(&clamp.reduced, &round2_params, options.n_runs_round2)?;
    let table2 = tabulate(second.iter().map(|r| (&r.config, r.energy)))?;
    let restored = clamp.restore(&table2.best().spins)?;
    let energy2 = model.energy(&restored)?;

    report.round2_best_energy = Some(energy2);
    report.round2 = Some(SoftOutput {
        best: table2.best().spins.clone(),
        confidence: confidence(&table2),
        table: table2.entries().to_vec(),
    });
    report.free_indices = clamp.index_map;
    let output = if energy2 < energy1 {
        report.improved = true;
        restored
    } else {
        best1
    };
    report.latency = start.elapsed();
    Ok((output, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::{generate_instance, ml_to_ising, Constellation};

    fn cfg(v: &[i8]) -> SpinConfig {
        SpinConfig::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pre_decide_examples() {
        let best = cfg(&[1, -1, 1]);
        assert!(pre_decide(&[1.0; 3], &best, 0.97).unwrap().is_complete());
        assert!(pre_decide(&[0.9; 3], &best, 0.97).unwrap().decided.is_empty());
        let d = pre_decide(&[0.99, 0.96, 0.98], &best, 0.97).unwrap();
        assert_eq!(d.decided, BTreeMap::from([(0, 1), (2, 1)]));
        assert!((d.decided_fraction() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pre_decide_rejects_bad_input() {
        let best = cfg(&[1, -1]);
        assert!(pre_decide(&[1.0, 1.0], &best, 0.5).is_err());
        assert!(pre_decide(&[1.0, 1.0], &best, 1.01).is_err());
        assert!(pre_decide(&[1.0], &best, 0.97).is_err());
        assert!(pre_decide(&[1.0, 1.0], &best, 1.0).is_ok());
    }

    #[test]
    fn threshold_monotonicity() {
        let conf = [0.55, 0.97, 0.99, 0.7, 1.0, 0.96];
        let best = cfg(&[1, 1, -1, -1, 1, -1]);
        let mut prev = usize::MAX;
        for c in [0.51, 0.6, 0.8, 0.96, 0.97, 0.99, 1.0] {
            let n = pre_decide(&conf, &best, c).unwrap().decided.len();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn schedule_lookup() {
        let s = CthSchedule {
            default: 0.97,
            overrides: vec![(64, 0.99), (16, 1.0)],
        };
        s.validate().unwrap();
        assert_eq!(s.threshold(8), 1.0);
        assert_eq!(s.threshold(16), 1.0);
        assert_eq!(s.threshold(17), 0.99);
        assert_eq!(s.threshold(64), 0.99);
        assert_eq!(s.threshold(200), 0.97);
        assert!(CthSchedule::constant(0.4).validate().is_err());
    }

    #[test]
    fn nothing_decided_still_never_worse() {
        let inst = generate_instance(6, 6, Constellation::Qam16, 12.0, 3).unwrap();
        let m = ml_to_ising(&inst).unwrap();
        let params = SolverParams {
            seed: 4,
            ..Default::default()
        };
        let (out, rep) = two_round_detect(&m, &params, 8, 1.0).unwrap();
        assert!(m.energy(&out).unwrap() <= rep.round1_best_energy);
        if rep.pre_decision.decided.is_empty() {
            assert_eq!(rep.free_indices, (0..m.n_vars()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn everything_decided_returns_round_one() {
        // strongly biased independent spins: every run agrees
        let m = IsingModel::new(4, [], vec![-1.0, 1.0, -1.0, 1.0], 0.0).unwrap();
        let (out, rep) = two_round_detect(&m, &SolverParams::default(), 16, 0.97).unwrap();
        assert!(rep.pre_decision.is_complete());
        assert_eq!(out, rep.round1.best);
        assert_eq!(out.as_slice(), &[1, -1, 1, -1]);
        assert!(rep.round2.is_none() && !rep.improved);
    }

    #[test]
    fn never_worse_and_restoration_sound() {
        for seed in 0..40 {
            let inst = generate_instance(6, 6, Constellation::Qam16, 14.0, seed).unwrap();
            let m = ml_to_ising(&inst).unwrap();
            let params = SolverParams {
                seed,
                ..Default::default()
            };
            let (out, rep) = two_round_detect(&m, &params, 12, 0.9).unwrap();
            let e = m.energy(&out).unwrap();
            assert!(e <= rep.round1_best_energy);
            assert_eq!(rep.improved, e < rep.round1_best_energy);
            for (&k, &v) in &rep.pre_decision.decided {
                assert_eq!(rep.round1.best.as_slice()[k], v);
                assert!(rep.round1.confidence[k] >= 0.9);
            }
            if let (Some(r2), Some(e2)) = (&rep.round2, rep.round2_best_energy) {
                let clamp = m.clamp(&rep.pre_decision.decided).unwrap();
                let reduced_energy = clamp.reduced.energy(&r2.best).unwrap();
                assert!((reduced_energy + clamp.constant - e2).abs() <= 1e-9 * (1.0 + e2.abs()));
                let full = clamp.restore(&r2.best).unwrap();
                for (&k, &v) in &rep.pre_decision.decided {
                    assert_eq!(full.as_slice()[k], v);
                }
            }
        }
    }

    #[test]
    fn report_json_round_trip() {
        let inst = generate_instance(3, 3, Constellation::Qpsk, 10.0, 1).unwrap();
        let m = ml_to_ising(&inst).unwrap();
        let (_, rep) = two_round_detect(&m, &SolverParams::default(), 10, 0.97).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        let back: RoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.pre_decision, rep.pre_decision);
        assert_eq!(back.round1, rep.round1);
    }

    #[test]
    fn deterministic() {
        let inst = generate_instance(5, 5, Constellation::Qam16, 15.0, 8).unwrap();
        let m = ml_to_ising(&inst).unwrap();
        let p = SolverParams {
            seed: 77,
            ..Default::default()
        };
        let a = two_round_detect(&m, &p, 20, 0.97).unwrap();
        let b = two_round_detect(&m, &p, 20, 0.97).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(
            serde_json::to_string(&a.1).unwrap(),
            serde_json::to_string(&b.1).unwrap()
        );
    }
}
