//! Monte-Carlo campaigns: scenario generation, detector execution and
//! metric aggregation.

mod metrics;
mod output;

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{brute_force_ml, fcsd, sa_batch, sphere_decode, zero_forcing, zf_sic, DetectorResult, SaParams};
use crate::error::{Error, Result};
use crate::ising::{IsingModel, SpinConfig};
use crate::mimo::{
    generate_instance, instance_with_channel, load_trace_channel, ml_to_ising, Constellation, DetectionInstance,
};
use crate::pmis::{run_batch, RunOutput, SolverParams};
use crate::rng::mix;
use crate::two_round::{two_round_detect_with, CthSchedule, TwoRoundOptions};

pub use metrics::{
    latency_stats, required_npe, spin_level, spinwise_error_rates, success_probability, wilson_interval, Percentiles,
    Proportion, RequiredNpe, Spinwise, SpinwiseCounts, Z_95,
};
pub use output::{
    read_instances, read_summary, report_csv, run_bench, write_campaign, write_instances, BenchConfig, Grid, CSV_FILE,
    LATENCY_FILE, RECORDS_FILE, SUMMARY_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Detector {
    #[serde(rename = "paramax")]
    Paramax,
    #[serde(rename = "2r-paramax")]
    TwoRound,
    #[serde(rename = "sa")]
    Sa,
    #[serde(rename = "zf")]
    Zf,
    #[serde(rename = "zf-sic")]
    ZfSic,
    #[serde(rename = "fcsd")]
    Fcsd,
    #[serde(rename = "sd")]
    Sd,
    #[serde(rename = "bruteforce")]
    BruteForce,
}

impl Detector {
    pub const ALL: [Detector; 8] = [
        Self::Paramax,
        Self::TwoRound,
        Self::Sa,
        Self::Zf,
        Self::ZfSic,
        Self::Fcsd,
        Self::Sd,
        Self::BruteForce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Paramax => "paramax",
            Self::TwoRound => "2r-paramax",
            Self::Sa => "sa",
            Self::Zf => "zf",
            Self::ZfSic => "zf-sic",
            Self::Fcsd => "fcsd",
            Self::Sd => "sd",
            Self::BruteForce => "bruteforce",
        }
    }

    /// Detectors whose repeated runs are independent samples.
    pub fn is_stochastic(self) -> bool {
        matches!(self, Self::Paramax | Self::TwoRound | Self::Sa)
    }
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown detector {s:?}")))
    }
}

/// Channel matrices taken from a trace file instead of Rayleigh draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSource {
    pub path: PathBuf,
    /// 0-based receive-antenna and user selections; absent keeps all.
    #[serde(default)]
    pub rx: Option<Vec<usize>>,
    #[serde(default)]
    pub users: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoRoundSettings {
    /// Round-2 budget; defaults to the round-1 budget.
    pub n_runs_round2: Option<usize>,
    pub c_th: CthSchedule,
}

/// Everything needed to reproduce a campaign.
///
/// Instance `i` is generated from seed `mix(seed, i)`; its solver runs use
/// base seed `mix(mix(seed, i), solver.seed)` (and likewise for `sa.seed`),
/// so detectors compared under one `seed` see identical instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub n_users: usize,
    pub n_rx: usize,
    pub constellation: Constellation,
    #[serde(with = "crate::serde_util::snr_db")]
    pub snr_db: f64,
    pub n_instances: usize,
    /// Runs per instance (`N_PE`) for the stochastic detectors.
    pub n_runs: usize,
    /// Points of the BER curve; empty means just `n_runs`.
    pub n_pe: Vec<usize>,
    pub detector: Detector,
    pub n_fs: usize,
    pub solver: SolverParams,
    pub sa: SaParams,
    pub two_round: TwoRoundSettings,
    pub seed: u64,
    /// Compute the exact ML solution with the sphere decoder.
    pub oracle: bool,
    /// Target probabilities for the required-`N_PE` estimate.
    pub targets: Vec<f64>,
    pub trace: Option<TraceSource>,
    /// Per-detection latency budget checked against the 99.5th percentile.
    pub time_budget_us: Option<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            id: "scenario".into(),
            n_users: 12,
            n_rx: 12,
            constellation: Constellation::Qam16,
            snr_db: 20.0,
            n_instances: 500,
            n_runs: 256,
            n_pe: Vec::new(),
            detector: Detector::Paramax,
            n_fs: 1,
            solver: SolverParams::default(),
            sa: SaParams::default(),
            two_round: TwoRoundSettings::default(),
            seed: 0,
            oracle: true,
            targets: vec![0.99],
            trace: None,
            time_budget_us: None,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_users == 0 || self.n_rx == 0 {
            return bad("n_users and n_rx must be positive".into());
        }
        if self.n_instances == 0 {
            return bad("n_instances must be positive".into());
        }
        if self.n_runs == 0 {
            return bad("n_runs must be positive".into());
        }
        if let Some(&n) = self.n_pe.iter().find(|&&n| n == 0 || n > self.n_runs) {
            return bad(format!("n_pe entry {n} outside 1..={}", self.n_runs));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return bad(format!("invalid snr_db {}", self.snr_db));
        }
        if self.detector == Detector::Fcsd && self.n_fs > self.n_users {
            return bad(format!("n_fs = {} exceeds n_users = {}", self.n_fs, self.n_users));
        }
        if matches!(self.detector, Detector::Zf | Detector::ZfSic) && self.n_rx < self.n_users {
            return bad("linear detectors need n_rx >= n_users".into());
        }
        if let Some(&t) = self.targets.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return bad(format!("target {t} outside (0, 1)"));
        }
        if self.two_round.n_runs_round2 == Some(0) {
            return bad("n_runs_round2 must be positive".into());
        }
        self.solver.validate()?;
        self.sa.validate()?;
        self.two_round.c_th.validate()
    }

    /// BER curve points, sorted and deduplicated.
    pub fn n_pe_points(&self) -> Vec<usize> {
        let mut points = if self.n_pe.is_empty() {
            vec![self.n_runs]
        } else {
            self.n_pe.clone()
        };
        points.sort_unstable();
        points.dedup();
        points
    }

    pub fn instance_seed(&self, index: usize) -> u64 {
        mix(self.seed, index as u64)
    }
}

/// The instances a scenario describes, in index order.
pub fn scenario_instances(scenario: &Scenario) -> Result<Vec<DetectionInstance>> {
    scenario.validate()?;
    let channel = match &scenario.trace {
        Some(t) => {
            let h = load_trace_channel(&t.path, t.rx.as_deref(), t.users.as_deref())?;
            if h.shape() != (scenario.n_rx, scenario.n_users) {
                return Err(Error::DimensionMismatch {
                    expected: scenario.n_rx * scenario.n_users,
                    got: h.nrows() * h.ncols(),
                });
            }
            Some(h)
        }
        None => None,
    };
    (0..scenario.n_instances)
        .into_par_iter()
        .map(|i| {
            let seed = scenario.instance_seed(i);
            match &channel {
                Some(h) => instance_with_channel(h.clone(), scenario.constellation, scenario.snr_db, seed),
                None => generate_instance(
                    scenario.n_users,
                    scenario.n_rx,
                    scenario.constellation,
                    scenario.snr_db,
                    seed,
                ),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitErrors {
    pub n_pe: usize,
    pub errors: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecisionTally {
    pub decided: u64,
    /// Decided spins equal to the exact ML solution (needs the oracle).
    pub agreeing: Option<u64>,
    pub n_vars: u64,
}

/// Outcome of one detector on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub scenario: String,
    pub detector: Detector,
    pub index: usize,
    pub seed: u64,
    pub ml_energy: Option<f64>,
    /// Final hard decision at the full budget.
    pub output: SpinConfig,
    pub output_energy: f64,
    /// Outputs reaching the ML energy, out of `samples`.
    pub successes: u64,
    pub samples: u64,
    /// Spin errors against the transmitted spins per curve point.
    pub bit_errors: Vec<BitErrors>,
    /// Errors of every sampled output against the ML solution (or the truth
    /// without an oracle), over incorrect outputs only.
    pub spinwise: SpinwiseCounts,
    pub pre_decision: Option<DecisionTally>,
    pub visited_nodes: Option<u64>,
    /// Per-sample latencies; not persisted.
    #[serde(skip)]
    pub latencies: Vec<Duration>,
}

fn reaches(energy: f64, ml: f64) -> bool {
    energy <= ml + 1e-9 * (1.0 + ml.abs())
}

/// Best-so-far over a run list, matching the tie-breaking of the output
/// table (lowest energy, then lexicographically smallest spins).
fn prefix_bests(runs: &[RunOutput], points: &[usize]) -> Vec<(usize, SpinConfig, f64)> {
    let mut out = Vec::with_capacity(points.len());
    let mut best: Option<(&SpinConfig, f64)> = None;
    let mut next = points.iter().peekable();
    for (k, r) in runs.iter().enumerate() {
        let better = match best {
            None => true,
            Some((c, e)) => r.energy < e || (r.energy == e && r.config < *c),
        };
        if better {
            best = Some((&r.config, r.energy));
        }
        while next.peek().is_some_and(|&&p| p == k + 1) {
            let (c, e) = best.expect("at least one run seen");
            out.push((k + 1, c.clone(), e));
            next.next();
        }
    }
    out
}

struct Oracle {
    spins: SpinConfig,
    energy: f64,
}

fn evaluate_instance(scenario: &Scenario, index: usize, instance: &DetectionInstance) -> Result<InstanceRecord> {
    let model = ml_to_ising(instance)?;
    let oracle = if scenario.oracle {
        let sd = sphere_decode(instance)?;
        Some(Oracle {
            energy: model.energy(&sd.spins)?,
            spins: sd.spins,
        })
    } else {
        None
    };
    let reference = oracle.as_ref().map_or(&instance.truth_spins, |o| &o.spins);
    let points = scenario.n_pe_points();
    let mut record = InstanceRecord {
        scenario: scenario.id.clone(),
        detector: scenario.detector,
        index,
        seed: instance.seed,
        ml_energy: oracle.as_ref().map(|o| o.energy),
        output: instance.truth_spins.clone(),
        output_energy: 0.0,
        successes: 0,
        samples: 0,
        bit_errors: Vec::new(),
        spinwise: SpinwiseCounts::new(model.n_vars()),
        pre_decision: None,
        visited_nodes: None,
        latencies: Vec::new(),
    };
    let success = |e: f64| oracle.as_ref().is_some_and(|o| reaches(e, o.energy));

    match scenario.detector {
        Detector::Paramax | Detector::Sa => {
            let runs = if scenario.detector == Detector::Paramax {
                let params = scenario.solver.with_seed(mix(instance.seed, scenario.solver.seed));
                run_batch(&model, &params, scenario.n_runs)?
            } else {
                let params = SaParams {
                    seed: mix(instance.seed, scenario.sa.seed),
                    ..scenario.sa
                };
                sa_batch(&model, &params, scenario.n_runs)?
            };
            for r in &runs {
                record.successes += u64::from(success(r.energy));
                record.spinwise.add(&r.config, reference)?;
                record.latencies.push(r.latency);
            }
            record.samples = runs.len() as u64;
            let mut all = points.clone();
            all.push(scenario.n_runs);
            all.sort_unstable();
            all.dedup();
            for (n, config, energy) in prefix_bests(&runs, &all) {
                if points.contains(&n) {
                    record.bit_errors.push(BitErrors {
                        n_pe: n,
                        errors: config.hamming(&instance.truth_spins) as u64,
                    });
                }
                if n == scenario.n_runs {
                    record.output = config;
                    record.output_energy = energy;
                }
            }
        }
        Detector::TwoRound => {
            let params = scenario.solver.with_seed(mix(instance.seed, scenario.solver.seed));
            let mut all = points.clone();
            all.push(scenario.n_runs);
            all.sort_unstable();
            all.dedup();
            for n in all {
                let options = TwoRoundOptions {
                    n_runs: n,
                    n_runs_round2: scenario.two_round.n_runs_round2.unwrap_or(n),
                    c_th: scenario.two_round.c_th.threshold(n),
                };
                let (config, report) = two_round_detect_with(&model, &params, &options)?;
                if points.contains(&n) {
                    record.bit_errors.push(BitErrors {
                        n_pe: n,
                        errors: config.hamming(&instance.truth_spins) as u64,
                    });
                }
                if n == scenario.n_runs {
                    let energy = model.energy(&config)?;
                    record.successes = u64::from(success(energy));
                    record.samples = 1;
                    record.spinwise.add(&config, reference)?;
                    record.latencies.push(report.latency);
                    let decided = &report.pre_decision.decided;
                    record.pre_decision = Some(DecisionTally {
                        decided: decided.len() as u64,
                        agreeing: oracle
                            .as_ref()
                            .map(|o| decided.iter().filter(|(&k, &v)| o.spins.as_slice()[k] == v).count() as u64),
                        n_vars: model.n_vars() as u64,
                    });
                    record.output = config;
                    record.output_energy = energy;
                }
            }
        }
        det => {
            let result = deterministic(det, scenario, instance)?;
            let energy = model.energy(&result.spins)?;
            record.successes = u64::from(success(energy));
            record.samples = 1;
            record.spinwise.add(&result.spins, reference)?;
            record.latencies.push(result.latency);
            record.visited_nodes = result.visited_nodes;
            let errors = result.spins.hamming(&instance.truth_spins) as u64;
            record.bit_errors = points.iter().map(|&n| BitErrors { n_pe: n, errors }).collect();
            record.output = result.spins;
            record.output_energy = energy;
        }
    }
    Ok(record)
}

fn deterministic(det: Detector, scenario: &Scenario, instance: &DetectionInstance) -> Result<DetectorResult> {
    match det {
        Detector::Zf => zero_forcing(instance),
        Detector::ZfSic => zf_sic(instance),
        Detector::Fcsd => fcsd(instance, scenario.n_fs),
        Detector::Sd => sphere_decode(instance),
        Detector::BruteForce => brute_force_ml(instance),
        Detector::Paramax | Detector::TwoRound | Detector::Sa => unreachable!("stochastic detector"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub n_pe: usize,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpeTarget {
    pub target: f64,
    pub n_pe: RequiredNpe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSummary {
    pub decided: u64,
    pub total_spins: u64,
    pub decided_fraction: f64,
    pub agreeing: Option<u64>,
    pub agreement: Option<f64>,
}

/// Deterministic campaign metrics (wall-clock figures live in
/// [`LatencyReport`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub detector: Detector,
    pub constellation: Constellation,
    pub n_users: usize,
    pub n_rx: usize,
    #[serde(with = "crate::serde_util::snr_db")]
    pub snr_db: f64,
    pub n_instances: usize,
    pub n_runs: usize,
    /// BER at the full budget.
    pub ber: f64,
    pub ber_curve: Vec<BerPoint>,
    pub p_ml: Option<Proportion>,
    pub required_npe: Vec<NpeTarget>,
    pub spinwise: Spinwise,
    pub pre_decision: Option<DecisionSummary>,
    pub mean_visited_nodes: Option<f64>,
}

/// Wall-clock statistics; excluded from determinism guarantees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub scenario: String,
    pub detector: Detector,
    pub n_samples: usize,
    pub median_us: f64,
    pub p995_us: f64,
    /// Required runs for 99% times the median per-run latency.
    pub tts99_us: Option<f64>,
    pub time_budget_us: Option<f64>,
    pub within_budget: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub scenario: Scenario,
    pub records: Vec<InstanceRecord>,
    pub report: MetricsReport,
    pub latency: LatencyReport,
}

/// Generates the scenario's instances and runs the configured detector.
pub fn run_scenario(scenario: &Scenario) -> Result<Campaign> {
    let instances = scenario_instances(scenario)?;
    run_on_instances(scenario, &instances)
}

/// Runs the configured detector over given instances (index order kept).
pub fn run_on_instances(scenario: &Scenario, instances: &[DetectionInstance]) -> Result<Campaign> {
    scenario.validate()?;
    if instances.is_empty() {
        return Err(Error::Empty("no instances"));
    }
    let records: Vec<InstanceRecord> = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            inst.validate()?;
            evaluate_instance(scenario, i, inst)
        })
        .collect::<Result<_>>()?;
    let report = aggregate(scenario, instances, &records)?;
    let latency = latency_report(scenario, &records, &report)?;
    Ok(Campaign {
        scenario: scenario.clone(),
        records,
        report,
        latency,
    })
}

fn aggregate(
    scenario: &Scenario,
    instances: &[DetectionInstance],
    records: &[InstanceRecord],
) -> Result<MetricsReport> {
    let n_vars = instances[0].n_vars();
    if instances
        .iter()
        .any(|i| i.n_vars() != n_vars || i.constellation != instances[0].constellation)
    {
        return Err(Error::InvalidArgument(
            "instances differ in size or constellation".into(),
        ));
    }
    let total_bits = (n_vars * records.len()) as u64;
    let ber_curve: Vec<BerPoint> = scenario
        .n_pe_points()
        .into_iter()
        .enumerate()
        .map(|(p, n_pe)| {
            let bit_errors: u64 = records.iter().map(|r| r.bit_errors[p].errors).sum();
            BerPoint {
                n_pe,
                bit_errors,
                total_bits,
                ber: bit_errors as f64 / total_bits as f64,
            }
        })
        .collect();
    let ber = records
        .iter()
        .map(|r| r.output.hamming(&instances[r.index].truth_spins) as u64)
        .sum::<u64>() as f64
        / total_bits as f64;

    let p_ml = if scenario.oracle {
        let successes = records.iter().map(|r| r.successes).sum();
        let samples = records.iter().map(|r| r.samples).sum();
        Some(wilson_interval(successes, samples)?)
    } else {
        None
    };
    let required = match p_ml {
        Some(p) if scenario.detector.is_stochastic() => scenario
            .targets
            .iter()
            .map(|&target| {
                Ok(NpeTarget {
                    target,
                    n_pe: required_npe(p.p, target)?,
                })
            })
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };

    let mut spinwise = SpinwiseCounts::new(n_vars);
    for r in records {
        spinwise.merge(&r.spinwise)?;
    }
    let pre_decision = if scenario.detector == Detector::TwoRound {
        let tallies: Vec<DecisionTally> = records.iter().filter_map(|r| r.pre_decision).collect();
        let decided: u64 = tallies.iter().map(|t| t.decided).sum();
        let total_spins: u64 = tallies.iter().map(|t| t.n_vars).sum();
        let agreeing: Option<u64> = tallies.iter().map(|t| t.agreeing).sum();
        Some(DecisionSummary {
            decided,
            total_spins,
            decided_fraction: decided as f64 / total_spins as f64,
            agreeing,
            agreement: agreeing.filter(|_| decided > 0).map(|a| a as f64 / decided as f64),
        })
    } else {
        None
    };
    let visited: Vec<u64> = records.iter().filter_map(|r| r.visited_nodes).collect();
    let mean_visited_nodes = (!visited.is_empty()).then(|| visited.iter().sum::<u64>() as f64 / visited.len() as f64);

    Ok(MetricsReport {
        scenario: scenario.id.clone(),
        detector: scenario.detector,
        constellation: instances[0].constellation,
        n_users: instances[0].n_users,
        n_rx: instances[0].n_rx,
        snr_db: instances[0].snr_db,
        n_instances: records.len(),
        n_runs: scenario.n_runs,
        ber,
        ber_curve,
        p_ml,
        required_npe: required,
        spinwise: spinwise.rates(instances[0].constellation),
        pre_decision,
        mean_visited_nodes,
    })
}

fn latency_report(scenario: &Scenario, records: &[InstanceRecord], report: &MetricsReport) -> Result<LatencyReport> {
    let samples: Vec<Duration> = records.iter().flat_map(|r| r.latencies.iter().copied()).collect();
    let stats = latency_stats(&samples)?;
    let us = |d: Duration| d.as_secs_f64() * 1e6;
    let tts99_us = report
        .required_npe
        .iter()
        .find(|t| t.target == 0.99)
        .and_then(|t| t.n_pe.finite())
        .or_else(|| {
            let p = report.p_ml.filter(|_| scenario.detector.is_stochastic())?;
            required_npe(p.p, 0.99).ok()?.finite()
        })
        .map(|n| n as f64 * us(stats.median));
    Ok(LatencyReport {
        scenario: scenario.id.clone(),
        detector: scenario.detector,
        n_samples: samples.len(),
        median_us: us(stats.median),
        p995_us: us(stats.p995),
        tts99_us,
        time_budget_us: scenario.time_budget_us,
        within_budget: scenario.time_budget_us.map(|b| us(stats.p995) <= b),
    })
}

/// Fraction of sampled outputs reaching the ML energy, with its interval.
pub fn estimate_p_ml(scenario: &Scenario) -> Result<Proportion> {
    if !scenario.oracle {
        return Err(Error::InvalidArgument("P_ML needs the exact oracle".into()));
    }
    run_scenario(scenario)?.report.p_ml.ok_or(Error::Empty("no samples"))
}

/// BER at each `n_pe` using the best of the first `n_pe` runs per instance.
pub fn ber_campaign(scenario: &Scenario, n_pe_list: &[usize]) -> Result<Vec<BerPoint>> {
    let s = Scenario {
        n_pe: n_pe_list.to_vec(),
        ..scenario.clone()
    };
    Ok(run_scenario(&s)?.report.ber_curve)
}

/// Exact ML Ising energy of an instance via the sphere decoder.
pub fn ml_energy(model: &IsingModel, instance: &DetectionInstance) -> Result<f64> {
    model.energy(&sphere_decode(instance)?.spins)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(detector: Detector) -> Scenario {
        Scenario {
            id: "t".into(),
            n_users: 3,
            n_rx: 4,
            constellation: Constellation::Qam16,
            snr_db: 12.0,
            n_instances: 12,
            n_runs: 16,
            n_pe: vec![1, 4, 16],
            detector,
            n_fs: 1,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn detector_names_round_trip() {
        for d in Detector::ALL {
            assert_eq!(d.name().parse::<Detector>().unwrap(), d);
            assert_eq!(serde_json::to_string(&d).unwrap(), format!("\"{}\"", d.name()));
        }
        assert!("mmse".parse::<Detector>().is_err());
    }

    #[test]
    fn bruteforce_self_test_gives_certainty() {
        let c = run_scenario(&small(Detector::BruteForce)).unwrap();
        assert_eq!(c.report.p_ml.unwrap().p, 1.0);
        let c = run_scenario(&small(Detector::Sd)).unwrap();
        assert_eq!(c.report.p_ml.unwrap().p, 1.0);
    }

    #[test]
    fn zero_runs_is_an_error() {
        let s = Scenario {
            n_runs: 0,
            ..small(Detector::Paramax)
        };
        assert!(estimate_p_ml(&s).is_err());
    }

    #[test]
    fn noise_free_gives_zero_ber() {
        for det in [Detector::Paramax, Detector::Sd, Detector::Zf, Detector::TwoRound] {
            let s = Scenario {
                snr_db: f64::INFINITY,
                constellation: Constellation::Qpsk,
                ..small(det)
            };
            let c = run_scenario(&s).unwrap();
            // QPSK 3x4 noise-free is easy enough that 16 runs always find it
            assert_eq!(c.report.ber, 0.0, "{det}");
        }
    }

    #[test]
    fn ber_curve_non_increasing() {
        for det in [Detector::Paramax, Detector::Sa] {
            let curve = ber_campaign(&small(det), &[1, 2, 4, 8, 16]).unwrap();
            assert!(
                curve.windows(2).all(|w| w[1].bit_errors <= w[0].bit_errors),
                "{curve:?}"
            );
        }
    }

    #[test]
    fn prefix_best_matches_table_best() {
        let inst = generate_instance(4, 4, Constellation::Qam16, 10.0, 2).unwrap();
        let model = ml_to_ising(&inst).unwrap();
        let runs = run_batch(&model, &SolverParams::default(), 30).unwrap();
        for (n, config, energy) in prefix_bests(&runs, &[1, 7, 30]) {
            let table = crate::soft::tabulate(runs[..n].iter().map(|r| (&r.config, r.energy))).unwrap();
            assert_eq!(&config, crate::soft::filter_best(&table));
            assert_eq!(energy, table.best().energy);
        }
    }

    #[test]
    fn campaign_is_deterministic() {
        for det in [Detector::Paramax, Detector::TwoRound, Detector::Fcsd] {
            let s = small(det);
            let a = run_scenario(&s).unwrap();
            let b = run_scenario(&s).unwrap();
            assert_eq!(
                serde_json::to_string(&a.report).unwrap(),
                serde_json::to_string(&b.report).unwrap()
            );
            let ser = |c: &Campaign| {
                c.records
                    .iter()
                    .map(|r| serde_json::to_string(r).unwrap())
                    .collect::<Vec<_>>()
            };
            assert_eq!(ser(&a), ser(&b));
        }
    }

    #[test]
    fn two_round_summary_present() {
        let c = run_scenario(&small(Detector::TwoRound)).unwrap();
        let d = c.report.pre_decision.unwrap();
        assert_eq!(d.total_spins, 12 * 12);
        assert!(d.decided <= d.total_spins);
        assert!(d.agreeing.unwrap() <= d.decided);
    }

    #[test]
    fn validation() {
        assert!(Scenario {
            n_pe: vec![17],
            ..small(Detector::Paramax)
        }
        .validate()
        .is_err());
        assert!(Scenario {
            n_fs: 4,
            ..small(Detector::Fcsd)
        }
        .validate()
        .is_err());
        assert!(Scenario {
            n_rx: 2,
            ..small(Detector::Zf)
        }
        .validate()
        .is_err());
        assert!(Scenario {
            targets: vec![1.0],
            ..small(Detector::Paramax)
        }
        .validate()
        .is_err());
        assert!(Scenario {
            n_instances: 0,
            ..small(Detector::Paramax)
        }
        .validate()
        .is_err());
        small(Detector::Paramax).validate().unwrap();
    }

    #[test]
    fn scenario_serde_round_trip() {
        let s = Scenario {
            snr_db: f64::INFINITY,
            ..small(Detector::TwoRound)
        };
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"snr_db\":null"));
        assert_eq!(serde_json::from_str::<Scenario>(&json).unwrap(), s);
        let from_toml: Scenario = toml::from_str("detector = \"zf-sic\"\nsnr_db = \"inf\"\nn_users = 2").unwrap();
        assert_eq!(from_toml.detector, Detector::ZfSic);
        assert_eq!(from_toml.snr_db, f64::INFINITY);
        assert!(serde_json::from_str::<Scenario>("{\"bogus\": 1}").is_err());
    }
}
