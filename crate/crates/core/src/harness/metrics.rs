use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::SpinConfig;
use crate::mimo::Constellation;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// A success proportion with its Wilson score interval at 95%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub samples: u64,
    pub p: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn wilson_interval(successes: u64, samples: u64) -> Result<Proportion> {
    if samples == 0 {
        return Err(Error::Empty("no samples for a proportion estimate"));
    }
    if successes > samples {
        return Err(Error::InvalidArgument(format!(
            "{successes} successes out of {samples} samples"
        )));
    }
    let n = samples as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Ok(Proportion {
        successes,
        samples,
        p,
        ci_lo: (center - half).clamp(0.0, p),
        ci_hi: (center + half).clamp(p, 1.0),
    })
}

/// Probability that at least one of `n_pe` independent runs finds the ML
/// solution: `1 − (1 − p_ml)^n_pe`.
pub fn success_probability(p_ml: f64, n_pe: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_ml) {
        return Err(Error::InvalidArgument(format!("p_ml must lie in [0, 1], got {p_ml}")));
    }
    if n_pe == 0 {
        return Err(Error::InvalidArgument("n_pe must be at least 1".into()));
    }
    let miss = 1.0 - p_ml;
    let all_miss = match i32::try_from(n_pe) {
        Ok(n) => miss.powi(n),
        Err(_) => (n_pe as f64 * (-p_ml).ln_1p()).exp(),
    };
    Ok(1.0 - all_miss)
}

/// Runs needed to reach a target success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RequiredNpe {
    Finite(u64),
    /// `p_ml = 0`: no finite number of runs suffices.
    Unbounded,
}

impl RequiredNpe {
    pub fn finite(self) -> Option<u64> {
        match self {
            Self::Finite(n) => Some(n),
            Self::Unbounded => None,
        }
    }
}

impl std::fmt::Display for RequiredNpe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Finite(n) => write!(f, "{n}"),
            Self::Unbounded => f.write_str("unbounded"),
        }
    }
}

// Serialized as an integer or the string "unbounded".
impl Serialize for RequiredNpe {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(n) => s.serialize_u64(*n),
            Self::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for RequiredNpe {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            N(u64),
            S(String),
        }
        match Wire::deserialize(d)? {
            Wire::N(n) => Ok(Self::Finite(n)),
            Wire::S(s) if s == "unbounded" => Ok(Self::Unbounded),
            Wire::S(s) => Err(serde::de::Error::custom(format!("expected \"unbounded\", got {s:?}"))),
        }
    }
}

/// `ceil(log(1 − target) / log(1 − p_ml))`, at least 1.
///
/// The ceiling is corrected against [`success_probability`] so that the
/// result is the smallest count that actually reaches `target` in floating
/// point.
pub fn required_npe(p_ml: f64, target: f64) -> Result<RequiredNpe> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target must lie in (0, 1), got {target}"
        )));
    }
    if !(0.0..=1.0).contains(&p_ml) {
        return Err(Error::InvalidArgument(format!("p_ml must lie in [0, 1], got {p_ml}")));
    }
    if p_ml == 0.0 {
        return Ok(RequiredNpe::Unbounded);
    }
    if p_ml == 1.0 {
        return Ok(RequiredNpe::Finite(1));
    }
    let x = (-target).ln_1p() / (-p_ml).ln_1p();
    if !x.is_finite() || x >= u64::MAX as f64 {
        return Ok(RequiredNpe::Unbounded);
    }
    let mut n = (x.ceil() as u64).max(1);
    while n > 1 && success_probability(p_ml, n - 1)? >= target {
        n -= 1;
    }
    while success_probability(p_ml, n)? < target {
        n += 1;
    }
    Ok(RequiredNpe::Finite(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Percentiles<T> {
    pub median: T,
    pub p995: T,
}

/// Nearest-rank element for quantile `num/den` of a sorted slice.
fn nearest_rank<T: Copy>(sorted: &[T], num: usize, den: usize) -> T {
    let rank = (sorted.len() * num).div_ceil(den).max(1);
    sorted[rank - 1]
}

/// Nearest-rank median and 99.5th percentile.
pub fn latency_stats<T: Copy + Ord>(samples: &[T]) -> Result<Percentiles<T>> {
    if samples.is_empty() {
        return Err(Error::Empty("no latency samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    Ok(Percentiles {
        median: nearest_rank(&sorted, 1, 2),
        p995: nearest_rank(&sorted, 995, 1000),
    })
}

/// Conditional spin error rates over incorrect outputs.
///
/// `per_level[l]` pools every spin at bit level `l` of an axis (level 0 is
/// the most significant spin, i.e. the quadrant spin for 16-QAM).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Spinwise {
    NoData,
    Rates {
        n_incorrect: u64,
        per_position: Vec<f64>,
        per_level: Vec<f64>,
    },
}

/// Bit level of spin position `j` (0-based) within its axis.
pub fn spin_level(constellation: Constellation, j: usize) -> usize {
    j % constellation.spins_per_axis()
}

/// Accumulates per-position error counts over incorrect outputs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinwiseCounts {
    pub n_incorrect: u64,
    pub position_errors: Vec<u64>,
}

impl SpinwiseCounts {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_incorrect: 0,
            position_errors: vec![0; n_vars],
        }
    }

    /// Adds one output; correct outputs are ignored.
    pub fn add(&mut self, output: &SpinConfig, reference: &SpinConfig) -> Result<()> {
        if output.len() != reference.len() || output.len() != self.position_errors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.position_errors.len(),
                got: output.len(),
            });
        }
        if output == reference {
            return Ok(());
        }
        self.n_incorrect += 1;
        for (j, (a, b)) in output.as_slice().iter().zip(reference.as_slice()).enumerate() {
            self.position_errors[j] += u64::from(a != b);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &SpinwiseCounts) -> Result<()> {
        if other.position_errors.len() != self.position_errors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.position_errors.len(),
                got: other.position_errors.len(),
            });
        }
        self.n_incorrect += other.n_incorrect;
        for (a, b) in self.position_errors.iter_mut().zip(&other.position_errors) {
            *a += b;
        }
        Ok(())
    }

    pub fn rates(&self, constellation: Constellation) -> Spinwise {
        if self.n_incorrect == 0 {
            return Spinwise::NoData;
        }
        let n = self.n_incorrect as f64;
        let levels = constellation.spins_per_axis();
        let mut level_errors = vec![0u64; levels];
        let mut level_slots = vec![0u64; levels];
        for (j, &e) in self.position_errors.iter().enumerate() {
            level_errors[spin_level(constellation, j)] += e;
            level_slots[spin_level(constellation, j)] += 1;
        }
        Spinwise::Rates {
            n_incorrect: self.n_incorrect,
            per_position: self.position_errors.iter().map(|&e| e as f64 / n).collect(),
            per_level: level_errors
                .iter()
                .zip(&level_slots)
                .map(|(&e, &slots)| e as f64 / (slots as f64 * n))
                .collect(),
        }
    }
}

/// Spinwise error rates of `outputs` against `references`, conditioned on
/// the outputs that differ from their reference.
pub fn spinwise_error_rates<'a, I>(pairs: I, constellation: Constellation) -> Result<Spinwise>
where
    I: IntoIterator<Item = (&'a SpinConfig, &'a SpinConfig)>,
{
    let mut counts: Option<SpinwiseCounts> = None;
    for (output, reference) in pairs {
        counts
            .get_or_insert_with(|| SpinwiseCounts::new(reference.len()))
            .add(output, reference)?;
    }
    Ok(counts.map_or(Spinwise::NoData, |c| c.rates(constellation)))
}
