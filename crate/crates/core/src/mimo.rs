//! MIMO detection instances, constellations and the reduction of maximum
//! likelihood detection to an Ising model.
//!
//! Symbols live on the raw odd-integer grid (`±1, ±3, ...` per axis) so each
//! axis value is an integer combination of spins. For user `n` the spins are
//! laid out as the real-axis spins (most significant first) followed by the
//! imaginary-axis spins; for 16-QAM that is
//! `v_n = (2 s_{4n} + s_{4n+1}) + j (2 s_{4n+2} + s_{4n+3})` with 0-based spins.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingModel, SpinConfig};
use crate::rng::rng_from_seed;

/// Supported modulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constellation {
    #[serde(rename = "bpsk")]
    Bpsk,
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
    /// Experimental: the two-replica heuristic performs poorly at this order.
    #[serde(rename = "64qam")]
    Qam64,
}

impl Constellation {
    pub const ALL: [Constellation; 4] = [
        Constellation::Bpsk,
        Constellation::Qpsk,
        Constellation::Qam16,
        Constellation::Qam64,
    ];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Self::Bpsk => 1,
            Self::Qpsk => 2,
            Self::Qam16 => 4,
            Self::Qam64 => 6,
        }
    }

    /// Number of signal axes carrying data (1 for BPSK, 2 otherwise).
    pub fn axes(self) -> usize {
        match self {
            Self::Bpsk => 1,
            _ => 2,
        }
    }

    /// Spin coefficients on one axis, most significant first.
    pub fn axis_coefficients(self) -> &'static [i32] {
        match self {
            Self::Bpsk | Self::Qpsk => &[1],
            Self::Qam16 => &[2, 1],
            Self::Qam64 => &[4, 2, 1],
        }
    }

    pub fn spins_per_axis(self) -> usize {
        self.axis_coefficients().len()
    }

    /// Number of amplitude levels per axis.
    pub fn levels(self) -> usize {
        1 << self.spins_per_axis()
    }

    /// Per-axis alphabet in ascending order.
    pub fn axis_alphabet(self) -> Vec<f64> {
        let l = self.levels() as i32;
        (0..l).map(|k| f64::from(2 * k - (l - 1))).collect()
    }

    /// Mean symbol energy of the unnormalized grid.
    pub fn symbol_energy(self) -> f64 {
        match self {
            Self::Bpsk => 1.0,
            Self::Qpsk => 2.0,
            Self::Qam16 => 10.0,
            Self::Qam64 => 42.0,
        }
    }

    pub fn size(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Nearest alphabet point on one axis; midpoints go to the smaller value.
    pub fn quantize_axis(self, x: f64) -> f64 {
        let max = (self.levels() - 1) as f64;
        // Odd grid: candidates are 2k+1. Midpoints sit on even integers.
        let k = ((x - 1.0) / 2.0).ceil();
        let q = 2.0 * k + 1.0;
        let q = if (x - (q - 2.0)).abs() <= (q - x).abs() {
            q - 2.0
        } else {
            q
        };
        q.clamp(-max, max)
    }

    pub fn quantize(self, v: Complex64) -> Complex64 {
        match self {
            Self::Bpsk => Complex64::new(self.quantize_axis(v.re), 0.0),
            _ => Complex64::new(self.quantize_axis(v.re), self.quantize_axis(v.im)),
        }
    }

    fn on_axis(self, x: f64) -> bool {
        self.axis_alphabet().contains(&x)
    }

    pub fn contains(self, v: Complex64) -> bool {
        match self {
            Self::Bpsk => self.on_axis(v.re) && v.im == 0.0,
            _ => self.on_axis(v.re) && self.on_axis(v.im),
        }
    }

    /// Spins whose weighted sum equals the axis value `x` (an alphabet point).
    pub fn axis_value_to_spins(self, x: f64) -> Result<Vec<i8>> {
        if !self.on_axis(x) {
            return Err(Error::OffAlphabet { re: x, im: 0.0 });
        }
        let mut rest = x;
        let spins = self
            .axis_coefficients()
            .iter()
            .map(|&c| {
                let s: i8 = if rest > 0.0 { 1 } else { -1 };
                rest -= f64::from(c) * f64::from(s);
                s
            })
            .collect();
        Ok(spins)
    }

    fn axis_value(self, spins: &[i8]) -> f64 {
        self.axis_coefficients()
            .iter()
            .zip(spins)
            .map(|(&c, &s)| f64::from(c * i32::from(s)))
            .sum()
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bpsk => "bpsk",
            Self::Qpsk => "qpsk",
            Self::Qam16 => "16qam",
            Self::Qam64 => "64qam",
        })
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" | "4qam" => Ok(Self::Qpsk),
            "16qam" | "qam16" => Ok(Self::Qam16),
            "64qam" | "qam64" => Ok(Self::Qam64),
            other => Err(Error::InvalidArgument(format!("unknown constellation {other:?}"))),
        }
    }
}

/// Maps spins to symbols for one constellation and user count.
pub fn spins_to_symbols(constellation: Constellation, config: &SpinConfig) -> Result<Vec<Complex64>> {
    let b = constellation.bits_per_symbol();
    if config.is_empty() || config.len() % b != 0 {
        return Err(Error::DimensionMismatch {
            expected: b * (config.len() / b).max(1),
            got: config.len(),
        });
    }
    let per_axis = constellation.spins_per_axis();
    Ok(config
        .as_slice()
        .chunks(b)
        .map(|user| {
            let re = constellation.axis_value(&user[..per_axis]);
            let im = if constellation.axes() == 2 {
                constellation.axis_value(&user[per_axis..])
            } else {
                0.0
            };
            Complex64::new(re, im)
        })
        .collect())
}

/// Inverse of [`spins_to_symbols`].
pub fn symbols_to_spins(constellation: Constellation, symbols: &[Complex64]) -> Result<SpinConfig> {
    let mut spins = Vec::with_capacity(symbols.len() * constellation.bits_per_symbol());
    for v in symbols {
        if !constellation.contains(*v) {
            return Err(Error::OffAlphabet { re: v.re, im: v.im });
        }
        spins.extend(constellation.axis_value_to_spins(v.re)?);
        if constellation.axes() == 2 {
            spins.extend(constellation.axis_value_to_spins(v.im)?);
        }
    }
    SpinConfig::new(spins)
}

/// `+1 -> 1`, `-1 -> 0`.
pub fn spins_to_bits(config: &SpinConfig) -> Vec<u8> {
    config.as_slice().iter().map(|&s| u8::from(s > 0)).collect()
}

pub fn bits_to_spins(bits: &[u8]) -> Result<SpinConfig> {
    SpinConfig::new(bits.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect())
}

/// A detection problem `y = H v + n` with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionInstance {
    pub n_users: usize,
    pub n_rx: usize,
    pub constellation: Constellation,
    pub channel: DMatrix<Complex64>,
    pub observation: DVector<Complex64>,
    pub truth_spins: SpinConfig,
    /// `f64::INFINITY` means noise-free.
    pub snr_db: f64,
    pub seed: u64,
}

impl DetectionInstance {
    pub fn n_vars(&self) -> usize {
        self.n_users * self.constellation.bits_per_symbol()
    }

    pub fn truth_symbols(&self) -> Vec<Complex64> {
        spins_to_symbols(self.constellation, &self.truth_spins)
            .expect("instance invariant: truth spins match the constellation")
    }

    /// Noise variance per complex receive dimension implied by `snr_db`.
    pub fn noise_variance(&self) -> f64 {
        noise_variance(self.n_users, self.constellation, self.snr_db)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_rx < self.n_users {
            return Err(Error::InvalidArgument(format!(
                "need n_rx >= n_users >= 1, got {} x {}",
                self.n_users, self.n_rx
            )));
        }
        if self.channel.shape() != (self.n_rx, self.n_users) {
            return Err(Error::DimensionMismatch {
                expected: self.n_rx * self.n_users,
                got: self.channel.len(),
            });
        }
        if self.observation.len() != self.n_rx {
            return Err(Error::DimensionMismatch {
                expected: self.n_rx,
                got: self.observation.len(),
            });
        }
        if self.truth_spins.len() != self.n_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars(),
                got: self.truth_spins.len(),
            });
        }
        if self
            .channel
            .iter()
            .chain(self.observation.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite channel or observation entry".into()));
        }
        Ok(())
    }

    /// `‖y − H v‖²`.
    pub fn ml_objective(&self, symbols: &[Complex64]) -> Result<f64> {
        if symbols.len() != self.n_users {
            return Err(Error::DimensionMismatch {
                expected: self.n_users,
                got: symbols.len(),
            });
        }
        if let Some(v) = symbols.iter().find(|v| !self.constellation.contains(**v)) {
            return Err(Error::OffAlphabet { re: v.re, im: v.im });
        }
        Ok(self.residual_norm_sqr(symbols))
    }

    /// Objective without the alphabet check.
    pub(crate) fn residual_norm_sqr(&self, symbols: &[Complex64]) -> f64 {
        (0..self.n_rx)
            .map(|r| {
                let hv: Complex64 = (0..self.n_users).map(|t| self.channel[(r, t)] * symbols[t]).sum();
                (self.observation[r] - hv).norm_sqr()
            })
            .sum()
    }

    /// Real-valued system restricted to the data-carrying axes.
    pub fn real_system(&self) -> RealSystem {
        RealSystem::new(self)
    }
}

fn noise_variance(n_users: usize, constellation: Constellation, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        n_users as f64 * constellation.symbol_energy() / 10f64.powf(snr_db / 10.0)
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Draws an i.i.d. Rayleigh channel, uniform transmit bits and AWGN.
///
/// The noise variance per complex receive dimension is
/// `σ² = n_users · E_s / 10^(snr_db/10)`; `snr_db = +inf` disables noise.
pub fn generate_instance(
    n_users: usize,
    n_rx: usize,
    constellation: Constellation,
    snr_db: f64,
    seed: u64,
) -> Result<DetectionInstance> {
    if n_users == 0 || n_rx < n_users {
        return Err(Error::InvalidArgument(format!(
            "need n_rx >= n_users >= 1, got {n_users} users and {n_rx} receive antennas"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let channel = DMatrix::from_fn(n_rx, n_users, |_, _| complex_gaussian(&mut rng, 1.0));
    instance_from_channel(channel, constellation, snr_db, seed, &mut rng)
}

/// Builds an instance around a given channel (e.g. a measured trace).
pub fn instance_with_channel(
    channel: DMatrix<Complex64>,
    constellation: Constellation,
    snr_db: f64,
    seed: u64,
) -> Result<DetectionInstance> {
    let mut rng = rng_from_seed(seed);
    instance_from_channel(channel, constellation, snr_db, seed, &mut rng)
}

fn instance_from_channel<R: Rng + ?Sized>(
    channel: DMatrix<Complex64>,
    constellation: Constellation,
    snr_db: f64,
    seed: u64,
    rng: &mut R,
) -> Result<DetectionInstance> {
    let (n_rx, n_users) = channel.shape();
    if n_users == 0 || n_rx < n_users {
        return Err(Error::InvalidArgument(format!(
            "need n_rx >= n_users >= 1, got {n_users} users and {n_rx} receive antennas"
        )));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!("invalid SNR {snr_db} dB")));
    }
    let truth_spins = SpinConfig::random(n_users * constellation.bits_per_symbol(), rng);
    let symbols = spins_to_symbols(constellation, &truth_spins)?;
    let sigma2 = noise_variance(n_users, constellation, snr_db);
    let clean = &channel * DVector::from_vec(symbols);
    let observation = if sigma2 > 0.0 {
        clean.map(|z| z + complex_gaussian(rng, sigma2))
    } else {
        clean
    };
    let instance = DetectionInstance {
        n_users,
        n_rx,
        constellation,
        channel,
        observation,
        truth_spins,
        snr_db,
        seed,
    };
    instance.validate()?;
    Ok(instance)
}

/// Real decomposition `ỹ = M x` over the data-carrying axes.
///
/// Column `k` of `m` corresponds to axis `axes[k] = (user, is_imag)`; the rows
/// are `[Re; Im]` of the receive vector.
#[derive(Debug, Clone)]
pub struct RealSystem {
    pub m: DMatrix<f64>,
    pub y: DVector<f64>,
    pub axes: Vec<(usize, bool)>,
}

impl RealSystem {
    fn new(instance: &DetectionInstance) -> Self {
        let nr = instance.n_rx;
        let mut axes = Vec::new();
        for user in 0..instance.n_users {
            axes.push((user, false));
            if instance.constellation.axes() == 2 {
                axes.push((user, true));
            }
        }
        let m = DMatrix::from_fn(2 * nr, axes.len(), |row, col| {
            let (user, imag) = axes[col];
            let h = instance.channel[(row % nr, user)];
            match (row < nr, imag) {
                (true, false) => h.re,
                (false, false) => h.im,
                (true, true) => -h.im,
                (false, true) => h.re,
            }
        });
        let y = DVector::from_fn(2 * nr, |row, _| {
            let z = instance.observation[row % nr];
            if row < nr {
                z.re
            } else {
                z.im
            }
        });
        Self { m, y, axes }
    }

    /// Complex symbols from per-axis values.
    pub fn to_symbols(&self, n_users: usize, x: &[f64]) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n_users];
        for (&(user, imag), &value) in self.axes.iter().zip(x) {
            if imag {
                v[user].im = value;
            } else {
                v[user].re = value;
            }
        }
        v
    }
}

/// Reduces `min_v ‖y − H v‖²` to an Ising model whose energy plus offset
/// equals the objective for every spin configuration.
///
/// With `M = H̃ T` (real channel times spin-to-axis map), `A = MᵀM` and
/// `b = Mᵀ ỹ`: `g_ij = 2 A_ij`, `f_i = −2 b_i`, `c = ‖ỹ‖² + Σ_i A_ii`.
pub fn ml_to_ising(instance: &DetectionInstance) -> Result<IsingModel> {
    instance.validate()?;
    let sys = instance.real_system();
    let coeffs = instance.constellation.axis_coefficients();
    // Column k of M for spin k: axis column scaled by the spin's coefficient.
    let mut spin_cols = Vec::with_capacity(instance.n_vars());
    for axis in 0..sys.axes.len() {
        for &c in coeffs {
            spin_cols.push(sys.m.column(axis) * f64::from(c));
        }
    }
    let n = spin_cols.len();
    let mut couplings = Vec::with_capacity(n * (n - 1) / 2);
    let mut diag = 0.0;
    for i in 0..n {
        diag += spin_cols[i].norm_squared();
        for j in (i + 1)..n {
            couplings.push(((i, j), 2.0 * spin_cols[i].dot(&spin_cols[j])));
        }
    }
    let fields = spin_cols.iter().map(|col| -2.0 * col.dot(&sys.y)).collect();
    IsingModel::new(n, couplings, fields, sys.y.norm_squared() + diag)
}

#[derive(Serialize, Deserialize)]
struct TraceWire {
    n_rx: usize,
    n_users: usize,
    entries: Vec<[f64; 2]>,
}

/// Writes a channel matrix in the JSON trace format (row-major `[re, im]`).
pub fn write_trace_channel(path: &Path, channel: &DMatrix<Complex64>) -> Result<()> {
    let (n_rx, n_users) = channel.shape();
    let entries = (0..n_rx)
        .flat_map(|r| (0..n_users).map(move |t| (r, t)))
        .map(|(r, t)| [channel[(r, t)].re, channel[(r, t)].im])
        .collect();
    let text = serde_json::to_string(&TraceWire { n_rx, n_users, entries })?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads a channel trace and selects a sub-matrix of receive antennas and
/// users (0-based indices; `None` keeps everything).
pub fn load_trace_channel(
    path: &Path,
    rx_subset: Option<&[usize]>,
    user_subset: Option<&[usize]>,
) -> Result<DMatrix<Complex64>> {
    let text = std::fs::read_to_string(path)?;
    let wire: TraceWire = serde_json::from_str(&text).map_err(|e| Error::Trace(format!("{}: {e}", path.display())))?;
    if wire.entries.len() != wire.n_rx * wire.n_users {
        return Err(Error::Trace(format!(
            "expected {} entries for a {}x{} trace, found {}",
            wire.n_rx * wire.n_users,
            wire.n_rx,
            wire.n_users,
            wire.entries.len()
        )));
    }
    if wire.entries.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Trace("non-finite channel entry".into()));
    }
    let all_rx: Vec<usize> = (0..wire.n_rx).collect();
    let all_users: Vec<usize> = (0..wire.n_users).collect();
    let rows = rx_subset.unwrap_or(&all_rx);
    let cols = user_subset.unwrap_or(&all_users);
    for (&idx, len) in rows
        .iter()
        .map(|i| (i, wire.n_rx))
        .chain(cols.iter().map(|i| (i, wire.n_users)))
    {
        if idx >= len {
            return Err(Error::IndexOutOfRange { index: idx, len });
        }
    }
    Ok(DMatrix::from_fn(rows.len(), cols.len(), |r, t| {
        let [re, im] = wire.entries[rows[r] * wire.n_users + cols[t]];
        Complex64::new(re, im)
    }))
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    n_users: usize,
    n_rx: usize,
    constellation: Constellation,
    /// Row-major `n_rx × n_users`.
    channel: Vec<[f64; 2]>,
    observation: Vec<[f64; 2]>,
    truth_spins: SpinConfig,
    /// `null` encodes the noise-free case.
    snr_db: Option<f64>,
    seed: u64,
}

impl Serialize for DetectionInstance {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let channel = (0..self.n_rx)
            .flat_map(|r| (0..self.n_users).map(move |t| (r, t)))
            .map(|(r, t)| [self.channel[(r, t)].re, self.channel[(r, t)].im])
            .collect();
        InstanceWire {
            n_users: self.n_users,
            n_rx: self.n_rx,
            constellation: self.constellation,
            channel,
            observation: self.observation.iter().map(|z| [z.re, z.im]).collect(),
            truth_spins: self.truth_spins.clone(),
            snr_db: self.snr_db.is_finite().then_some(self.snr_db),
            seed: self.seed,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DetectionInstance {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = InstanceWire::deserialize(deserializer)?;
        if w.channel.len() != w.n_rx * w.n_users {
            return Err(D::Error::custom("channel entry count does not match n_rx * n_users"));
        }
        let instance = DetectionInstance {
            n_users: w.n_users,
            n_rx: w.n_rx,
            constellation: w.constellation,
            channel: DMatrix::from_fn(w.n_rx, w.n_users, |r, t| {
                let [re, im] = w.channel[r * w.n_users + t];
                Complex64::new(re, im)
            }),
            observation: DVector::from_iterator(
                w.observation.len(),
                w.observation.iter().map(|&[re, im]| Complex64::new(re, im)),
            ),
            truth_spins: w.truth_spins,
            snr_db: w.snr_db.unwrap_or(f64::INFINITY),
            seed: w.seed,
        };
        instance.validate().map_err(D::Error::custom)?;
        Ok(instance)
    }
}
