//! Reference detectors: exhaustive ML, sphere decoding, zero forcing (with
//! and without successive interference cancellation), the fixed-complexity
//! sphere decoder and plain simulated annealing.

use std::time::Duration;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::ising::SpinConfig;
use crate::mimo::{symbols_to_spins, DetectionInstance};

mod anneal;
mod exhaustive;
mod fcsd;
mod linear;
mod sphere;

pub use anneal::{sa_batch, sa_run, SaParams};
pub use exhaustive::{brute_force_ml, BRUTE_FORCE_LIMIT};
pub use fcsd::fcsd;
pub use linear::{zero_forcing, zf_sic};
pub use sphere::{sphere_decode, sphere_decode_with, SphereOptions};

/// Hard decision of a reference detector.
#[derive(Debug, Clone, Serialize)]
pub struct DetectorResult {
    #[serde(serialize_with = "crate::serde_util::complex_vec")]
    pub symbols: Vec<Complex64>,
    pub spins: SpinConfig,
    /// `‖y − H v‖²` recomputed from `symbols`.
    pub objective: f64,
    #[serde(skip)]
    pub latency: Duration,
    /// Tree nodes expanded, for tree-search detectors.
    pub visited_nodes: Option<u64>,
    /// Set when a ridge term was added to a rank-deficient channel.
    pub regularized: bool,
}

impl DetectorResult {
    pub(crate) fn from_symbols(
        instance: &DetectionInstance,
        symbols: Vec<Complex64>,
        latency: Duration,
    ) -> Result<Self> {
        let spins = symbols_to_spins(instance.constellation, &symbols)?;
        let objective = instance.ml_objective(&symbols)?;
        Ok(Self {
            symbols,
            spins,
            objective,
            latency,
            visited_nodes: None,
            regularized: false,
        })
    }
}

/// Upper-triangular system `‖z − R x‖² + tail` from a QR factorization of
/// the real channel with permuted columns. Level `k` of the search tree is
/// row/column `k`; searches run from the last level to the first.
pub(crate) struct Triangular {
    pub r: nalgebra::DMatrix<f64>,
    pub z: nalgebra::DVector<f64>,
    /// `perm[k]` is the real-system column placed at level `k`.
    pub perm: Vec<usize>,
    pub regularized: bool,
}

impl Triangular {
    pub fn new(sys: &crate::mimo::RealSystem, perm: Vec<usize>, allow_ridge: bool) -> Result<Self> {
        let k = perm.len();
        let rows = sys.m.nrows();
        let mut m = nalgebra::DMatrix::from_fn(rows, k, |r, c| sys.m[(r, perm[c])]);
        let mut y = sys.y.clone();
        let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
        let mut regularized = false;
        if !full_rank(&m, scale) {
            if !allow_ridge {
                return Err(crate::error::Error::RankDeficient);
            }
            // Append sqrt(λ)·I rows: ‖ỹ − Mx‖² + λ‖x‖².
            let ridge = 1e-9f64.sqrt();
            m = m.resize_vertically(rows + k, 0.0);
            for c in 0..k {
                m[(rows + c, c)] = ridge;
            }
            y = y.resize_vertically(rows + k, 0.0);
            regularized = true;
        }
        let qr = m.qr();
        let r = qr.r();
        let z = qr.q().transpose() * y;
        Ok(Self {
            r,
            z,
            perm,
            regularized,
        })
    }

    pub fn levels(&self) -> usize {
        self.perm.len()
    }

    /// Unconstrained estimate at level `k` given decisions at levels `> k`.
    #[inline]
    pub fn center(&self, k: usize, x: &[f64]) -> f64 {
        let mut acc = self.z[k];
        for j in (k + 1)..self.levels() {
            acc -= self.r[(k, j)] * x[j];
        }
        acc / self.r[(k, k)]
    }
}

pub(crate) fn full_rank(m: &nalgebra::DMatrix<f64>, scale: f64) -> bool {
    if m.ncols() > m.nrows() {
        return false;
    }
    let r = m.clone().qr().r();
    (0..r.ncols()).all(|k| r[(k, k)].abs() > 1e-10 * scale)
}
