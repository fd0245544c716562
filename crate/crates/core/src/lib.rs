//! MIMO maximum-likelihood detection as Ising energy minimization.
//!
//! A detection instance is reduced to an [`IsingModel`] whose energy plus
//! offset equals the Euclidean ML objective, solved by repeated two-replica
//! parallel-tempering runs ([`pmis`]), post-processed into hard and soft
//! decisions ([`soft`], [`two_round`]) and compared against exact and linear
//! detectors ([`baselines`]) by the campaign driver in [`harness`].

pub mod baselines;
pub mod error;
pub mod harness;
pub mod ising;
pub mod mimo;
pub mod pmis;
pub mod rng;
mod serde_util;
pub mod soft;
pub mod two_round;

pub use baselines::{DetectorResult, SaParams};
pub use error::{Error, Result};
pub use harness::{Detector, MetricsReport, Scenario};
pub use ising::{ClampResult, IsingModel, SpinConfig};
pub use mimo::{generate_instance, ml_to_ising, Constellation, DetectionInstance};
pub use pmis::{pmis_run, run_batch, RunOutput, Scaling, SolverParams};
pub use soft::{OutputTable, SoftOutput};
pub use two_round::{two_round_detect, PreDecision, RoundReport};
