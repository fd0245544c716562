//! Shared fixtures for the criterion benches.

use ising_mimo::{generate_instance, ml_to_ising, Constellation, DetectionInstance, IsingModel};

/// A fixed instance and its Ising model.
pub fn fixture(
    n_users: usize,
    n_rx: usize,
    constellation: Constellation,
    snr_db: f64,
) -> (DetectionInstance, IsingModel) {
    let inst = generate_instance(n_users, n_rx, constellation, snr_db, 0xbe7c).expect("valid fixture");
    let model = ml_to_ising(&inst).expect("valid fixture");
    (inst, model)
}
