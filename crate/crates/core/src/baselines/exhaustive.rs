use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;

use super::DetectorResult;
use crate::error::{Error, Result};
use crate::ising::SpinConfig;
use crate::mimo::{spins_to_symbols, DetectionInstance};

/// Largest search space `|O|^N_t` the exhaustive detector accepts.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 24;

/// Exhaustive ML search over every symbol vector.
///
/// Candidates are visited in lexicographic spin order and only a strictly
/// better objective replaces the incumbent, so ties resolve to the
/// lexicographically smallest spin configuration.
pub fn brute_force_ml(instance: &DetectionInstance) -> Result<DetectorResult> {
    let start = Instant::now();
    let con = instance.constellation;
    let size = con.size() as u64;
    let candidates = (size as f64).powi(instance.n_users as i32);
    if candidates > BRUTE_FORCE_LIMIT as f64 {
        return Err(Error::SearchSpaceTooLarge {
            candidates,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    // Per-user alphabet in lexicographic spin order, and the matching
    // contributions h_n v for every symbol.
    let b = con.bits_per_symbol();
    let user_symbols: Vec<Complex64> = (0..size)
        .map(|idx| spins_to_symbols(con, &SpinConfig::from_index(b, idx)).map(|v| v[0]))
        .collect::<Result<_>>()?;
    let contributions: Vec<Vec<DVector<Complex64>>> = (0..instance.n_users)
        .map(|u| user_symbols.iter().map(|&v| instance.channel.column(u) * v).collect())
        .collect();

    let nt = instance.n_users;
    let mut digits = vec![0usize; nt];
    // partial[d] = y − Σ_{n<d} h_n v_n
    let mut partial: Vec<DVector<Complex64>> = vec![instance.observation.clone(); nt + 1];
    for d in 0..nt {
        partial[d + 1] = &partial[d] - &contributions[d][0];
    }
    let mut best_obj = f64::INFINITY;
    let mut best_digits = digits.clone();
    loop {
        let obj = partial[nt].norm_squared();
        if obj < best_obj {
            best_obj = obj;
            best_digits.copy_from_slice(&digits);
        }
        // odometer: last user varies fastest
        let mut d = nt;
        loop {
            if d == 0 {
                let symbols = best_digits.iter().map(|&k| user_symbols[k]).collect();
                return DetectorResult::from_symbols(instance, symbols, start.elapsed());
            }
            d -= 1;
            digits[d] += 1;
            if digits[d] < size as usize {
                break;
            }
            digits[d] = 0;
        }
        for k in d..nt {
            partial[k + 1] = &partial[k] - &contributions[k][digits[k]];
        }
    }
}
