use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::DetectorResult;
use crate::error::{Error, Result};
use crate::mimo::{Constellation, DetectionInstance};

/// `(MᵀM)⁻¹` for the selected real columns, or `None` when singular.
fn gram_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    if !super::full_rank(m, scale) {
        return None;
    }
    (m.transpose() * m).cholesky().map(|c| c.inverse())
}

fn quantize_all(con: Constellation, x: &DVector<f64>) -> Vec<f64> {
    x.iter().map(|&v| con.quantize_axis(v)).collect()
}

/// Zero forcing: least-squares estimate on the real system, quantized per
/// axis to the nearest alphabet point.
pub fn zero_forcing(instance: &DetectionInstance) -> Result<DetectorResult> {
    let start = Instant::now();
    let sys = instance.real_system();
    let gram_inv = gram_inverse(&sys.m).ok_or(Error::RankDeficient)?;
    let estimate = gram_inv * sys.m.transpose() * &sys.y;
    let x = quantize_all(instance.constellation, &estimate);
    let symbols = sys.to_symbols(instance.n_users, &x);
    DetectorResult::from_symbols(instance, symbols, start.elapsed())
}

/// Ordered successive interference cancellation on top of zero forcing.
///
/// At each stage the remaining user with the smallest pseudo-inverse row
/// norm (highest post-equalization SNR) is detected, quantized and its
/// contribution subtracted from the observation before the channel is
/// deflated.
pub fn zf_sic(instance: &DetectionInstance) -> Result<DetectorResult> {
    let start = Instant::now();
    let con = instance.constellation;
    let sys = instance.real_system();
    let mut remaining: Vec<usize> = (0..instance.n_users).collect();
    let mut y = sys.y.clone();
    let mut x = vec![0.0; sys.axes.len()];
    let columns_of = |user: usize| -> Vec<usize> {
        sys.axes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.0 == user)
            .map(|(c, _)| c)
            .collect()
    };

    while !remaining.is_empty() {
        let cols: Vec<usize> = remaining.iter().flat_map(|&u| columns_of(u)).collect();
        let m = sys.m.select_columns(&cols);
        let gram_inv = gram_inverse(&m).ok_or(Error::RankDeficient)?;
        // row norm² of the pseudo-inverse = diagonal of (MᵀM)⁻¹
        let axes = con.axes();
        let (pick, _) = remaining
            .iter()
            .enumerate()
            .map(|(p, _)| {
                (
                    p,
                    (0..axes).map(|a| gram_inv[(p * axes + a, p * axes + a)]).sum::<f64>(),
                )
            })
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let estimate = &gram_inv * m.transpose() * &y;
        let user = remaining.remove(pick);
        for (a, &col) in columns_of(user).iter().enumerate() {
            let value = con.quantize_axis(estimate[pick * axes + a]);
            x[col] = value;
            y -= sys.m.column(col) * value;
        }
    }
    let symbols = sys.to_symbols(instance.n_users, &x);
    DetectorResult::from_symbols(instance, symbols, start.elapsed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mimo::{generate_instance, instance_with_channel};
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    #[test]
    fn noise_free_recovery() {
        for con in Constellation::ALL {
            let inst = generate_instance(4, 8, con, f64::INFINITY, 13).unwrap();
            assert_eq!(zero_forcing(&inst).unwrap().spins, inst.truth_spins);
            assert_eq!(zf_sic(&inst).unwrap().spins, inst.truth_spins);
        }
    }

    #[test]
    fn scaled_identity_is_per_user_slicing() {
        let channel = DMatrix::from_fn(3, 3, |r, t| {
            if r == t {
                Complex64::new(2.0, 0.0)
            } else {
                Complex64::ZERO
            }
        });
        let inst = instance_with_channel(channel, Constellation::Qam16, 5.0, 21).unwrap();
        let zf = zero_forcing(&inst).unwrap();
        for (u, v) in zf.symbols.iter().enumerate() {
            let scaled = inst.observation[u] / 2.0;
            assert_eq!(*v, Constellation::Qam16.quantize(scaled));
        }
    }

    #[test]
    fn single_user_sic_equals_zf() {
        for seed in 0..50 {
            let inst = generate_instance(1, 3, Constellation::Qam16, 3.0, seed).unwrap();
            assert_eq!(zero_forcing(&inst).unwrap().symbols, zf_sic(&inst).unwrap().symbols);
        }
    }

    #[test]
    fn singular_channel_is_an_error() {
        let channel = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        let inst = instance_with_channel(channel, Constellation::Qpsk, 10.0, 1).unwrap();
        assert!(matches!(zero_forcing(&inst), Err(Error::RankDeficient)));
        assert!(matches!(zf_sic(&inst), Err(Error::RankDeficient)));
    }
}
