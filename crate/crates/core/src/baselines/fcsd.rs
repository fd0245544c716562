use std::time::Instant;

use nalgebra::DMatrix;

use super::{DetectorResult, Triangular};
use crate::error::{Error, Result};
use crate::mimo::DetectionInstance;

/// Fixed-complexity sphere decoder.
///
/// Users are detected in order of decreasing pseudo-inverse row norm (worst
/// channel first). The first `n_fs` users are enumerated over the whole
/// alphabet; every later level takes the single child with the smallest
/// partial distance. The best of the `|O|^n_fs` leaves by ML objective is
/// returned.
///
/// The detection order does not depend on `n_fs`, so the candidate set for
/// `n_fs` is contained in the set for `n_fs + 1`.
pub fn fcsd(instance: &DetectionInstance, n_fs: usize) -> Result<DetectorResult> {
    let start = Instant::now();
    if n_fs > instance.n_users {
        return Err(Error::InvalidArgument(format!(
            "n_fs = {n_fs} exceeds the number of users {}",
            instance.n_users
        )));
    }
    let sys = instance.real_system();
    let axes = instance.constellation.axes();
    let gram = sys.m.transpose() * &sys.m;
    let norms = match gram.clone().cholesky() {
        Some(c) => c.inverse().diagonal(),
        None => {
            // rank deficient: fall back to the ridge-regularized Gram matrix
            let k = gram.nrows();
            (gram + DMatrix::<f64>::identity(k, k) * 1e-9)
                .cholesky()
                .ok_or(Error::RankDeficient)?
                .inverse()
                .diagonal()
        }
    };
    let mut users: Vec<usize> = (0..instance.n_users).collect();
    let user_norm = |u: usize| (0..axes).map(|a| norms[u * axes + a]).sum::<f64>();
    users.sort_by(|&a, &b| user_norm(b).total_cmp(&user_norm(a)).then(a.cmp(&b)));

    // detection order of real columns; the first detected sits at the top level
    let detect: Vec<usize> = users
        .iter()
        .flat_map(|&u| (0..axes).map(move |a| u * axes + a))
        .collect();
    let k = detect.len();
    let perm: Vec<usize> = (0..k).map(|level| detect[k - 1 - level]).collect();
    let tri = Triangular::new(&sys, perm, true)?;

    let mut search = FixedSearch {
        tri: &tri,
        instance,
        sys: &sys,
        alphabet: instance.constellation.axis_alphabet(),
        con: instance.constellation,
        full_levels: n_fs * axes,
        x: vec![0.0; k],
        best: None,
        leaves: 0,
    };
    search.descend(k - 1, 0);

    let (_, x) = search.best.expect("at least one leaf is always reached");
    let leaves = search.leaves;
    let mut orig = vec![0.0; k];
    for (level, &col) in tri.perm.iter().enumerate() {
        orig[col] = x[level];
    }
    let symbols = sys.to_symbols(instance.n_users, &orig);
    let mut result = DetectorResult::from_symbols(instance, symbols, start.elapsed())?;
    result.visited_nodes = Some(leaves);
    result.regularized = tri.regularized;
    Ok(result)
}

struct FixedSearch<'a> {
    tri: &'a Triangular,
    instance: &'a DetectionInstance,
    sys: &'a crate::mimo::RealSystem,
    alphabet: Vec<f64>,
    con: crate::mimo::Constellation,
    full_levels: usize,
    x: Vec<f64>,
    best: Option<(f64, Vec<f64>)>,
    leaves: u64,
}

impl FixedSearch<'_> {
    fn descend(&mut self, level: usize, depth: usize) {
        let choices: Vec<f64> = if depth < self.full_levels {
            self.alphabet.clone()
        } else {
            vec![self.con.quantize_axis(self.tri.center(level, &self.x))]
        };
        for a in choices {
            self.x[level] = a;
            if level == 0 {
                self.leaf();
            } else {
                self.descend(level - 1, depth + 1);
            }
        }
    }

    fn leaf(&mut self) {
        self.leaves += 1;
        let mut orig = vec![0.0; self.x.len()];
        for (level, &col) in self.tri.perm.iter().enumerate() {
            orig[col] = self.x[level];
        }
        let symbols = self.sys.to_symbols(self.instance.n_users, &orig);
        let obj = self.instance.residual_norm_sqr(&symbols);
        if self.best.as_ref().is_none_or(|(b, _)| obj < *b) {
            self.best = Some((obj, self.x.clone()));
        }
    }
}
