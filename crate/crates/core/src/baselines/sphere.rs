use std::time::Instant;

use super::{DetectorResult, Triangular};
use crate::error::Result;
use crate::mimo::DetectionInstance;

#[derive(Debug, Clone, Copy)]
pub struct SphereOptions {
    /// Add a `1e-9·I` ridge when the real channel is rank deficient instead
    /// of failing.
    pub allow_ridge: bool,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self { allow_ridge: true }
    }
}

/// Exact ML detection by depth-first Schnorr-Euchner sphere decoding.
pub fn sphere_decode(instance: &DetectionInstance) -> Result<DetectorResult> {
    sphere_decode_with(instance, SphereOptions::default())
}

pub fn sphere_decode_with(instance: &DetectionInstance, options: SphereOptions) -> Result<DetectorResult> {
    let start = Instant::now();
    let sys = instance.real_system();
    let k = sys.axes.len();
    let tri = Triangular::new(&sys, (0..k).collect(), options.allow_ridge)?;
    let alphabet = instance.constellation.axis_alphabet();

    let mut search = Search {
        tri: &tri,
        alphabet: &alphabet,
        x: vec![0.0; k],
        best_metric: f64::INFINITY,
        best_x: vec![0.0; k],
        visited: 0,
        order: vec![Vec::with_capacity(alphabet.len()); k],
    };
    search.descend(k - 1, 0.0);

    let mut x = vec![0.0; k];
    for (level, &col) in tri.perm.iter().enumerate() {
        x[col] = search.best_x[level];
    }
    let visited = search.visited;
    let symbols = sys.to_symbols(instance.n_users, &x);
    let mut result = DetectorResult::from_symbols(instance, symbols, start.elapsed())?;
    result.visited_nodes = Some(visited);
    result.regularized = tri.regularized;
    Ok(result)
}

struct Search<'a> {
    tri: &'a Triangular,
    alphabet: &'a [f64],
    x: Vec<f64>,
    best_metric: f64,
    best_x: Vec<f64>,
    visited: u64,
    /// Scratch buffers for child ordering, one per level.
    order: Vec<Vec<(f64, f64)>>,
}

impl Search<'_> {
    fn descend(&mut self, level: usize, partial: f64) {
        let c = self.tri.center(level, &self.x);
        let rkk = self.tri.r[(level, level)];
        let mut children = std::mem::take(&mut self.order[level]);
        children.clear();
        children.extend(self.alphabet.iter().map(|&a| {
            let d = rkk * (a - c);
            (partial + d * d, a)
        }));
        // nearest first; equal metrics keep alphabet order
        children.sort_by(|l, r| l.0.total_cmp(&r.0));
        for &(metric, a) in &children {
            if metric >= self.best_metric {
                break;
            }
            self.visited += 1;
            self.x[level] = a;
            if level == 0 {
                self.best_metric = metric;
                self.best_x.copy_from_slice(&self.x);
            } else {
                self.descend(level - 1, metric);
            }
        }
        self.order[level] = children;
    }
}
