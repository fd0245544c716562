//! Occurrence tables over solver outputs and spinwise detection confidence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::SpinConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub energy: f64,
    pub count: usize,
    pub spins: SpinConfig,
}

/// Unique outputs sorted by energy (ties: lexicographic spins), with counts.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    entries: Vec<TableEntry>,
    n_total: usize,
}

impl OutputTable {
    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn n_unique(&self) -> usize {
        self.entries.len()
    }

    pub fn best(&self) -> &TableEntry {
        &self.entries[0]
    }
}

/// Deduplicates and sorts raw `(config, energy)` outputs.
pub fn tabulate<'a, I>(raw: I) -> Result<OutputTable>
where
    I: IntoIterator<Item = (&'a SpinConfig, f64)>,
{
    let mut seen: BTreeMap<&SpinConfig, (f64, usize)> = BTreeMap::new();
    let mut n_total = 0;
    let mut len = None;
    for (config, energy) in raw {
        match len {
            None => len = Some(config.len()),
            Some(l) if l != config.len() => {
                return Err(Error::DimensionMismatch {
                    expected: l,
                    got: config.len(),
                })
            }
            _ => {}
        }
        n_total += 1;
        let slot = seen.entry(config).or_insert((energy, 0));
        if (slot.0 - energy).abs() > 1e-9 * (1.0 + slot.0.abs()) {
            return Err(Error::InconsistentEnergy {
                first: slot.0,
                second: energy,
            });
        }
        slot.1 += 1;
    }
    if n_total == 0 {
        return Err(Error::Empty("no solver outputs to tabulate"));
    }
    // BTreeMap iteration is already lexicographic, and the sort is stable.
    let mut entries: Vec<TableEntry> = seen
        .into_iter()
        .map(|(spins, (energy, count))| TableEntry {
            energy,
            count,
            spins: spins.clone(),
        })
        .collect();
    entries.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(OutputTable { entries, n_total })
}

/// The Ising solution filter: configuration with the minimum energy.
pub fn filter_best(table: &OutputTable) -> &SpinConfig {
    &table.best().spins
}

/// Spinwise confidence: occurrence- and energy-weighted agreement of every
/// unique output with the best output at each position.
///
/// Entry `i` is weighted by `O_i |H_i / H_1|`. When `H_1 = 0` the ratio is
/// undefined and every weight falls back to 1.
pub fn confidence(table: &OutputTable) -> Vec<f64> {
    let best = table.best();
    let h1 = best.energy;
    let weights: Vec<f64> = table
        .entries
        .iter()
        .map(|e| {
            let ratio = if h1 == 0.0 { 1.0 } else { (e.energy / h1).abs() };
            e.count as f64 * ratio
        })
        .collect();
    let total: f64 = weights.iter().sum();
    (0..best.spins.len())
        .map(|j| {
            let s1 = best.spins.as_slice()[j];
            let agree: f64 = table
                .entries
                .iter()
                .zip(&weights)
                .filter(|(e, _)| e.spins.as_slice()[j] == s1)
                .map(|(_, w)| w)
                .sum();
            if total > 0.0 {
                agree / total
            } else {
                // every weight vanished: only possible when all H_i = 0 except H_1
                1.0
            }
        })
        .collect()
}

/// Exported soft output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftOutput {
    pub best: SpinConfig,
    pub confidence: Vec<f64>,
    pub table: Vec<TableEntry>,
}

impl SoftOutput {
    pub fn from_table(table: &OutputTable) -> Self {
        Self {
            best: filter_best(table).clone(),
            confidence: confidence(table),
            table: table.entries.clone(),
        }
    }
}
