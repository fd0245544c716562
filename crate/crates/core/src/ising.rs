//! Ising problem representation and energy arithmetic.
//!
//! The energy of a configuration `s ∈ {-1, +1}^n` is
//!
//! ```text
//! H(s) = Σ_{i<j} g_ij s_i s_j + Σ_i f_i s_i
//! ```
//!
//! Couplings are stored once per unordered pair in upper-triangular form.
//! Indices are 0-based in the Rust API; the JSON wire format is 1-based.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A ±1 assignment to the spin variables of a model.
///
/// Ordering is lexicographic with `-1 < +1`, which is the tie-break order
/// used by the output table and the exhaustive detector.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin(bad as i64));
        }
        Ok(Self(spins))
    }

    /// All spins set to `value`.
    pub fn uniform(n: usize, value: i8) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    /// The `index`-th configuration in lexicographic order (`-1 < +1`, first
    /// spin most significant). `index` must be below `2^n`.
    pub fn from_index(n: usize, index: u64) -> Self {
        debug_assert!(n >= 64 || index < (1u64 << n));
        Self(
            (0..n)
                .map(|k| if (index >> (n - 1 - k)) & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }

    pub fn get(&self, index: usize) -> Option<i8> {
        self.0.get(index).copied()
    }

    pub fn flipped(&self, index: usize) -> Self {
        let mut spins = self.0.clone();
        spins[index] = -spins[index];
        Self(spins)
    }

    /// Global spin flip `s -> -s`.
    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }

    /// Number of positions where the two configurations differ.
    pub fn hamming(&self, other: &SpinConfig) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Debug for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for s in &self.0 {
            f.write_str(if *s > 0 { "+" } else { "-" })?;
        }
        f.write_str("]")
    }
}

impl Serialize for SpinConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpinConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spins = Vec::<i8>::deserialize(deserializer)?;
        SpinConfig::new(spins).map_err(serde::de::Error::custom)
    }
}

/// Couplings, local fields and a constant offset over `n_vars` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n_vars: usize,
    couplings: BTreeMap<(usize, usize), f64>,
    fields: Vec<f64>,
    offset: f64,
}

impl IsingModel {
    /// Builds a model from 0-based `(i, j)` pairs with `i < j`.
    pub fn new<I>(n_vars: usize, couplings: I, fields: Vec<f64>, offset: f64) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        if n_vars == 0 {
            return Err(Error::InvalidModel("model needs at least one spin".into()));
        }
        if fields.len() != n_vars {
            return Err(Error::DimensionMismatch {
                expected: n_vars,
                got: fields.len(),
            });
        }
        if let Some(f) = fields.iter().find(|f| !f.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite field {f}")));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidModel(format!("non-finite offset {offset}")));
        }
        let mut map = BTreeMap::new();
        for ((i, j), g) in couplings {
            if i >= j {
                return Err(Error::InvalidModel(format!(
                    "coupling ({i}, {j}) is not strictly upper-triangular"
                )));
            }
            if j >= n_vars {
                return Err(Error::IndexOutOfRange { index: j, len: n_vars });
            }
            if !g.is_finite() {
                return Err(Error::InvalidModel(format!("non-finite coupling g({i},{j}) = {g}")));
            }
            if map.insert((i, j), g).is_some() {
                return Err(Error::InvalidModel(format!("duplicate coupling ({i}, {j})")));
            }
        }
        Ok(Self {
            n_vars,
            couplings: map,
            fields,
            offset,
        })
    }

    /// A model with all coefficients zero.
    pub fn zero(n_vars: usize) -> Result<Self> {
        Self::new(n_vars, std::iter::empty(), vec![0.0; n_vars], 0.0)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Coupling of the unordered pair `{i, j}`, zero when absent.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.couplings.get(&key).copied().unwrap_or(0.0)
    }

    /// Stored couplings in canonical `(i, j)` order.
    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &g)| (k, g))
    }

    pub fn n_couplings(&self) -> usize {
        self.couplings.len()
    }

    /// Dense symmetric coupling matrix in row-major order, zero diagonal.
    pub fn dense_couplings(&self) -> Vec<f64> {
        let n = self.n_vars;
        let mut g = vec![0.0; n * n];
        for (&(i, j), &v) in &self.couplings {
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
        g
    }

    fn check_len(&self, config: &SpinConfig) -> Result<()> {
        if config.len() != self.n_vars {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars,
                got: config.len(),
            });
        }
        Ok(())
    }

    /// Energy without the offset, summed term by term over stored pairs.
    pub fn energy(&self, config: &SpinConfig) -> Result<f64> {
        self.check_len(config)?;
        let s = config.as_slice();
        let pairs: f64 = self
            .couplings
            .iter()
            .map(|(&(i, j), &g)| g * f64::from(s[i]) * f64::from(s[j]))
            .sum();
        let linear: f64 = self.fields.iter().zip(s).map(|(f, &si)| f * f64::from(si)).sum();
        Ok(pairs + linear)
    }

    pub fn energy_with_offset(&self, config: &SpinConfig) -> Result<f64> {
        Ok(self.energy(config)? + self.offset)
    }

    /// Energy through the dense form `s·(G·s + 2f)/2`.
    pub fn energy_matrix_form(&self, config: &SpinConfig) -> Result<f64> {
        self.check_len(config)?;
        Ok(DenseIsing::from_model(self).energy(config.as_slice()))
    }

    /// `energy(s with spin index flipped) - energy(s)`.
    pub fn flip_delta(&self, config: &SpinConfig, index: usize) -> Result<f64> {
        self.check_len(config)?;
        if index >= self.n_vars {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.n_vars,
            });
        }
        let s = config.as_slice();
        let mut local = self.fields[index];
        for (&(i, j), &g) in &self.couplings {
            if i == index {
                local += g * f64::from(s[j]);
            } else if j == index {
                local += g * f64::from(s[i]);
            }
        }
        Ok(-2.0 * f64::from(s[index]) * local)
    }

    /// Fixes the spins in `assignments` and folds them into a reduced model.
    ///
    /// Each free spin `i` picks up `g_ik s_k` in its field for every clamped
    /// `k`; fields of clamped spins and couplings among clamped spins become
    /// a constant that is added to the reduced offset, so
    /// `energy_with_offset` agrees exactly between the full and reduced
    /// problems.
    pub fn clamp(&self, assignments: &BTreeMap<usize, i8>) -> Result<ClampResult> {
        for (&k, &v) in assignments {
            if k >= self.n_vars {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    len: self.n_vars,
                });
            }
            if v != 1 && v != -1 {
                return Err(Error::InvalidSpin(v as i64));
            }
        }
        if assignments.len() >= self.n_vars {
            return Err(Error::ClampAll(self.n_vars));
        }

        let mut reduced_index = vec![usize::MAX; self.n_vars];
        let mut index_map = Vec::with_capacity(self.n_vars - assignments.len());
        for k in 0..self.n_vars {
            if !assignments.contains_key(&k) {
                reduced_index[k] = index_map.len();
                index_map.push(k);
            }
        }

        let mut fields: Vec<f64> = index_map.iter().map(|&k| self.fields[k]).collect();
        let mut constant: f64 = assignments.iter().map(|(&k, &v)| self.fields[k] * f64::from(v)).sum();
        let mut couplings = Vec::new();
        for (&(i, j), &g) in &self.couplings {
            match (assignments.get(&i), assignments.get(&j)) {
                (None, None) => couplings.push(((reduced_index[i], reduced_index[j]), g)),
                (None, Some(&sj)) => fields[reduced_index[i]] += g * f64::from(sj),
                (Some(&si), None) => fields[reduced_index[j]] += g * f64::from(si),
                (Some(&si), Some(&sj)) => constant += g * f64::from(si) * f64::from(sj),
            }
        }

        let reduced = IsingModel::new(index_map.len(), couplings, fields, self.offset + constant)?;
        Ok(ClampResult {
            reduced,
            index_map,
            fixed: assignments.clone(),
            constant,
        })
    }
}

/// Output of [`IsingModel::clamp`].
#[derive(Debug, Clone)]
pub struct ClampResult {
    pub reduced: IsingModel,
    /// `index_map[r]` is the original index of reduced spin `r`.
    pub index_map: Vec<usize>,
    pub fixed: BTreeMap<usize, i8>,
    /// Energy contributed by the clamped spins alone (already added to the
    /// reduced offset).
    pub constant: f64,
}

impl ClampResult {
    /// Reassembles a full-length configuration from a reduced one.
    pub fn restore(&self, reduced: &SpinConfig) -> Result<SpinConfig> {
        if reduced.len() != self.index_map.len() {
            return Err(Error::DimensionMismatch {
                expected: self.index_map.len(),
                got: reduced.len(),
            });
        }
        let n = self.index_map.len() + self.fixed.len();
        let mut spins = vec![0i8; n];
        for (&orig, &s) in self.index_map.iter().zip(reduced.as_slice()) {
            spins[orig] = s;
        }
        for (&k, &v) in &self.fixed {
            spins[k] = v;
        }
        SpinConfig::new(spins)
    }

    /// The reduced configuration obtained by dropping clamped positions.
    pub fn restrict(&self, full: &SpinConfig) -> Result<SpinConfig> {
        let n = self.index_map.len() + self.fixed.len();
        if full.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: full.len(),
            });
        }
        SpinConfig::new(self.index_map.iter().map(|&k| full.as_slice()[k]).collect())
    }
}

/// Dense kernel representation: symmetric row-major `G` and fields `f`.
#[derive(Debug, Clone)]
pub struct DenseIsing {
    n: usize,
    g: Vec<f64>,
    f: Vec<f64>,
}

impl DenseIsing {
    pub fn from_model(model: &IsingModel) -> Self {
        Self {
            n: model.n_vars,
            g: model.dense_couplings(),
            f: model.fields.clone(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.g[i * self.n..(i + 1) * self.n]
    }

    pub fn fields(&self) -> &[f64] {
        &self.f
    }

    /// `s·(G·s + 2f)/2`.
    pub fn energy(&self, s: &[i8]) -> f64 {
        let mut acc = 0.0;
        for (i, &si) in s.iter().enumerate() {
            let gs: f64 = self.row(i).iter().zip(s).map(|(g, &sj)| g * f64::from(sj)).sum();
            acc += f64::from(si) * (gs + 2.0 * self.f[i]);
        }
        acc / 2.0
    }

    /// Local fields `h_i = f_i + Σ_j G_ij s_j`.
    pub fn local_fields(&self, s: &[i8]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.f[i] + self.row(i).iter().zip(s).map(|(g, &sj)| g * f64::from(sj)).sum::<f64>())
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct IsingWire {
    n_vars: usize,
    couplings: Vec<(usize, usize, f64)>,
    fields: Vec<f64>,
    offset: f64,
}

impl Serialize for IsingModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        IsingWire {
            n_vars: self.n_vars,
            couplings: self.couplings.iter().map(|(&(i, j), &g)| (i + 1, j + 1, g)).collect(),
            fields: self.fields.clone(),
            offset: self.offset,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IsingModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = IsingWire::deserialize(deserializer)?;
        let mut pairs = Vec::with_capacity(wire.couplings.len());
        for (i, j, g) in wire.couplings {
            if i == 0 || j == 0 {
                return Err(D::Error::custom("coupling indices are 1-based"));
            }
            pairs.push(((i - 1, j - 1), g));
        }
        IsingModel::new(wire.n_vars, pairs, wire.fields, wire.offset).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn two_spin() -> IsingModel {
        IsingModel::new(2, [((0, 1), -1.0)], vec![0.5, -0.5], 0.0).unwrap()
    }

    fn spins(v: &[i8]) -> SpinConfig {
        SpinConfig::new(v.to_vec()).unwrap()
    }

    /// Independent oracle: expand the double sum over all ordered pairs i<j.
    fn term_by_term(model: &IsingModel, s: &SpinConfig) -> f64 {
        let s = s.as_slice();
        let mut e = 0.0;
        for i in 0..model.n_vars() {
            for j in (i + 1)..model.n_vars() {
                e += model.coupling(i, j) * (s[i] as f64) * (s[j] as f64);
            }
            e += model.fields()[i] * s[i] as f64;
        }
        e
    }

    fn random_model(n: usize, seed: u64) -> IsingModel {
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < 0.7 {
                    pairs.push(((i, j), rng.random_range(-2.0..2.0)));
                }
            }
        }
        let fields = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        IsingModel::new(n, pairs, fields, rng.random_range(-5.0..5.0)).unwrap()
    }

    #[test]
    fn hand_computed_energy() {
        assert_eq!(two_spin().energy(&spins(&[1, 1])).unwrap(), -1.0);
        assert_eq!(two_spin().energy_matrix_form(&spins(&[1, 1])).unwrap(), -1.0);
    }

    #[test]
    fn empty_model_is_flat() {
        let m = IsingModel::zero(5).unwrap();
        for idx in 0..32 {
            assert_eq!(m.energy(&SpinConfig::from_index(5, idx)).unwrap(), 0.0);
        }
    }

    #[test]
    fn three_spin_enumeration_matches_oracle() {
        let m = random_model(3, 11);
        for idx in 0..8 {
            let s = SpinConfig::from_index(3, idx);
            assert!((m.energy(&s).unwrap() - term_by_term(&m, &s)).abs() <= 1e-12);
        }
    }

    #[test]
    fn matrix_form_without_fields_is_exact() {
        let m = IsingModel::new(3, [((0, 1), 1.5), ((0, 2), -0.25), ((1, 2), 2.0)], vec![0.0; 3], 0.0).unwrap();
        for idx in 0..8 {
            let s = SpinConfig::from_index(3, idx);
            assert_eq!(m.energy_matrix_form(&s).unwrap(), m.energy(&s).unwrap());
        }
    }

    #[test]
    fn matrix_form_cross_check() {
        let mut rng = crate::rng::rng_from_seed(3);
        for trial in 0..500 {
            let n = rng.random_range(1..=64);
            let m = random_model(n, 1000 + trial);
            let s = SpinConfig::random(n, &mut rng);
            let direct = m.energy(&s).unwrap();
            let dense = m.energy_matrix_form(&s).unwrap();
            assert!(
                (direct - dense).abs() <= 1e-9 * (1.0 + direct.abs()),
                "{direct} vs {dense}"
            );
        }
    }

    #[test]
    fn flip_delta_hand_case() {
        let m = two_spin();
        assert_eq!(m.flip_delta(&spins(&[1, 1]), 0).unwrap(), 1.0);
        assert_eq!(m.energy(&spins(&[-1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn isolated_spin_has_zero_delta() {
        let m = IsingModel::new(3, [((1, 2), 3.0)], vec![0.0, 1.0, -1.0], 0.0).unwrap();
        for idx in 0..8 {
            assert_eq!(m.flip_delta(&SpinConfig::from_index(3, idx), 0).unwrap(), 0.0);
        }
    }

    #[test]
    fn flip_delta_matches_recomputation() {
        let mut rng = crate::rng::rng_from_seed(5);
        let m = random_model(12, 77);
        for _ in 0..1000 {
            let s = SpinConfig::random(12, &mut rng);
            let e = m.energy(&s).unwrap();
            for i in 0..12 {
                let d = m.energy(&s.flipped(i)).unwrap() - e;
                assert!((m.flip_delta(&s, i).unwrap() - d).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn flip_delta_exact_on_integer_models() {
        let mut rng = crate::rng::rng_from_seed(8);
        for n in 1..=10 {
            let pairs: Vec<_> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|p| (p, rng.random_range(-4i32..=4) as f64))
                .collect();
            let fields = (0..n).map(|_| rng.random_range(-4i32..=4) as f64).collect();
            let m = IsingModel::new(n, pairs, fields, 0.0).unwrap();
            for idx in 0..(1u64 << n) {
                let s = SpinConfig::from_index(n, idx);
                for i in 0..n {
                    let d = m.energy(&s.flipped(i)).unwrap() - m.energy(&s).unwrap();
                    assert_eq!(m.flip_delta(&s, i).unwrap(), d);
                }
            }
        }
    }

    #[test]
    fn dimension_and_index_errors() {
        let m = two_spin();
        assert!(matches!(m.energy(&spins(&[1])), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            m.flip_delta(&spins(&[1, 1]), 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(SpinConfig::new(vec![1, 0]).is_err());
    }

    #[test]
    fn constructor_rejects_bad_pairs() {
        assert!(IsingModel::new(2, [((1, 0), 1.0)], vec![0.0; 2], 0.0).is_err());
        assert!(IsingModel::new(2, [((0, 0), 1.0)], vec![0.0; 2], 0.0).is_err());
        assert!(IsingModel::new(2, [((0, 2), 1.0)], vec![0.0; 2], 0.0).is_err());
        assert!(IsingModel::new(2, [((0, 1), 1.0), ((0, 1), 2.0)], vec![0.0; 2], 0.0).is_err());
        assert!(IsingModel::new(2, [((0, 1), f64::NAN)], vec![0.0; 2], 0.0).is_err());
        assert!(IsingModel::new(2, [], vec![0.0; 3], 0.0).is_err());
    }

    #[test]
    fn clamp_two_spin_example() {
        let m = two_spin();
        let c = m.clamp(&BTreeMap::from([(1, 1)])).unwrap();
        assert_eq!(c.reduced.n_vars(), 1);
        assert_eq!(c.reduced.fields(), &[-0.5]);
        assert_eq!(c.constant, -0.5);
        assert_eq!(c.index_map, vec![0]);
        for s1 in [-1i8, 1] {
            let full = m.energy(&spins(&[s1, 1])).unwrap();
            let red = c.reduced.energy(&spins(&[s1])).unwrap();
            assert_eq!(full, red + c.constant);
            assert_eq!(
                m.energy_with_offset(&spins(&[s1, 1])).unwrap(),
                c.reduced.energy_with_offset(&spins(&[s1])).unwrap()
            );
        }
    }

    #[test]
    fn clamp_without_couplings_restricts_fields() {
        let m = IsingModel::new(4, [], vec![1.0, 2.0, 3.0, 4.0], 0.0).unwrap();
        let c = m.clamp(&BTreeMap::from([(0, -1), (2, 1)])).unwrap();
        assert_eq!(c.reduced.fields(), &[2.0, 4.0]);
        assert_eq!(c.reduced.n_couplings(), 0);
    }

    #[test]
    fn clamp_exhaustive_eight_spins() {
        let m = random_model(8, 99);
        let fixed = BTreeMap::from([(1, -1), (4, 1), (6, 1)]);
        let c = m.clamp(&fixed).unwrap();
        assert_eq!(c.reduced.n_vars(), 5);
        for idx in 0..32 {
            let r = SpinConfig::from_index(5, idx);
            let full = c.restore(&r).unwrap();
            assert_eq!(c.restrict(&full).unwrap(), r);
            let lhs = m.energy(&full).unwrap();
            let rhs = c.reduced.energy(&r).unwrap() + c.constant;
            assert!((lhs - rhs).abs() <= 1e-12);
            let lhs = m.energy_with_offset(&full).unwrap();
            let rhs = c.reduced.energy_with_offset(&r).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn clamp_errors() {
        let m = two_spin();
        assert!(matches!(
            m.clamp(&BTreeMap::from([(5, 1)])),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            m.clamp(&BTreeMap::from([(0, 1), (1, 1)])),
            Err(Error::ClampAll(2))
        ));
        assert!(matches!(m.clamp(&BTreeMap::from([(0, 2)])), Err(Error::InvalidSpin(2))));
    }

    #[test]
    fn json_wire_format_is_one_based() {
        let json = serde_json::to_string(&two_spin()).unwrap();
        assert_eq!(
            json,
            r#"{"n_vars":2,"couplings":[[1,2,-1.0]],"fields":[0.5,-0.5],"offset":0.0}"#
        );
        assert!(serde_json::from_str::<IsingModel>(
            r#"{"n_vars":2,"couplings":[[0,1,1.0]],"fields":[0,0],"offset":0}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip_is_lossless(seed in any::<u64>(), n in 1usize..12) {
            let m = random_model(n, seed);
            let back: IsingModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            prop_assert_eq!(back, m);
        }

        #[test]
        fn energy_is_linear_in_coefficients(seed in any::<u64>(), n in 1usize..10) {
            let a = random_model(n, seed);
            let b = random_model(n, seed.wrapping_add(1));
            let sum_pairs: Vec<_> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| ((i, j), a.coupling(i, j) + b.coupling(i, j)))
                .collect();
            let fields = a.fields().iter().zip(b.fields()).map(|(x, y)| x + y).collect();
            let sum = IsingModel::new(n, sum_pairs, fields, 0.0).unwrap();
            let mut rng = crate::rng::rng_from_seed(seed);
            let s = SpinConfig::random(n, &mut rng);
            let lhs = sum.energy(&s).unwrap();
            let rhs = a.energy(&s).unwrap() + b.energy(&s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn field_free_models_have_z2_symmetry(seed in any::<u64>(), n in 1usize..10) {
            let m = random_model(n, seed);
            let pairs: Vec<_> = m.couplings().collect();
            let m = IsingModel::new(n, pairs, vec![0.0; n], 0.0).unwrap();
            let mut rng = crate::rng::rng_from_seed(seed);
            let s = SpinConfig::random(n, &mut rng);
            let lhs = m.energy(&s).unwrap();
            let rhs = m.energy(&s.negated()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
