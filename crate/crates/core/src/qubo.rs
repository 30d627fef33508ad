//! Canonical QUBO representation and energy evaluation.
//!
//! A model stores the energy in canonical form
//!
//! ```text
//! H(x) = Σᵢ hᵢ xᵢ + Σ_{i<j} J_ij xᵢ xⱼ + C
//! ```
//!
//! The symmetric-matrix form `xᵀQx + C` maps onto it with `hᵢ = Qᵢᵢ` and
//! `J_ij = Q_ij + Q_ji`, see [`QuboModel::from_symmetric_matrix`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance used for every energy equality check in the crate.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

/// True when `a` and `b` agree within [`ENERGY_TOLERANCE`] relative to their magnitude.
pub fn energies_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= ENERGY_TOLERANCE * (1.0 + a.abs().max(b.abs()))
}

/// A binary configuration over all decision variables.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Builds an assignment from 0/1 integers; any other value is rejected.
    pub fn from_u8(values: &[u8]) -> Result<Self> {
        let bits = values
            .iter()
            .enumerate()
            .map(|(i, &v)| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Invalid(format!("assignment[{i}] = {other}, expected 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| b as u8).collect()
    }

    /// Copy with variable `i` inverted.
    pub fn flipped(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.bits[i] = !out.bits[i];
        out
    }

    /// Copy with every variable inverted.
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl Index<usize> for Assignment {
    type Output = bool;

    fn index(&self, i: usize) -> &bool {
        &self.bits[i]
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        write!(f, "Assignment({s})")
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_u8().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<u8>::deserialize(deserializer)?;
        Assignment::from_u8(&raw).map_err(serde::de::Error::custom)
    }
}

/// Accumulates coefficients before freezing them into a [`QuboModel`].
///
/// Adding a coupling for a pair that is already present sums the two values.
#[derive(Debug, Clone)]
pub struct QuboBuilder {
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    constant: f64,
}

impl QuboBuilder {
    pub fn new(num_vars: usize) -> Self {
        Self {
            linear: vec![0.0; num_vars],
            quadratic: BTreeMap::new(),
            constant: 0.0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn add_linear(&mut self, i: usize, value: f64) -> &mut Self {
        self.linear[i] += value;
        self
    }

    /// Adds `value` to the coupling of the unordered pair `{i, j}`.
    ///
    /// Panics on a self-pair or an out-of-range index; use [`QuboModel::new`]
    /// for checked construction from untrusted data.
    pub fn add_coupling(&mut self, i: usize, j: usize, value: f64) -> &mut Self {
        assert!(i != j, "self-pair ({i}, {i}) is not a coupling");
        let n = self.linear.len();
        assert!(i < n && j < n, "pair ({i}, {j}) out of range for {n} variables");
        let key = if i < j { (i, j) } else { (j, i) };
        *self.quadratic.entry(key).or_insert(0.0) += value;
        self
    }

    pub fn add_constant(&mut self, value: f64) -> &mut Self {
        self.constant += value;
        self
    }

    /// Merges another builder's coefficients into this one, term by term.
    pub fn absorb(&mut self, other: &QuboModel) -> &mut Self {
        assert_eq!(self.num_vars(), other.num_vars(), "variable count mismatch");
        for (h, o) in self.linear.iter_mut().zip(other.linear()) {
            *h += o;
        }
        for (&(i, j), &v) in other.quadratic() {
            self.add_coupling(i, j, v);
        }
        self.constant += other.constant();
        self
    }

    /// Freezes the coefficients. Couplings that summed to exactly zero are dropped.
    pub fn build(self) -> Result<QuboModel> {
        QuboModel::from_parts(self.linear, self.quadratic, self.constant)
    }
}

/// Linear terms, pairwise couplings and a constant offset over `n` binary variables.
///
/// Immutable once built. Each variable keeps a neighbour list so flip deltas
/// cost `O(deg(i))`.
#[derive(Debug, Clone)]
pub struct QuboModel {
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    constant: f64,
    neighbours: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for QuboModel {
    fn eq(&self, other: &Self) -> bool {
        self.linear == other.linear && self.quadratic == other.quadratic && self.constant == other.constant
    }
}

impl QuboModel {
    /// Checked constructor from raw coefficients.
    ///
    /// Pairs may be given in either order; duplicates are rejected, as are
    /// self-pairs, out-of-range indices and non-finite values.
    pub fn new(linear: Vec<f64>, quadratic: &[(usize, usize, f64)], constant: f64) -> Result<Self> {
        let n = linear.len();
        let mut map = BTreeMap::new();
        for (k, &(i, j, v)) in quadratic.iter().enumerate() {
            if i == j {
                return Err(Error::Invalid(format!("quadratic[{k}]: self-pair ({i}, {j})")));
            }
            if i >= n || j >= n {
                return Err(Error::Invalid(format!(
                    "quadratic[{k}]: pair ({i}, {j}) out of range for {n} variables"
                )));
            }
            let key = if i < j { (i, j) } else { (j, i) };
            if map.insert(key, v).is_some() {
                return Err(Error::Invalid(format!(
                    "quadratic[{k}]: duplicate pair ({}, {})",
                    key.0, key.1
                )));
            }
        }
        Self::from_parts(linear, map, constant)
    }

    fn from_parts(linear: Vec<f64>, mut quadratic: BTreeMap<(usize, usize), f64>, constant: f64) -> Result<Self> {
        if let Some(i) = linear.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("linear[{i}] is not finite")));
        }
        if let Some((&(i, j), _)) = quadratic.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Invalid(format!("coupling ({i}, {j}) is not finite")));
        }
        if !constant.is_finite() {
            return Err(Error::Invalid("constant is not finite".into()));
        }
        quadratic.retain(|_, v| *v != 0.0);
        let mut neighbours = vec![Vec::new(); linear.len()];
        for (&(i, j), &v) in &quadratic {
            neighbours[i].push((j, v));
            neighbours[j].push((i, v));
        }
        for list in &mut neighbours {
            list.sort_by_key(|&(j, _)| j);
        }
        Ok(Self {
            linear,
            quadratic,
            constant,
            neighbours,
        })
    }

    /// The model with every coefficient zero except the offset.
    pub fn constant_only(num_vars: usize, constant: f64) -> Result<Self> {
        Self::from_parts(vec![0.0; num_vars], BTreeMap::new(), constant)
    }

    /// Converts `xᵀQx + C` into canonical form.
    ///
    /// `q` must be square and symmetric within `1e-9` (absolute, scaled by the
    /// entry magnitude).
    pub fn from_symmetric_matrix(q: &[Vec<f64>], constant: f64) -> Result<Self> {
        let n = q.len();
        if let Some((r, row)) = q.iter().enumerate().find(|(_, row)| row.len() != n) {
            return Err(Error::Invalid(format!(
                "matrix is not square: row {r} has {} entries, expected {n}",
                row.len()
            )));
        }
        let mut builder = QuboBuilder::new(n);
        for i in 0..n {
            builder.add_linear(i, q[i][i]);
            for j in (i + 1)..n {
                let (a, b) = (q[i][j], q[j][i]);
                if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::Invalid(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                builder.add_coupling(i, j, a + b);
            }
        }
        builder.add_constant(constant);
        builder.build()
    }

    /// Symmetric matrix `Q` with `xᵀQx + C` equal to this model's energy.
    pub fn to_symmetric_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.num_vars();
        let mut q = vec![vec![0.0; n]; n];
        for (i, &h) in self.linear.iter().enumerate() {
            q[i][i] = h;
        }
        for (&(i, j), &v) in &self.quadratic {
            q[i][j] = v / 2.0;
            q[j][i] = v / 2.0;
        }
        q
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { (i, j) } else { (j, i) };
        self.quadratic.get(&key).copied().unwrap_or(0.0)
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Non-zero couplings of variable `i`, sorted by partner index.
    pub fn neighbours(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbours[i]
    }

    pub fn num_couplings(&self) -> usize {
        self.quadratic.len()
    }

    fn check_len(&self, x: &Assignment) -> Result<()> {
        if x.len() != self.num_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Energy `H(x)` in canonical form.
    pub fn evaluate(&self, x: &Assignment) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.energy_unchecked(x.bits()))
    }

    pub(crate) fn energy_unchecked(&self, x: &[bool]) -> f64 {
        let mut e = self.constant;
        for (h, _) in self.linear.iter().zip(x).filter(|(_, &b)| b) {
            e += h;
        }
        for (&(i, j), &v) in &self.quadratic {
            if x[i] && x[j] {
                e += v;
            }
        }
        e
    }

    /// `hᵢ + Σ_{j≠i} J_ij xⱼ`: the change in energy from raising `xᵢ` to one.
    pub(crate) fn local_field(&self, x: &[bool], i: usize) -> f64 {
        let mut f = self.linear[i];
        for &(j, v) in &self.neighbours[i] {
            if x[j] {
                f += v;
            }
        }
        f
    }

    /// Exact energy change from flipping variable `i`:
    /// `ΔHᵢ = (1 − 2xᵢ)(hᵢ + Σ_{j≠i} J_ij xⱼ)`.
    pub fn delta_flip(&self, x: &Assignment, i: usize) -> Result<f64> {
        self.check_len(x)?;
        if i >= self.num_vars() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.num_vars(),
            });
        }
        Ok(self.delta_unchecked(x.bits(), i))
    }

    pub(crate) fn delta_unchecked(&self, x: &[bool], i: usize) -> f64 {
        let f = self.local_field(x, i);
        if x[i] {
            -f
        } else {
            f
        }
    }

    /// The flip delta of every variable (the variable impacts).
    pub fn impact_vector(&self, x: &Assignment) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok((0..self.num_vars())
            .map(|i| self.delta_unchecked(x.bits(), i))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_var() -> QuboModel {
        QuboModel::new(vec![1.0, 3.0], &[(0, 1, -4.0)], 0.0).unwrap()
    }

    fn bits(v: &[u8]) -> Assignment {
        Assignment::from_u8(v).unwrap()
    }

    #[test]
    fn zero_model_returns_offset() {
        let m = QuboModel::constant_only(2, 5.0).unwrap();
        assert_eq!(m.evaluate(&bits(&[1, 1])).unwrap(), 5.0);
    }

    #[test]
    fn two_var_energies_match_enumeration() {
        let m = two_var();
        // all four states by hand: h·x + J·x0·x1
        let table = [([0, 0], 0.0), ([1, 0], 1.0), ([0, 1], 3.0), ([1, 1], 0.0)];
        for (x, e) in table {
            assert_eq!(m.evaluate(&bits(&x)).unwrap(), e, "x = {x:?}");
        }
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        let err = two_var().evaluate(&bits(&[1])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn delta_flip_examples() {
        let m = two_var();
        assert_eq!(m.delta_flip(&bits(&[0, 0]), 0).unwrap(), 1.0);
        assert_eq!(m.delta_flip(&bits(&[1, 1]), 0).unwrap(), 3.0);
        assert!(matches!(
            m.delta_flip(&bits(&[0, 0]), 2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn impact_vector_examples() {
        let m = two_var();
        assert_eq!(m.impact_vector(&bits(&[0, 0])).unwrap(), vec![1.0, 3.0]);
        assert_eq!(m.impact_vector(&bits(&[1, 1])).unwrap(), vec![3.0, 1.0]);
        let zero = QuboModel::constant_only(4, 2.0).unwrap();
        assert_eq!(zero.impact_vector(&Assignment::zeros(4)).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn symmetric_matrix_conversion() {
        let m = QuboModel::from_symmetric_matrix(&[vec![-1.0, 1.0], vec![1.0, -1.0]], 1.0).unwrap();
        assert_eq!(m.linear(), &[-1.0, -1.0]);
        assert_eq!(m.coupling(0, 1), 2.0);
        assert_eq!(m.constant(), 1.0);

        let zero = QuboModel::from_symmetric_matrix(&vec![vec![0.0; 3]; 3], 0.0).unwrap();
        assert_eq!(zero, QuboModel::constant_only(3, 0.0).unwrap());

        let diag =
            QuboModel::from_symmetric_matrix(&[vec![2.0, 0.0, 0.0], vec![0.0, -3.0, 0.0], vec![0.0, 0.0, 0.5]], 0.0)
                .unwrap();
        assert_eq!(diag.linear(), &[2.0, -3.0, 0.5]);
        assert_eq!(diag.num_couplings(), 0);
    }

    #[test]
    fn symmetric_matrix_rejects_bad_shapes() {
        assert!(QuboModel::from_symmetric_matrix(&[vec![1.0, 2.0], vec![3.0]], 0.0).is_err());
        assert!(QuboModel::from_symmetric_matrix(&[vec![1.0, 2.0], vec![2.5, 1.0]], 0.0).is_err());
        // within tolerance is fine
        assert!(QuboModel::from_symmetric_matrix(&[vec![1.0, 2.0], vec![2.0 + 1e-12, 1.0]], 0.0).is_ok());
    }

    #[test]
    fn new_rejects_invalid_pairs() {
        assert!(QuboModel::new(vec![0.0; 2], &[(1, 1, 1.0)], 0.0).is_err());
        assert!(QuboModel::new(vec![0.0; 2], &[(0, 2, 1.0)], 0.0).is_err());
        assert!(QuboModel::new(vec![0.0; 2], &[(0, 1, 1.0), (1, 0, 2.0)], 0.0).is_err());
        assert!(QuboModel::new(vec![f64::NAN, 0.0], &[], 0.0).is_err());
        assert!(QuboModel::new(vec![0.0; 2], &[], f64::INFINITY).is_err());
    }

    #[test]
    fn builder_accumulates_couplings() {
        let mut b = QuboBuilder::new(3);
        b.add_coupling(2, 0, 1.5)
            .add_coupling(0, 2, 2.0)
            .add_coupling(0, 1, 1.0)
            .add_coupling(1, 0, -1.0);
        let m = b.build().unwrap();
        assert_eq!(m.coupling(0, 2), 3.5);
        // cancelled pair is pruned
        assert_eq!(m.num_couplings(), 1);
    }

    #[test]
    fn assignment_serializes_as_integers() {
        let x = bits(&[1, 0, 1]);
        assert_eq!(serde_json::to_string(&x).unwrap(), "[1,0,1]");
        let back: Assignment = serde_json::from_str("[1,0,1]").unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<Assignment>("[2]").is_err());
    }
}
