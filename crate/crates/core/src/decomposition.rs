//! Active-set selection, subQUBO extraction and reintegration.
//!
//! Freezing every variable outside an active set `S` at the incumbent turns
//! the global model into a smaller one over `S`. In canonical form the frozen
//! variables contribute `Σ_{j∈F} J_ij xⱼ` to each active linear term (the
//! effective bias) and their own energy to the constant, so a subproblem
//! energy is directly a global energy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{Assignment, QuboBuilder, QuboModel};

/// How variables are ranked for inclusion in the active set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Largest `|ΔHᵢ|` first.
    Magnitude,
    /// Most negative `ΔHᵢ` first, i.e. the flips that would help most.
    #[default]
    MostNegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    /// Selected global indices, ascending.
    pub indices: Vec<usize>,
    /// `ΔHᵢ` of each selected index at selection time.
    pub impacts: Vec<f64>,
}

impl ActiveSet {
    /// Active set from explicit indices; impacts are taken from `impacts`.
    pub fn from_indices(mut indices: Vec<usize>, impacts: &[f64]) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid("active set indices must be distinct".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= impacts.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: impacts.len(),
            });
        }
        let impacts = indices.iter().map(|&i| impacts[i]).collect();
        Ok(Self { indices, impacts })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Orders variable indices by ranking key, ties to the lower index.
pub fn rank_indices(impacts: &[f64], ranking: Ranking) -> Vec<usize> {
    let key = |i: usize| match ranking {
        Ranking::Magnitude => -impacts[i].abs(),
        Ranking::MostNegative => impacts[i],
    };
    let mut order: Vec<usize> = (0..impacts.len()).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    order
}

/// The `min(q, n)` highest-impact variables under `ranking`.
pub fn select_active_set(model: &QuboModel, x: &Assignment, q: usize, ranking: Ranking) -> Result<ActiveSet> {
    if q == 0 {
        return Err(Error::Invalid("active set size q must be at least 1".into()));
    }
    let impacts = model.impact_vector(x)?;
    let mut chosen = rank_indices(&impacts, ranking);
    chosen.truncate(q);
    ActiveSet::from_indices(chosen, &impacts)
}

/// A reduced model over the active variables with the rest frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct SubProblem {
    /// Model over local indices `0..q`; its constant already includes the
    /// frozen variables' energy.
    pub model: QuboModel,
    /// Local index → global index, ascending.
    pub global_indices: Vec<usize>,
    /// The incumbent at extraction time; authoritative outside the active set.
    pub frozen: Assignment,
}

impl SubProblem {
    pub fn num_vars(&self) -> usize {
        self.global_indices.len()
    }

    /// The incumbent restricted to the active set.
    pub fn incumbent_local(&self) -> Assignment {
        Assignment::from_bits(self.global_indices.iter().map(|&g| self.frozen[g]).collect())
    }
}

/// Builds the subQUBO for `active` with every other variable fixed at `x`.
pub fn extract_subproblem(model: &QuboModel, x: &Assignment, active: &ActiveSet) -> Result<SubProblem> {
    let n = model.num_vars();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    if let Some(&bad) = active.indices.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    if active.indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(
            "active set indices must be distinct and ascending".into(),
        ));
    }
    let local: BTreeMap<usize, usize> = active.indices.iter().enumerate().map(|(l, &g)| (g, l)).collect();

    let mut b = QuboBuilder::new(active.len());
    for (l, &g) in active.indices.iter().enumerate() {
        b.add_linear(l, model.linear()[g]);
    }
    let mut frozen_energy = 0.0;
    for (g, &h) in model.linear().iter().enumerate() {
        if x[g] && !local.contains_key(&g) {
            frozen_energy += h;
        }
    }
    for (&(i, j), &v) in model.quadratic() {
        match (local.get(&i), local.get(&j)) {
            (Some(&li), Some(&lj)) => {
                b.add_coupling(li, lj, v);
            }
            (Some(&li), None) if x[j] => {
                b.add_linear(li, v);
            }
            (None, Some(&lj)) if x[i] => {
                b.add_linear(lj, v);
            }
            (None, None) if x[i] && x[j] => frozen_energy += v,
            _ => {}
        }
    }
    b.add_constant(model.constant());
    if frozen_energy != 0.0 {
        b.add_constant(frozen_energy);
    }
    Ok(SubProblem {
        model: b.build()?,
        global_indices: active.indices.clone(),
        frozen: x.clone(),
    })
}

/// Writes the local solution `y` back into a copy of `x`.
pub fn merge_solution(x: &Assignment, sub: &SubProblem, y: &Assignment) -> Result<Assignment> {
    if y.len() != sub.num_vars() {
        return Err(Error::DimensionMismatch {
            expected: sub.num_vars(),
            found: y.len(),
        });
    }
    if let Some(&bad) = sub.global_indices.iter().find(|&&g| g >= x.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: x.len(),
        });
    }
    let mut out = x.clone();
    for (l, &g) in sub.global_indices.iter().enumerate() {
        out.set(g, y[l]);
    }
    Ok(out)
}
