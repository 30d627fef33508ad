use crate::error::{Error, Result};
use crate::qubo::{energies_match, Assignment, QuboModel};

use super::SolveResult;

/// Global minimizer by enumeration of all `2ⁿ` assignments.
///
/// Leaves are visited depth-first with `x₀` as the most significant bit, i.e.
/// in lexicographic order, and a later leaf only displaces the incumbent when
/// it is lower by more than the energy tolerance. Ties therefore resolve to the
/// lexicographically smallest bit vector.
pub fn solve_exact(model: &QuboModel, cap: usize) -> Result<SolveResult> {
    let n = model.num_vars();
    if n > cap {
        return Err(Error::ExactTooLarge { num_vars: n, cap });
    }
    // forward[d]: couplings from d to later variables
    let forward: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|d| model.neighbours(d).iter().copied().filter(|&(j, _)| j > d).collect())
        .collect();
    let mut search = Search {
        forward: &forward,
        bits: vec![false; n],
        best_bits: vec![false; n],
        best_energy: f64::INFINITY,
        leaves: 0,
    };
    let mut scratch = vec![vec![0.0; n]; n];
    search.descend(0, model.linear(), model.constant(), &mut scratch);
    let evaluations = search.leaves;
    SolveResult::scored(model, Assignment::from_bits(search.best_bits), evaluations)
}

struct Search<'a> {
    forward: &'a [Vec<(usize, f64)>],
    bits: Vec<bool>,
    best_bits: Vec<bool>,
    best_energy: f64,
    leaves: u64,
}

impl Search<'_> {
    /// `field[i]` for `i ≥ depth` is `hᵢ` plus couplings to decided ones.
    fn descend(&mut self, depth: usize, field: &[f64], energy: f64, scratch: &mut [Vec<f64>]) {
        if depth == self.bits.len() {
            self.leaves += 1;
            let first = self.leaves == 1;
            if first || (energy < self.best_energy && !energies_match(energy, self.best_energy)) {
                self.best_energy = energy;
                self.best_bits.copy_from_slice(&self.bits);
            }
            return;
        }
        let (level, deeper) = scratch.split_first_mut().expect("one scratch row per level");

        self.bits[depth] = false;
        self.descend(depth + 1, field, energy, deeper);

        self.bits[depth] = true;
        level.copy_from_slice(field);
        for &(j, v) in &self.forward[depth] {
            level[j] += v;
        }
        self.descend(depth + 1, level, energy + field[depth], deeper);
        self.bits[depth] = false;
    }
}
