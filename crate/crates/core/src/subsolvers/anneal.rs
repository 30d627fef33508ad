use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::qubo::{Assignment, QuboModel};

use super::{SolveResult, SubSolverConfig};

/// Final temperature as a fraction of the starting one.
const T_MIN_RATIO: f64 = 1e-3;

/// Incrementally maintained local fields `fᵢ = hᵢ + Σⱼ J_ij xⱼ`, so the flip
/// delta of `i` is `±fᵢ` and a flip costs `O(deg(i))`.
pub(super) struct FieldState<'a> {
    model: &'a QuboModel,
    pub bits: Vec<bool>,
    pub fields: Vec<f64>,
    pub energy: f64,
}

impl<'a> FieldState<'a> {
    pub fn new(model: &'a QuboModel, bits: Vec<bool>) -> Self {
        let fields = (0..model.num_vars()).map(|i| model.local_field(&bits, i)).collect();
        let energy = model.energy_unchecked(&bits);
        Self {
            model,
            bits,
            fields,
            energy,
        }
    }

    pub fn delta(&self, i: usize) -> f64 {
        if self.bits[i] {
            -self.fields[i]
        } else {
            self.fields[i]
        }
    }

    pub fn flip(&mut self, i: usize) {
        let delta = self.delta(i);
        self.bits[i] = !self.bits[i];
        self.energy += delta;
        let sign = if self.bits[i] { 1.0 } else { -1.0 };
        for &(j, v) in self.model.neighbours(i) {
            self.fields[j] += sign * v;
        }
    }
}

/// Single-flip Metropolis annealing with geometric cooling.
///
/// The start temperature is the largest flip magnitude at a random probe
/// assignment; the schedule cools by `params.cooling` down to `1e-3` of that.
/// `budget` sweeps are spread evenly over the schedule, each sweep visiting
/// the variables in a fresh seeded permutation. Returns the best state seen.
pub fn solve_anneal(model: &QuboModel, config: &SubSolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let n = model.num_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut state = FieldState::new(model, start);
    if n == 0 {
        return SolveResult::scored(model, Assignment::from_bits(state.bits), 0);
    }

    let t0 = (0..n).map(|i| state.delta(i).abs()).fold(0.0, f64::max);
    let t0 = if t0 > 0.0 { t0 } else { 1.0 };
    let t_min = T_MIN_RATIO * t0;
    let rho = config.params.cooling;
    let steps = (T_MIN_RATIO.ln() / rho.ln()).ceil().max(1.0) as u64;
    let sweeps_per_step = config.budget.div_ceil(steps).max(1);

    let mut best_bits = state.bits.clone();
    let mut best_energy = state.energy;
    let mut order: Vec<usize> = (0..n).collect();
    let mut temperature = t0;
    let mut evaluations = n as u64;

    for sweep in 0..config.budget {
        if sweep > 0 && sweep % sweeps_per_step == 0 {
            temperature = (temperature * rho).max(t_min);
        }
        order.shuffle(&mut rng);
        for &i in &order {
            let delta = state.delta(i);
            evaluations += 1;
            if delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp() {
                state.flip(i);
                if state.energy < best_energy {
                    best_energy = state.energy;
                    best_bits.copy_from_slice(&state.bits);
                }
            }
        }
    }
    SolveResult::scored(model, Assignment::from_bits(best_bits), evaluations)
}

#[cfg(test)]
mod tests {
    use super::super::test_models::*;
    use super::super::{solve_exact, SolverKind};
    use super::*;
    use crate::qubo::energies_match;

    fn cfg(seed: u64) -> SubSolverConfig {
        SubSolverConfig::new(SolverKind::Anneal, seed)
    }

    #[test]
    fn zero_model_returns_offset() {
        let m = QuboModel::constant_only(5, -2.0).unwrap();
        assert_eq!(solve_anneal(&m, &cfg(1)).unwrap().energy, -2.0);
    }

    #[test]
    fn two_var_reaches_optimum() {
        let r = solve_anneal(&two_var(), &cfg(4).with_budget(100)).unwrap();
        assert_eq!(r.energy, 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = random_model(12, 8);
        assert_eq!(solve_anneal(&m, &cfg(3)).unwrap(), solve_anneal(&m, &cfg(3)).unwrap());
    }

    #[test]
    fn never_below_exact_and_counts_work() {
        let m = random_model(10, 2);
        let exact = solve_exact(&m, 24).unwrap();
        let r = solve_anneal(&m, &cfg(0).with_budget(50)).unwrap();
        assert!(r.energy >= exact.energy || energies_match(r.energy, exact.energy));
        assert_eq!(r.evaluations, 10 + 50 * 10);
    }

    #[test]
    fn field_state_tracks_energy() {
        let m = random_model(9, 21);
        let mut s = FieldState::new(&m, vec![false; 9]);
        for i in [3, 1, 3, 8, 0, 5] {
            s.flip(i);
            let e = m.energy_unchecked(&s.bits);
            assert!(energies_match(s.energy, e));
            for k in 0..9 {
                assert!(energies_match(s.fields[k], m.local_field(&s.bits, k)));
            }
        }
    }
}
