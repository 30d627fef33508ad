use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::qubo::{Assignment, QuboModel};

use super::anneal::FieldState;
use super::{SolveResult, SubSolverConfig};

/// Steepest single-flip tabu search from a seeded random start.
///
/// Each move takes the most negative delta among admissible variables (ties
/// to the lowest index). A variable flipped at move `t` stays tabu until move
/// `t + tenure`, unless flipping it would beat the best energy seen.
/// The tenure is clamped to `n − 1` so some move is always admissible.
pub fn solve_tabu(model: &QuboModel, config: &SubSolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let n = model.num_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut state = FieldState::new(model, start);
    if n == 0 {
        return SolveResult::scored(model, Assignment::from_bits(state.bits), 0);
    }

    let tenure = config.params.tabu_tenure.min(n - 1) as u64;
    let mut tabu_until = vec![0u64; n];
    let mut best_bits = state.bits.clone();
    let mut best_energy = state.energy;
    let mut evaluations = 0u64;

    for t in 0..config.budget {
        let mut chosen: Option<(usize, f64)> = None;
        for i in 0..n {
            let delta = state.delta(i);
            evaluations += 1;
            let admissible = tabu_until[i] <= t || state.energy + delta < best_energy;
            if admissible && chosen.is_none_or(|(_, d)| delta < d) {
                chosen = Some((i, delta));
            }
        }
        let Some((i, _)) = chosen else { break };
        state.flip(i);
        tabu_until[i] = t + 1 + tenure;
        if state.energy < best_energy {
            best_energy = state.energy;
            best_bits.copy_from_slice(&state.bits);
        }
    }
    SolveResult::scored(model, Assignment::from_bits(best_bits), evaluations)
}
