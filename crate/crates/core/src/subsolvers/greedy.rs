use crate::error::{Error, Result};
use crate::qubo::{Assignment, QuboModel};

use super::anneal::FieldState;
use super::SolveResult;

/// Steepest descent: flip the most improving variable (ties to the lowest
/// index) until no flip lowers the energy.
pub fn solve_greedy(model: &QuboModel, x0: &Assignment) -> Result<SolveResult> {
    solve_greedy_bounded(model, x0.clone(), u64::MAX)
}

/// Descent that also returns the energy after every step, starting with the
/// energy of `x0`.
pub fn greedy_descent(model: &QuboModel, x0: &Assignment) -> Result<(SolveResult, Vec<f64>)> {
    let mut path = Vec::new();
    let result = descend(model, x0.clone(), u64::MAX, |e| path.push(e))?;
    Ok((result, path))
}

pub(super) fn solve_greedy_bounded(model: &QuboModel, x0: Assignment, max_flips: u64) -> Result<SolveResult> {
    descend(model, x0, max_flips, |_| {})
}

fn descend(model: &QuboModel, x0: Assignment, max_flips: u64, mut on_step: impl FnMut(f64)) -> Result<SolveResult> {
    let n = model.num_vars();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    let mut state = FieldState::new(model, x0.bits().to_vec());
    on_step(model.energy_unchecked(&state.bits));
    let mut evaluations = 0u64;
    let mut flips = 0u64;
    while flips < max_flips {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            let delta = state.delta(i);
            evaluations += 1;
            if best.is_none_or(|(_, d)| delta < d) {
                best = Some((i, delta));
            }
        }
        // demand a margin above rounding noise in the incremental fields
        let floor = -1e-12 * (1.0 + state.energy.abs());
        match best {
            Some((i, d)) if d < floor => {
                state.flip(i);
                flips += 1;
                on_step(model.energy_unchecked(&state.bits));
            }
            _ => break,
        }
    }
    SolveResult::scored(model, Assignment::from_bits(state.bits), evaluations)
}
