//! The coordination loop.
//!
//! Each iteration selects an active set, extracts its subQUBO with the rest
//! of the incumbent frozen, hands it to a subsolver, merges the candidate
//! back and keeps it only if the global energy strictly improves. Runs are
//! deterministic functions of `(model, config)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decomposition::{extract_subproblem, merge_solution, select_active_set, ActiveSet, Ranking};
use crate::error::{Error, Result};
use crate::qubo::{Assignment, QuboModel};
use crate::subsolvers::{self, solve_greedy, SolverKind, SubSolverConfig};
use crate::zoning::Partition;

const INIT_STREAM: u64 = 1;
const SELECTION_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Rank by flip impact (the guided method).
    Impact,
    /// `q` indices uniformly without replacement.
    Random,
    /// Contiguous index blocks of size `q`, in order.
    RoundRobin,
}

impl Selection {
    pub fn as_str(self) -> &'static str {
        match self {
            Selection::Impact => "impact",
            Selection::Random => "random",
            Selection::RoundRobin => "round_robin",
        }
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "impact" => Ok(Selection::Impact),
            "random" => Ok(Selection::Random),
            "round_robin" | "round-robin" | "roundrobin" => Ok(Selection::RoundRobin),
            other => Err(Error::Invalid(format!("unknown selection policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitPolicy {
    Zeros,
    Random,
    /// Greedy descent from the seeded random assignment.
    Greedy,
}

impl FromStr for InitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeros" => Ok(InitPolicy::Zeros),
            "random" => Ok(InitPolicy::Random),
            "greedy" => Ok(InitPolicy::Greedy),
            other => Err(Error::Invalid(format!("unknown init policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub q: usize,
    pub selection: Selection,
    pub ranking: Ranking,
    pub subsolver: SubSolverConfig,
    pub max_iterations: usize,
    /// Consecutive non-improving iterations tolerated before stopping.
    pub patience: usize,
    /// A candidate is accepted only if it beats the incumbent by this much,
    /// relative to `1 + |incumbent|`.
    pub min_relative_improvement: f64,
    pub init: InitPolicy,
    /// Seeds initialization and random selection.
    pub seed: u64,
    /// Starting assignment; overrides `init` when present.
    pub warm_start: Option<Assignment>,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            q: 16,
            selection: Selection::Impact,
            ranking: Ranking::MostNegative,
            subsolver: SubSolverConfig::new(SolverKind::Auto, 0),
            max_iterations: 20,
            patience: 2,
            min_relative_improvement: 1e-9,
            init: InitPolicy::Random,
            seed: 0,
            warm_start: None,
        }
    }
}

impl HybridConfig {
    pub fn validate(&self, num_vars: usize) -> Result<()> {
        if self.q == 0 || self.max_iterations == 0 || self.patience == 0 {
            return Err(Error::Invalid(
                "q, max_iterations and patience must all be at least 1".into(),
            ));
        }
        if !(self.min_relative_improvement >= 0.0 && self.min_relative_improvement.is_finite()) {
            return Err(Error::Invalid(
                "min_relative_improvement must be finite and >= 0".into(),
            ));
        }
        if let Some(w) = &self.warm_start {
            if w.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    found: w.len(),
                });
            }
        }
        let sub_size = self.q.min(num_vars);
        if self.subsolver.kind == SolverKind::Exact && sub_size > self.subsolver.params.exact_cap {
            return Err(Error::ExactTooLarge {
                num_vars: sub_size,
                cap: self.subsolver.params.exact_cap,
            });
        }
        self.subsolver.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// The next iteration would repeat a rejected one exactly.
    Converged,
    Patience,
    MaxIterations,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::Converged => "converged",
            TerminationReason::Patience => "patience",
            TerminationReason::MaxIterations => "max_iterations",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub objective_before: f64,
    pub objective_after: f64,
    pub active: Vec<usize>,
    pub accepted: bool,
    pub subsolver_evals: u64,
    /// The subsolver errored; the iteration counts as non-improving.
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrajectory {
    pub iterations: Vec<IterationRecord>,
    pub final_partition: Partition,
    pub termination_reason: TerminationReason,
}

impl RunTrajectory {
    pub fn total_evaluations(&self) -> u64 {
        self.iterations.iter().map(|r| r.subsolver_evals).sum()
    }

    /// Incumbent objective after each iteration, starting with the initial one.
    pub fn incumbent_objectives(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.iterations.len() + 1);
        if let Some(first) = self.iterations.first() {
            out.push(first.objective_before);
        }
        out.extend(self.iterations.iter().map(|r| r.objective_after));
        out
    }

    /// Trajectory CSV: `iteration,objective_before,objective_after,accepted,num_active,subsolver_evals`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "iteration",
            "objective_before",
            "objective_after",
            "accepted",
            "num_active",
            "subsolver_evals",
        ])?;
        for r in &self.iterations {
            w.write_record([
                r.iteration.to_string(),
                r.objective_before.to_string(),
                r.objective_after.to_string(),
                r.accepted.to_string(),
                r.active.len().to_string(),
                r.subsolver_evals.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<trajectory csv>", e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for the subsolver call of a given iteration.
fn iteration_seed(base: u64, iteration: usize) -> u64 {
    base ^ (iteration as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Starting assignment for a run.
pub fn initialize(model: &QuboModel, config: &HybridConfig) -> Result<Assignment> {
    let n = model.num_vars();
    if let Some(w) = &config.warm_start {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: w.len(),
            });
        }
        return Ok(w.clone());
    }
    let random = || {
        let mut rng = stream_rng(config.seed, INIT_STREAM);
        Assignment::from_bits((0..n).map(|_| rng.gen_bool(0.5)).collect())
    };
    Ok(match config.init {
        InitPolicy::Zeros => Assignment::zeros(n),
        InitPolicy::Random => random(),
        InitPolicy::Greedy => solve_greedy(model, &random())?.assignment,
    })
}

struct Selector {
    policy: Selection,
    ranking: Ranking,
    q: usize,
    rng: ChaCha8Rng,
}

impl Selector {
    fn select(&mut self, model: &QuboModel, x: &Assignment, iteration: usize) -> Result<ActiveSet> {
        let n = model.num_vars();
        let q = self.q.min(n);
        match self.policy {
            Selection::Impact => select_active_set(model, x, self.q, self.ranking),
            Selection::Random => {
                let impacts = model.impact_vector(x)?;
                ActiveSet::from_indices(index::sample(&mut self.rng, n, q).into_vec(), &impacts)
            }
            Selection::RoundRobin => {
                let impacts = model.impact_vector(x)?;
                let blocks = n.div_ceil(q).max(1);
                let start = (iteration % blocks) * q;
                ActiveSet::from_indices((start..(start + q).min(n)).collect(), &impacts)
            }
        }
    }

    /// Whether an unchanged incumbent always yields the same active set.
    fn repeats(&self, n: usize) -> bool {
        match self.policy {
            Selection::Impact => true,
            Selection::Random => self.q >= n,
            Selection::RoundRobin => self.q >= n,
        }
    }
}

fn run_loop(model: &QuboModel, config: &HybridConfig, start: Assignment) -> Result<RunTrajectory> {
    let n = model.num_vars();
    let mut selector = Selector {
        policy: config.selection,
        ranking: config.ranking,
        q: config.q,
        rng: stream_rng(config.seed, SELECTION_STREAM),
    };
    let mut incumbent = start;
    let mut energy = model.evaluate(&incumbent)?;
    let mut records = Vec::new();
    let mut stale = 0usize;
    let mut reason = TerminationReason::MaxIterations;

    for iteration in 0..config.max_iterations {
        let active = selector.select(model, &incumbent, iteration)?;
        let sub = extract_subproblem(model, &incumbent, &active)?;
        let mut sub_config = config.subsolver.clone();
        sub_config.seed = iteration_seed(config.subsolver.seed, iteration);
        let kind = sub_config.resolve(sub.num_vars());
        let warm = sub.incumbent_local();

        let outcome = subsolvers::solve(&sub.model, &sub_config, Some(&warm))
            .and_then(|r| Ok((merge_solution(&incumbent, &sub, &r.assignment)?, r.evaluations)));
        let (accepted, failed, evals, after) = match outcome {
            Ok((candidate, evals)) => {
                let candidate_energy = model.evaluate(&candidate)?;
                let threshold = energy - config.min_relative_improvement * (1.0 + energy.abs());
                if candidate_energy < threshold {
                    incumbent = candidate;
                    (true, false, evals, candidate_energy)
                } else {
                    (false, false, evals, energy)
                }
            }
            Err(_) => (false, true, 0, energy),
        };
        records.push(IterationRecord {
            iteration: iteration + 1,
            objective_before: energy,
            objective_after: after,
            active: active.indices,
            accepted,
            subsolver_evals: evals,
            failed,
        });
        energy = after;

        if accepted {
            stale = 0;
            continue;
        }
        stale += 1;
        if !failed && kind.is_seed_independent() && selector.repeats(n) {
            reason = TerminationReason::Converged;
            break;
        }
        if stale >= config.patience {
            reason = TerminationReason::Patience;
            break;
        }
    }

    let final_partition = Partition::evaluate(model, incumbent)?;
    debug_assert!(crate::qubo::energies_match(final_partition.objective, energy));
    Ok(RunTrajectory {
        iterations: records,
        final_partition,
        termination_reason: reason,
    })
}

/// Runs the coordination loop with `config.selection` choosing active sets.
pub fn run_hybrid(model: &QuboModel, config: &HybridConfig) -> Result<RunTrajectory> {
    config.validate(model.num_vars())?;
    let start = initialize(model, config)?;
    run_loop(model, config, start)
}

/// The unguided decomposition baseline; `config.selection` must be random or round-robin.
pub fn run_classical_baseline(model: &QuboModel, config: &HybridConfig) -> Result<RunTrajectory> {
    if config.selection == Selection::Impact {
        return Err(Error::Invalid(
            "the classical baseline needs random or round_robin selection".into(),
        ));
    }
    run_hybrid(model, config)
}

/// One full-problem subsolver call from the all-zero assignment, recorded as
/// a single-iteration trajectory.
pub fn run_direct(model: &QuboModel, subsolver: &SubSolverConfig) -> Result<RunTrajectory> {
    let n = model.num_vars();
    if subsolver.kind == SolverKind::Exact && n > subsolver.params.exact_cap {
        return Err(Error::ExactTooLarge {
            num_vars: n,
            cap: subsolver.params.exact_cap,
        });
    }
    subsolver.validate()?;
    let start = Assignment::zeros(n);
    let before = model.evaluate(&start)?;
    let result = subsolvers::solve(model, subsolver, Some(&start))?;
    let accepted = result.energy < before;
    let (assignment, after) = if accepted {
        (result.assignment, result.energy)
    } else {
        (start, before)
    };
    Ok(RunTrajectory {
        iterations: vec![IterationRecord {
            iteration: 1,
            objective_before: before,
            objective_after: after,
            active: (0..n).collect(),
            accepted,
            subsolver_evals: result.evaluations,
            failed: false,
        }],
        final_partition: Partition::evaluate(model, assignment)?,
        termination_reason: TerminationReason::MaxIterations,
    })
}
