//! Pluggable solvers for full or reduced QUBO instances.
//!
//! Every solver returns a [`SolveResult`] whose energy has been recomputed with
//! [`QuboModel::evaluate`], never taken from the search's running total.

mod anneal;
mod exact;
pub mod external;
mod greedy;
mod tabu;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{Assignment, QuboModel};

pub use anneal::solve_anneal;
pub use exact::solve_exact;
pub use external::solve_external;
pub use greedy::{greedy_descent, solve_greedy};
pub use tabu::solve_tabu;

pub const DEFAULT_EXACT_CAP: usize = 24;
pub const DEFAULT_COOLING: f64 = 0.97;
pub const DEFAULT_TABU_TENURE: usize = 10;
pub const DEFAULT_ANNEAL_SWEEPS: u64 = 200;
pub const DEFAULT_TABU_ITERATIONS: u64 = 400;
pub const DEFAULT_EXTERNAL_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Exact when the problem fits under the cap, anneal otherwise.
    Auto,
    Exact,
    Anneal,
    Tabu,
    Greedy,
    External,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Auto => "auto",
            SolverKind::Exact => "exact",
            SolverKind::Anneal => "anneal",
            SolverKind::Tabu => "tabu",
            SolverKind::Greedy => "greedy",
            SolverKind::External => "external",
        }
    }

    /// Whether repeated calls on the same problem always return the same answer
    /// regardless of seed.
    pub fn is_seed_independent(self) -> bool {
        matches!(self, SolverKind::Exact | SolverKind::Greedy)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => SolverKind::Auto,
            "exact" => SolverKind::Exact,
            "anneal" => SolverKind::Anneal,
            "tabu" => SolverKind::Tabu,
            "greedy" => SolverKind::Greedy,
            "external" => SolverKind::External,
            other => return Err(Error::Invalid(format!("unknown subsolver kind `{other}`"))),
        })
    }
}

/// Kind-specific settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Geometric cooling ratio for annealing, in `(0, 1)`.
    pub cooling: f64,
    pub tabu_tenure: usize,
    /// Largest problem exact enumeration accepts.
    pub exact_cap: usize,
    /// Program and arguments of the external backend.
    pub external_command: Vec<String>,
    pub external_timeout: Duration,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            cooling: DEFAULT_COOLING,
            tabu_tenure: DEFAULT_TABU_TENURE,
            exact_cap: DEFAULT_EXACT_CAP,
            external_command: Vec::new(),
            external_timeout: DEFAULT_EXTERNAL_TIMEOUT,
        }
    }
}

/// Which solver to run and how much work it may do.
///
/// `budget` counts sweeps for anneal, moves for tabu and flips for greedy;
/// exact and external ignore it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubSolverConfig {
    pub kind: SolverKind,
    pub budget: u64,
    pub seed: u64,
    pub params: SolverParams,
}

impl SubSolverConfig {
    /// Config with the kind's default budget.
    pub fn new(kind: SolverKind, seed: u64) -> Self {
        let budget = match kind {
            SolverKind::Tabu => DEFAULT_TABU_ITERATIONS,
            SolverKind::Greedy => u64::MAX,
            _ => DEFAULT_ANNEAL_SWEEPS,
        };
        Self {
            kind,
            budget,
            seed,
            params: SolverParams::default(),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Invalid("subsolver budget must be > 0".into()));
        }
        let cooling = self.params.cooling;
        if !(cooling > 0.0 && cooling < 1.0) {
            return Err(Error::Invalid(format!("cooling ratio {cooling} must lie in (0, 1)")));
        }
        if self.kind == SolverKind::External && self.params.external_command.is_empty() {
            return Err(Error::External(crate::error::ExternalError::NoCommand));
        }
        Ok(())
    }

    /// The concrete kind used for a problem of `num_vars` variables.
    pub fn resolve(&self, num_vars: usize) -> SolverKind {
        match self.kind {
            SolverKind::Auto if num_vars <= self.params.exact_cap => SolverKind::Exact,
            SolverKind::Auto => SolverKind::Anneal,
            k => k,
        }
    }
}

/// Best assignment found, its energy, and the work spent finding it.
///
/// `evaluations` counts single-variable delta or energy evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub assignment: Assignment,
    pub energy: f64,
    pub evaluations: u64,
}

impl SolveResult {
    pub(crate) fn scored(model: &QuboModel, assignment: Assignment, evaluations: u64) -> Result<Self> {
        let energy = model.evaluate(&assignment)?;
        Ok(Self {
            assignment,
            energy,
            evaluations,
        })
    }
}

/// Runs the configured solver. `warm` seeds greedy descent; other kinds ignore it.
pub fn solve(model: &QuboModel, config: &SubSolverConfig, warm: Option<&Assignment>) -> Result<SolveResult> {
    config.validate()?;
    match config.resolve(model.num_vars()) {
        SolverKind::Exact => solve_exact(model, config.params.exact_cap),
        SolverKind::Anneal => solve_anneal(model, config),
        SolverKind::Tabu => solve_tabu(model, config),
        SolverKind::Greedy => {
            let start = warm.cloned().unwrap_or_else(|| Assignment::zeros(model.num_vars()));
            greedy::solve_greedy_bounded(model, start, config.budget)
        }
        SolverKind::External => solve_external(model, config),
        SolverKind::Auto => unreachable!("resolve never yields auto"),
    }
}

#[cfg(test)]
pub(crate) mod test_models {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::qubo::{QuboBuilder, QuboModel};

    pub fn two_var() -> QuboModel {
        QuboModel::new(vec![1.0, 3.0], &[(0, 1, -4.0)], 0.0).unwrap()
    }

    /// Dense random model with coefficients uniform on `[-1, 1]`.
    pub fn random_model(n: usize, seed: u64) -> QuboModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = QuboBuilder::new(n);
        for i in 0..n {
            b.add_linear(i, rng.gen_range(-1.0..1.0));
            for j in (i + 1)..n {
                b.add_coupling(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        b.add_constant(rng.gen_range(-1.0..1.0));
        b.build().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_models::*;
    use super::*;

    #[test]
    fn auto_resolves_by_size() {
        let cfg = SubSolverConfig::new(SolverKind::Auto, 0);
        assert_eq!(cfg.resolve(24), SolverKind::Exact);
        assert_eq!(cfg.resolve(25), SolverKind::Anneal);
    }

    #[test]
    fn config_validation() {
        assert!(SubSolverConfig::new(SolverKind::Anneal, 0)
            .with_budget(0)
            .validate()
            .is_err());
        let mut cfg = SubSolverConfig::new(SolverKind::Anneal, 0);
        cfg.params.cooling = 1.0;
        assert!(cfg.validate().is_err());
        assert!(matches!(
            SubSolverConfig::new(SolverKind::External, 0).validate(),
            Err(Error::External(crate::error::ExternalError::NoCommand))
        ));
    }

    #[test]
    fn dispatch_matches_direct_calls() {
        let m = random_model(8, 3);
        let exact = solve_exact(&m, DEFAULT_EXACT_CAP).unwrap();
        let via = solve(&m, &SubSolverConfig::new(SolverKind::Auto, 1), None).unwrap();
        assert_eq!(via, exact);
        let cfg = SubSolverConfig::new(SolverKind::Tabu, 5);
        assert_eq!(solve(&m, &cfg, None).unwrap(), solve_tabu(&m, &cfg).unwrap());
    }

    #[test]
    fn kind_parses() {
        for k in ["auto", "exact", "anneal", "tabu", "greedy", "external"] {
            assert_eq!(k.parse::<SolverKind>().unwrap().as_str(), k);
        }
        assert!("quantum".parse::<SolverKind>().is_err());
    }

    #[test]
    fn two_var_all_kinds_reach_optimum() {
        let m = two_var();
        for kind in [SolverKind::Exact, SolverKind::Anneal, SolverKind::Tabu] {
            let r = solve(&m, &SubSolverConfig::new(kind, 9), None).unwrap();
            assert_eq!(r.energy, 0.0, "{kind}");
        }
    }
}
