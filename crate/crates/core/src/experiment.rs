//! Matched-budget comparisons between the direct, guided and unguided methods.
//!
//! Every method gets the same total allowance of subsolver evaluations. The
//! direct method spends it in one full-problem call; the iterative methods
//! split it evenly over their iteration cap, so a run that stops early spends
//! less than its allowance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decomposition::Ranking;
use crate::engine::{
    run_classical_baseline, run_direct, run_hybrid, HybridConfig, InitPolicy, RunTrajectory, Selection,
};
use crate::error::{Error, Result};
use crate::qubo::QuboModel;
use crate::subsolvers::{SolverKind, SolverParams, SubSolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "direct")]
    Direct,
    #[serde(rename = "hybrid")]
    Hybrid,
    #[serde(rename = "baseline-random")]
    BaselineRandom,
    #[serde(rename = "baseline-roundrobin")]
    BaselineRoundRobin,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Direct,
        Method::Hybrid,
        Method::BaselineRandom,
        Method::BaselineRoundRobin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Hybrid => "hybrid",
            Method::BaselineRandom => "baseline-random",
            Method::BaselineRoundRobin => "baseline-roundrobin",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Total subsolver evaluations allowed per run.
    pub budget: u64,
    pub q: usize,
    pub max_iterations: usize,
    pub patience: usize,
    pub subsolver: SolverKind,
    #[serde(default)]
    pub subsolver_params: SolverParams,
    pub ranking: Ranking,
    pub init: InitPolicy,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Direct, Method::Hybrid, Method::BaselineRandom],
            seeds: (0..10).collect(),
            budget: 20_000,
            q: 16,
            max_iterations: 20,
            patience: 2,
            subsolver: SolverKind::Anneal,
            subsolver_params: SolverParams::default(),
            ranking: Ranking::MostNegative,
            init: InitPolicy::Random,
        }
    }
}

impl CompareConfig {
    /// Per-call subsolver budget (sweeps or moves) for `method` on `n` variables.
    pub fn per_call_budget(&self, method: Method, n: usize) -> u64 {
        let vars_per_call = match method {
            Method::Direct => n,
            _ => self.q.min(n) * self.max_iterations,
        };
        (self.budget / vars_per_call.max(1) as u64).max(1)
    }

    pub fn hybrid_config(&self, method: Method, seed: u64, n: usize) -> HybridConfig {
        let selection = match method {
            Method::BaselineRandom => Selection::Random,
            Method::BaselineRoundRobin => Selection::RoundRobin,
            _ => Selection::Impact,
        };
        let mut subsolver = SubSolverConfig::new(self.subsolver, seed).with_budget(self.per_call_budget(method, n));
        subsolver.params = self.subsolver_params.clone();
        HybridConfig {
            q: self.q,
            selection,
            ranking: self.ranking,
            subsolver,
            max_iterations: self.max_iterations,
            patience: self.patience,
            init: self.init,
            seed,
            ..HybridConfig::default()
        }
    }
}

/// Runs one method with one seed under the comparison's budget split.
pub fn run_method(model: &QuboModel, config: &CompareConfig, method: Method, seed: u64) -> Result<RunTrajectory> {
    let n = model.num_vars();
    let hc = config.hybrid_config(method, seed, n);
    match method {
        Method::Direct => run_direct(model, &hc.subsolver),
        Method::Hybrid => run_hybrid(model, &hc),
        Method::BaselineRandom | Method::BaselineRoundRobin => run_classical_baseline(model, &hc),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRun {
    pub method: Method,
    pub seed: u64,
    pub final_objective: f64,
    pub iterations: usize,
    pub accepted: usize,
    pub evaluations: u64,
    pub termination: String,
}

impl MethodRun {
    pub fn from_trajectory(method: Method, seed: u64, t: &RunTrajectory) -> Self {
        Self {
            method,
            seed,
            final_objective: t.final_partition.objective,
            iterations: t.iterations.len(),
            accepted: t.iterations.iter().filter(|r| r.accepted).count(),
            evaluations: t.total_evaluations(),
            termination: t.termination_reason.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub median: f64,
    pub best: f64,
    pub mean_evaluations: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: CompareConfig,
    /// One row per method, ascending by median objective.
    pub rows: Vec<ReportRow>,
    /// Every run, ordered by method then seed.
    pub runs: Vec<MethodRun>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl ComparisonReport {
    /// Aggregates runs in any order into a deterministic report.
    pub fn from_runs(config: CompareConfig, mut runs: Vec<MethodRun>) -> Self {
        runs.sort_by_key(|r| (r.method, r.seed));
        let mut rows: Vec<ReportRow> = config
            .methods
            .iter()
            .filter_map(|&method| {
                let mine: Vec<&MethodRun> = runs.iter().filter(|r| r.method == method).collect();
                if mine.is_empty() {
                    return None;
                }
                let objs: Vec<f64> = mine.iter().map(|r| r.final_objective).collect();
                Some(ReportRow {
                    method,
                    median: median(&objs),
                    best: objs.iter().copied().fold(f64::INFINITY, f64::min),
                    mean_evaluations: mine.iter().map(|r| r.evaluations as f64).sum::<f64>() / mine.len() as f64,
                    runs: mine.len(),
                })
            })
            .collect();
        rows.sort_by(|a, b| a.median.total_cmp(&b.median).then(a.method.cmp(&b.method)));
        Self { config, rows, runs }
    }

    pub fn row(&self, method: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Final objectives of `method`, in seed order.
    pub fn finals(&self, method: Method) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.final_objective)
            .collect()
    }

    /// Seeds on which `a` ends strictly below `b`.
    pub fn wins(&self, a: Method, b: Method) -> usize {
        self.finals(a)
            .iter()
            .zip(self.finals(b))
            .filter(|(x, y)| **x < *y)
            .count()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{:<22} {:>14} {:>14} {:>14} {:>5}\n",
            "method", "median", "best", "mean_evals", "runs"
        );
        for r in &self.rows {
            s += &format!(
                "{:<22} {:>14.4} {:>14.4} {:>14.1} {:>5}\n",
                r.method.as_str(),
                r.median,
                r.best,
                r.mean_evaluations,
                r.runs
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Runs every configured method on every seed, sequentially.
pub fn compare(model: &QuboModel, config: &CompareConfig) -> Result<ComparisonReport> {
    let mut runs = Vec::new();
    for &method in &config.methods {
        for &seed in &config.seeds {
            let t = run_method(model, config, method, seed)?;
            runs.push(MethodRun::from_trajectory(method, seed, &t));
        }
    }
    Ok(ComparisonReport::from_runs(config.clone(), runs))
}
