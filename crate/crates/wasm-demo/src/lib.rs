//! WebAssembly bindings behind `www/index.html`.
//!
//! Each exported function takes a JSON request and returns a JSON response.
//! The same logic is available natively through the `*_json` functions.

use qzone::experiment::{run_method, CompareConfig, Method};
use qzone::render::{impact_svg, partition_svg, RenderSpec};
use qzone::subsolvers::SolverKind;
use qzone::zoning::{build_adjacency_qubo, build_balance_qubo, build_qubo, generate_instance};
use qzone::{Assignment, QuboModel, TrafficInstance};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_SIDE: usize = 32;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSpec {
    pub rows: usize,
    pub cols: usize,
    pub attrs: usize,
    pub seed: u64,
    pub lambda: f64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 8,
            attrs: 3,
            seed: 7,
            lambda: 1.0,
        }
    }
}

impl InstanceSpec {
    fn build(&self) -> Result<(TrafficInstance, QuboModel), String> {
        if self.rows > MAX_SIDE || self.cols > MAX_SIDE {
            return Err(format!("grid sides are limited to {MAX_SIDE} in the demo"));
        }
        let instance = generate_instance(self.rows, self.cols, self.attrs, self.seed)
            .and_then(|i| i.with_lambda(self.lambda))
            .map_err(|e| e.to_string())?;
        let model = build_qubo(&instance).map_err(|e| e.to_string())?;
        Ok((instance, model))
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveRequest {
    pub instance: InstanceSpec,
    pub method: String,
    pub q: usize,
    pub seed: u64,
    /// Total subsolver evaluations, split as in a comparison run.
    pub budget: u64,
    pub cell_size: u32,
}

impl Default for SolveRequest {
    fn default() -> Self {
        Self {
            instance: InstanceSpec::default(),
            method: "hybrid".into(),
            q: 16,
            seed: 0,
            budget: 20_000,
            cell_size: 32,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentRequest {
    #[serde(default)]
    pub instance: InstanceSpec,
    pub assignment: Vec<u8>,
    #[serde(default = "default_cell")]
    pub cell_size: u32,
}

fn default_cell() -> u32 {
    32
}

#[derive(Debug, Serialize)]
struct Breakdown {
    balance: f64,
    adjacency: f64,
    total: f64,
    cut_edges: usize,
    region_sizes: [usize; 2],
}

fn breakdown(instance: &TrafficInstance, model: &QuboModel, x: &Assignment) -> Result<Breakdown, String> {
    let hb = build_balance_qubo(instance).and_then(|m| m.evaluate(x));
    let ha = build_adjacency_qubo(instance).and_then(|m| m.evaluate(x));
    Ok(Breakdown {
        balance: hb.map_err(|e| e.to_string())?,
        adjacency: ha.map_err(|e| e.to_string())?,
        total: model.evaluate(x).map_err(|e| e.to_string())?,
        cut_edges: instance.cut_edges(x).len(),
        region_sizes: [x.len() - x.count_ones(), x.count_ones()],
    })
}

fn parse<T: for<'de> Deserialize<'de>>(request: &str) -> Result<T, String> {
    serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))
}

fn spec(cell_size: u32) -> RenderSpec {
    RenderSpec {
        cell_size,
        ..RenderSpec::default()
    }
}

/// Generates the instance, runs one method and returns the map, the
/// objective breakdown and the per-iteration trajectory.
pub fn solve_json(request: &str) -> Result<String, String> {
    let req: SolveRequest = parse(request)?;
    let (instance, model) = req.instance.build()?;
    let method: Method = req.method.parse().map_err(|e: qzone::Error| e.to_string())?;
    if req.q == 0 || req.budget == 0 {
        return Err("q and budget must be at least 1".into());
    }
    let config = CompareConfig {
        methods: vec![method],
        seeds: vec![req.seed],
        budget: req.budget,
        q: req.q,
        subsolver: SolverKind::Anneal,
        ..CompareConfig::default()
    };
    let t = run_method(&model, &config, method, req.seed).map_err(|e| e.to_string())?;
    let x = &t.final_partition.assignment;
    let iterations: Vec<Value> = t
        .iterations
        .iter()
        .map(|r| {
            json!({
                "iteration": r.iteration,
                "before": r.objective_before,
                "after": r.objective_after,
                "accepted": r.accepted,
                "active": r.active,
            })
        })
        .collect();
    Ok(json!({
        "method": method,
        "assignment": x.to_u8(),
        "objective": breakdown(&instance, &model, x)?,
        "termination": t.termination_reason,
        "evaluations": t.total_evaluations(),
        "iterations": iterations,
        "svg": partition_svg(&instance, x, &spec(req.cell_size)).map_err(|e| e.to_string())?,
    })
    .to_string())
}

fn assignment_for(req: &AssignmentRequest) -> Result<(TrafficInstance, QuboModel, Assignment), String> {
    let (instance, model) = req.instance.build()?;
    let x = Assignment::from_u8(&req.assignment).map_err(|e| e.to_string())?;
    if x.len() != instance.num_zones() {
        return Err(format!(
            "assignment has {} entries, the grid has {} zones",
            x.len(),
            instance.num_zones()
        ));
    }
    Ok((instance, model, x))
}

/// Objective breakdown and map of a hand-edited assignment.
pub fn evaluate_json(request: &str) -> Result<String, String> {
    let req: AssignmentRequest = parse(request)?;
    let (instance, model, x) = assignment_for(&req)?;
    Ok(json!({
        "objective": breakdown(&instance, &model, &x)?,
        "svg": partition_svg(&instance, &x, &spec(req.cell_size)).map_err(|e| e.to_string())?,
    })
    .to_string())
}

/// Flip impacts of every zone and a grayscale heatmap of their magnitudes.
pub fn impacts_json(request: &str) -> Result<String, String> {
    let req: AssignmentRequest = parse(request)?;
    let (instance, model, x) = assignment_for(&req)?;
    let impacts = model.impact_vector(&x).map_err(|e| e.to_string())?;
    Ok(json!({
        "impacts": impacts,
        "svg": impact_svg(&instance, &impacts, &spec(req.cell_size)).map_err(|e| e.to_string())?,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn solve(request: &str) -> Result<String, JsError> {
    solve_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn evaluate(request: &str) -> Result<String, JsError> {
    evaluate_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn impacts(request: &str) -> Result<String, JsError> {
    impacts_json(request).map_err(|e| JsError::new(&e))
}
