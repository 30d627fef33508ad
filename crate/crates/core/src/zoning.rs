//! Traffic-zone instances and their QUBO objectives.
//!
//! Zones sit on a `rows × cols` grid (zone index `r·cols + c`). Each zone
//! carries `m` nonnegative workload attributes. The objective is the sum of a
//! balance penalty, which pushes every attribute total in region A toward half
//! the system total, and a λ-weighted penalty on adjacent zones that land in
//! different regions.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{Assignment, QuboBuilder, QuboModel};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_ATTRIBUTES: usize = 3;

/// An undirected adjacency edge with `i < j` and weight `w > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

impl From<(usize, usize, f64)> for Edge {
    fn from((i, j, w): (usize, usize, f64)) -> Self {
        Edge { i, j, w }
    }
}

impl From<Edge> for (usize, usize, f64) {
    fn from(e: Edge) -> Self {
        (e.i, e.j, e.w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficInstance {
    rows: usize,
    cols: usize,
    attributes: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    lambda: f64,
    seed: Option<u64>,
}

impl TrafficInstance {
    /// Validated constructor. `attributes` holds one row of `m` values per zone.
    pub fn new(
        rows: usize,
        cols: usize,
        attributes: Vec<Vec<f64>>,
        edges: Vec<Edge>,
        lambda: f64,
        seed: Option<u64>,
    ) -> Result<Self> {
        let inst = Self {
            rows,
            cols,
            attributes,
            edges,
            lambda,
            seed,
        };
        inst.validate()
            .map_err(|(path, message)| Error::Invalid(format!("{path}: {message}")))?;
        Ok(inst)
    }

    fn validate(&self) -> std::result::Result<(), (String, String)> {
        let fail = |path: String, message: String| Err((path, message));
        if self.rows == 0 || self.cols == 0 {
            return fail("rows/cols".into(), "grid dimensions must be at least 1".into());
        }
        let n = self.rows * self.cols;
        if self.attributes.len() != n {
            return fail(
                "attributes".into(),
                format!("{} rows, expected rows·cols = {n}", self.attributes.len()),
            );
        }
        let m = self.attributes[0].len();
        if m == 0 {
            return fail("attributes[0]".into(), "at least one attribute is required".into());
        }
        for (i, row) in self.attributes.iter().enumerate() {
            if row.len() != m {
                return fail(
                    format!("attributes[{i}]"),
                    format!("{} values, expected {m}", row.len()),
                );
            }
            for (k, &a) in row.iter().enumerate() {
                if !a.is_finite() || a < 0.0 {
                    return fail(
                        format!("attributes[{i}][{k}]"),
                        format!("{a} is not a finite nonnegative value"),
                    );
                }
            }
        }
        let mut seen = BTreeSet::new();
        for (k, e) in self.edges.iter().enumerate() {
            if !(e.i < e.j && e.j < n) {
                return fail(
                    format!("edges[{k}]"),
                    format!("({}, {}) must satisfy i < j < {n}", e.i, e.j),
                );
            }
            if !e.w.is_finite() || e.w <= 0.0 {
                return fail(format!("edges[{k}]"), format!("weight {} must be finite and > 0", e.w));
            }
            if !seen.insert((e.i, e.j)) {
                return fail(format!("edges[{k}]"), format!("duplicate edge ({}, {})", e.i, e.j));
            }
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return fail("lambda".into(), format!("{} must be finite and >= 0", self.lambda));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_zones(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_attributes(&self) -> usize {
        self.attributes[0].len()
    }

    pub fn attributes(&self) -> &[Vec<f64>] {
        &self.attributes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Same instance with a different spatial-coherence weight.
    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Invalid(format!("lambda {lambda} must be finite and >= 0")));
        }
        self.lambda = lambda;
        Ok(self)
    }

    /// `(row, col)` of a zone index.
    pub fn coords(&self, zone: usize) -> (usize, usize) {
        (zone / self.cols, zone % self.cols)
    }

    /// Edges whose endpoints fall in different regions.
    pub fn cut_edges(&self, x: &Assignment) -> Vec<Edge> {
        self.edges.iter().filter(|e| x[e.i] != x[e.j]).copied().collect()
    }

    /// `Σᵢ A_ik xᵢ` for each attribute.
    pub fn region_totals(&self, x: &Assignment) -> Vec<f64> {
        let mut totals = vec![0.0; self.num_attributes()];
        for (row, _) in self.attributes.iter().zip(x.bits()).filter(|(_, &b)| b) {
            for (t, a) in totals.iter_mut().zip(row) {
                *t += a;
            }
        }
        totals
    }
}

/// 4-neighbour edges of a grid, unit weight, sorted by `(i, j)`.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<Edge> {
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                edges.push(Edge { i, j: i + 1, w: 1.0 });
            }
            if r + 1 < rows {
                edges.push(Edge { i, j: i + cols, w: 1.0 });
            }
        }
    }
    edges
}

/// Seeded synthetic grid instance.
///
/// Attributes are drawn i.i.d. uniform on `[0, 1)` from a ChaCha8 stream, then
/// each column is rescaled to mean 1, so every balance target equals `n / 2`.
pub fn generate_instance(rows: usize, cols: usize, m: usize, seed: u64) -> Result<TrafficInstance> {
    if rows == 0 || cols == 0 || m == 0 {
        return Err(Error::Invalid(format!(
            "rows, cols and attribute count must be at least 1 (got {rows}, {cols}, {m})"
        )));
    }
    let n = rows * cols;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attributes: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect();
    for k in 0..m {
        let mean = attributes.iter().map(|row| row[k]).sum::<f64>() / n as f64;
        // an all-zero draw is astronomically unlikely; leave such a column untouched
        if mean > 0.0 {
            for row in &mut attributes {
                row[k] /= mean;
            }
        }
    }
    TrafficInstance::new(
        rows,
        cols,
        attributes,
        grid_edges(rows, cols),
        DEFAULT_LAMBDA,
        Some(seed),
    )
}

/// Half of each attribute's system total: `T_k = ½ Σᵢ A_ik`.
pub fn balance_targets(instance: &TrafficInstance) -> Vec<f64> {
    let mut t = vec![0.0; instance.num_attributes()];
    for row in instance.attributes() {
        for (tk, a) in t.iter_mut().zip(row) {
            *tk += a;
        }
    }
    t.iter_mut().for_each(|tk| *tk *= 0.5);
    t
}

/// Expanded balance penalty `Σ_k (Σᵢ A_ik xᵢ − T_k)²`.
///
/// With `xᵢ² = xᵢ` this is `hᵢ = Σ_k (A_ik² − 2T_k A_ik)`,
/// `J_ij = Σ_k 2 A_ik A_jk` over every pair and `C = Σ_k T_k²`.
pub fn build_balance_qubo(instance: &TrafficInstance) -> Result<QuboModel> {
    let n = instance.num_zones();
    let a = instance.attributes();
    let targets = balance_targets(instance);
    let mut b = QuboBuilder::new(n);
    for (i, row) in a.iter().enumerate() {
        let h: f64 = row.iter().zip(&targets).map(|(&v, &t)| v * v - 2.0 * t * v).sum();
        b.add_linear(i, h);
        for j in (i + 1)..n {
            let c: f64 = row.iter().zip(&a[j]).map(|(&u, &v)| 2.0 * u * v).sum();
            b.add_coupling(i, j, c);
        }
    }
    b.add_constant(targets.iter().map(|t| t * t).sum());
    b.build()
}

/// Spatial penalty `λ Σ_edges W_ij (xᵢ − xⱼ)²`, each unordered edge counted once.
pub fn build_adjacency_qubo(instance: &TrafficInstance) -> Result<QuboModel> {
    let lambda = instance.lambda();
    let mut b = QuboBuilder::new(instance.num_zones());
    for e in instance.edges() {
        let w = lambda * e.w;
        b.add_linear(e.i, w);
        b.add_linear(e.j, w);
        b.add_coupling(e.i, e.j, -2.0 * w);
    }
    b.build()
}

/// Full zoning objective `H = H_B + H_A`.
pub fn build_qubo(instance: &TrafficInstance) -> Result<QuboModel> {
    let mut b = QuboBuilder::new(instance.num_zones());
    b.absorb(&build_balance_qubo(instance)?);
    b.absorb(&build_adjacency_qubo(instance)?);
    b.build()
}

/// A solved zoning configuration and its objective under the instance's QUBO.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: Assignment,
    pub objective: f64,
}

impl Partition {
    pub fn evaluate(model: &QuboModel, assignment: Assignment) -> Result<Self> {
        let objective = model.evaluate(&assignment)?;
        Ok(Self { assignment, objective })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    format_version: u32,
    rows: usize,
    cols: usize,
    num_attributes: usize,
    attributes: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    lambda: f64,
    seed: Option<u64>,
}

/// Solution file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub format_version: u32,
    pub assignment: Assignment,
    pub objective: f64,
    pub method: String,
    pub seed: Option<u64>,
    pub iterations: usize,
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, file: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Format {
        file: file.to_string(),
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn check_version(version: u32, file: &str) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(Error::Format {
            file: file.to_string(),
            path: "format_version".into(),
            message: format!("unsupported version {version}, expected {FORMAT_VERSION}"),
        });
    }
    Ok(())
}

/// Serializes an instance to its JSON text (pretty, deterministic).
pub fn instance_to_json(instance: &TrafficInstance) -> String {
    let file = InstanceFile {
        format_version: FORMAT_VERSION,
        rows: instance.rows,
        cols: instance.cols,
        num_attributes: instance.num_attributes(),
        attributes: instance.attributes.clone(),
        edges: instance.edges.clone(),
        lambda: instance.lambda,
        seed: instance.seed,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("instance serializes");
    s.push('\n');
    s
}

/// Parses and validates instance JSON. `origin` labels error messages.
pub fn instance_from_json(text: &str, origin: &str) -> Result<TrafficInstance> {
    let raw: InstanceFile = parse_json(text, origin)?;
    check_version(raw.format_version, origin)?;
    let inst = TrafficInstance {
        rows: raw.rows,
        cols: raw.cols,
        attributes: raw.attributes,
        edges: raw.edges,
        lambda: raw.lambda,
        seed: raw.seed,
    };
    inst.validate().map_err(|(path, message)| Error::Format {
        file: origin.to_string(),
        path,
        message,
    })?;
    if raw.num_attributes != inst.num_attributes() {
        return Err(Error::Format {
            file: origin.to_string(),
            path: "num_attributes".into(),
            message: format!(
                "declares {} but attribute rows hold {}",
                raw.num_attributes,
                inst.num_attributes()
            ),
        });
    }
    Ok(inst)
}

pub fn write_instance(instance: &TrafficInstance, path: &Path) -> Result<()> {
    std::fs::write(path, instance_to_json(instance)).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_instance(path: &Path) -> Result<TrafficInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    instance_from_json(&text, &path.display().to_string())
}

impl SolutionFile {
    pub fn new(partition: &Partition, method: &str, seed: Option<u64>, iterations: usize) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            assignment: partition.assignment.clone(),
            objective: partition.objective,
            method: method.to_string(),
            seed,
            iterations,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let raw: SolutionFile = parse_json(text, origin)?;
        check_version(raw.format_version, origin)?;
        if !raw.objective.is_finite() {
            return Err(Error::Format {
                file: origin.to_string(),
                path: "objective".into(),
                message: "not finite".into(),
            });
        }
        Ok(raw)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}
