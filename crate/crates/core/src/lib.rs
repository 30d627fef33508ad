//! Balanced, spatially coherent bipartitioning of a zone grid, posed as a QUBO
//! and solved by impact-driven decomposition.
//!
//! * [`qubo`]: canonical model, energy and flip deltas.
//! * [`zoning`]: instance generation, objective builders, file formats.
//! * [`subsolvers`]: exact, annealing, tabu, greedy and external backends.
//! * [`decomposition`]: active-set selection and subQUBO extraction.
//! * [`engine`]: the iterative coordination loop and its baselines.
//! * [`experiment`]: matched-budget method comparisons.
//! * [`render`]: SVG / PPM partition maps and impact heatmaps.

#![allow(clippy::needless_range_loop)]

pub mod decomposition;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod qubo;
pub mod render;
pub mod subsolvers;
pub mod zoning;

pub use error::{Error, ExternalError, Result};
pub use qubo::{Assignment, QuboBuilder, QuboModel};
pub use zoning::{Partition, TrafficInstance};
