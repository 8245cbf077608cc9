//! Semilinear inequalities `Δu + v·u^σ ≤ 0` on weighted graphs: discrete
//! calculus, balls and volume growth, explicit positive supersolutions, the
//! capacity argument as a numerical certificate, and radial shooting on
//! trees.

pub mod builders;
pub mod calculus;
pub mod error;
pub mod graph;
pub mod growth;
pub mod levels;
pub mod metric;
pub mod radial;
pub mod supersolution;
pub mod verifier;

pub use error::{Error, GraphError, Result};
pub use graph::{FiniteGraph, Flavor, TableFunction, VertexFunction, WeightedGraph};
pub use metric::{BallRegion, MetricKind, PseudoMetric, TableMetric};
