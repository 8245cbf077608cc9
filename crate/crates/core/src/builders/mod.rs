//! Constructors for the integer lattice, the factorial tree, homogeneous
//! trees with power-law level weights, and explicit graphs loaded from JSON.

mod factorial;
mod homogeneous;
mod lattice;
mod loader;
mod tree;

pub use factorial::{
    build_factorial_tree, children_at, exact_level_measure, exact_outward_weight, FactorialTree,
    FactorialTreeSpec, FACTORIAL_DEPTH_CAP,
};
pub use homogeneous::{build_homogeneous_tree, HomogeneousTree, HomogeneousTreeSpec, LevelEntry};
pub use lattice::{ball_by_box_scan, build_lattice, Euclidean, Lattice, LatticePoint, LatticeSpec, MAX_DIM};
pub use loader::{load_graph_json, parse_graph_json};
pub use tree::{TreeHop, TreePath};
