//! Exact sampling and MAP for discrete pairwise graphical models.
//!
//! The proposal partitions the configuration space by conditioning on
//! single nodes; each region carries a spanning-tree upper bound in which
//! off-tree couplings are replaced by their maxima. Refinement policies
//! decide which region to split and on which node.

pub mod bench;
pub mod error;
pub mod model;
pub mod oracle;
pub mod piecewise;
pub mod policy;
pub mod subspace;
pub mod tree;

pub use bench::{policy_bench, write_bench_csv, BenchConfig, BenchRow, BenchRun};
pub use error::GmError;
pub use model::{Configuration, Edge, PairwiseModel};
pub use piecewise::{PiecewiseProposal, Region, TreeRule};
pub use policy::{GmRefiner, PolicyKind, Triple};
pub use subspace::SubspaceProposal;
pub use tree::{max_spanning_forest, prim_max_tree};
