//! Algorithms for graphs of low highway dimension: shortest-path covers, towns,
//! hub and net hierarchies, padded decompositions, sparse covers, tree covers,
//! distance oracles and a Subset-TSP divide-and-conquer solver.

pub mod covers;
pub mod decomp;
pub mod error;
pub mod generate;
pub mod graph;
pub mod hierarchy;
pub mod metric;
pub mod nets;
pub mod oracle;
pub mod spc;
pub mod tsp;
pub mod treecover;
pub mod vset;

pub use error::{HwdError, HwdResult};
pub use graph::{load_graph, GraphFormat, LoadReport, WeightedGraph};
pub use metric::DistanceProvider;
pub use nets::NetHierarchy;
pub use vset::VertexSet;
