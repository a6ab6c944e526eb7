//! JSON Schemas for reports and per-command results; `docs/schemas` holds the committed copies.

use schemars::{schema_for, Schema};

use crate::commands::{
    BenchResult, CoverResult, DecomposeResult, HierarchyResult, OracleBuildResult, PartitionCoverResult, QueryResult, SpcResult,
    TourFile, TreeCoverSummary, TspResult,
};
use crate::report::Report;

/// Schema names, in the order `hwd schema --all` writes them.
pub const NAMES: &[&str] = &[
    "report",
    "spc",
    "towns",
    "hierarchy",
    "decompose",
    "cover",
    "partition-cover",
    "treecover",
    "oracle-build",
    "oracle-query",
    "oracle-bench",
    "tsp",
    "tour",
];

pub fn schema(name: &str) -> Option<Schema> {
    Some(match name {
        "report" => schema_for!(Report),
        "spc" | "towns" => schema_for!(SpcResult),
        "hierarchy" => schema_for!(HierarchyResult),
        "decompose" => schema_for!(DecomposeResult),
        "cover" => schema_for!(CoverResult),
        "partition-cover" => schema_for!(PartitionCoverResult),
        "treecover" => schema_for!(TreeCoverSummary),
        "oracle-build" => schema_for!(OracleBuildResult),
        "oracle-query" => schema_for!(QueryResult),
        "oracle-bench" => schema_for!(BenchResult),
        "tsp" => schema_for!(TspResult),
        "tour" => schema_for!(TourFile),
        _ => return None,
    })
}

pub fn render(name: &str) -> Option<String> {
    schema(name).map(|s| serde_json::to_string_pretty(&s).unwrap_or_default() + "\n")
}
