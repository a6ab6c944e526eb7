use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use hwd::graph::{parse_dimacs, parse_edge_list};
use hwd::{DistanceProvider, LoadReport, WeightedGraph};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// `.gr` extension or a `p sp` line selects DIMACS, otherwise edge list.
    #[default]
    Auto,
    Dimacs,
    Edges,
}

/// Input fingerprint echoed in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct InputInfo {
    pub path: PathBuf,
    pub format: InputFormat,
    pub vertices: usize,
    pub edges: usize,
    pub self_loops_dropped: usize,
    pub parallel_edges_collapsed: usize,
    /// Weight multiplier applied before the construction; 1 when unscaled.
    pub scale: f64,
    /// SHA-256 of the normalized edge list.
    pub sha256: String,
}

pub struct Input {
    pub graph: WeightedGraph,
    pub info: InputInfo,
}

impl Input {
    /// Distances on the graph as given.
    pub fn provider(&self) -> DistanceProvider {
        DistanceProvider::new(&self.graph)
    }

    /// Distances rescaled so the minimum distance exceeds 1; records the factor.
    pub fn rescaled_provider(&mut self) -> Result<DistanceProvider> {
        let (g, f) = self.graph.rescaled()?;
        self.info.scale = f;
        Ok(DistanceProvider::new(&g))
    }
}

fn sniff(path: &Path, text: &str) -> InputFormat {
    if path.extension().is_some_and(|e| e == "gr") {
        return InputFormat::Dimacs;
    }
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    match first {
        Some(l) if l.starts_with("p ") || l.starts_with("c ") || l == "c" => InputFormat::Dimacs,
        _ => InputFormat::Edges,
    }
}

pub fn fingerprint(g: &WeightedGraph) -> String {
    let mut h = Sha256::new();
    h.update((g.vertex_count() as u64).to_le_bytes());
    for &(u, v, w) in g.edges() {
        h.update((u as u64).to_le_bytes());
        h.update((v as u64).to_le_bytes());
        h.update(w.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &Path, format: InputFormat) -> Result<Input> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let format = match format {
        InputFormat::Auto => sniff(path, &text),
        f => f,
    };
    let (graph, rep): (WeightedGraph, LoadReport) = match format {
        InputFormat::Dimacs => parse_dimacs(&text),
        _ => parse_edge_list(&text),
    }
    .with_context(|| format!("parsing {}", path.display()))?;
    let info = InputInfo {
        path: path.to_path_buf(),
        format,
        vertices: rep.vertices,
        edges: rep.edges,
        self_loops_dropped: rep.self_loops_dropped,
        parallel_edges_collapsed: rep.parallel_edges_collapsed,
        scale: 1.0,
        sha256: fingerprint(&graph),
    };
    Ok(Input { graph, info })
}

/// Whitespace-separated 0-based vertex ids; `#` starts a comment. Duplicates are dropped.
pub fn load_terminals(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split_whitespace() {
            let v: usize = tok
                .parse()
                .with_context(|| format!("{}:{}: bad terminal id '{tok}'", path.display(), idx + 1))?;
            if v >= n {
                bail!("{}:{}: terminal {v} out of range 0..{n}", path.display(), idx + 1);
            }
            out.push(v);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
