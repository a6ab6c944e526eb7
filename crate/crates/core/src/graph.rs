//! Weighted undirected graphs, Dijkstra, induced-subgraph distances and loaders.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::vset::VertexSet;

/// Connected undirected graph stored as a CSR adjacency.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
}

/// Normalization counters collected while building a graph.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct LoadReport {
    pub vertices: usize,
    pub edges: usize,
    pub self_loops_dropped: usize,
    pub parallel_edges_collapsed: usize,
}

impl LoadReport {
    pub fn warnings(&self) -> usize {
        self.self_loops_dropped + self.parallel_edges_collapsed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Dimacs,
    EdgeList,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl WeightedGraph {
    /// Builds a connected graph; drops self-loops and keeps the lightest parallel edge.
    pub fn from_edges(n: usize, raw: &[(usize, usize, f64)]) -> HwdResult<(Self, LoadReport)> {
        let g = Self::from_edges_unchecked(n, raw)?;
        if let Some((a, b)) = g.0.disconnected_witness() {
            return Err(HwdError::Disconnected { a, b });
        }
        Ok(g)
    }

    /// Like `from_edges` but tolerates disconnected inputs.
    pub fn from_edges_unchecked(
        n: usize,
        raw: &[(usize, usize, f64)],
    ) -> HwdResult<(Self, LoadReport)> {
        if n == 0 {
            return Err(HwdError::param("graph needs at least one vertex"));
        }
        let mut report = LoadReport { vertices: n, ..Default::default() };
        let mut norm: Vec<(usize, usize, f64)> = Vec::with_capacity(raw.len());
        for &(u, v, w) in raw {
            if u >= n || v >= n {
                return Err(HwdError::param(format!("edge ({u},{v}) has an endpoint >= {n}")));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(HwdError::param(format!("edge ({u},{v}) has invalid weight {w}")));
            }
            if u == v {
                report.self_loops_dropped += 1;
                continue;
            }
            norm.push((u.min(v), u.max(v), w));
        }
        norm.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        let before = norm.len();
        norm.dedup_by(|later, first| later.0 == first.0 && later.1 == first.1);
        report.parallel_edges_collapsed = before - norm.len();
        report.edges = norm.len();

        let mut deg = vec![0usize; n];
        for &(u, v, _) in &norm {
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; offsets[n]];
        let mut weights = vec![0f64; offsets[n]];
        for &(u, v, w) in &norm {
            targets[fill[u]] = v;
            weights[fill[u]] = w;
            fill[u] += 1;
            targets[fill[v]] = u;
            weights[fill[v]] = w;
            fill[v] += 1;
        }
        Ok((WeightedGraph { n, offsets, targets, weights, edges: norm }, report))
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v, w)` with `u < v`, sorted by endpoints.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.offsets[u], self.offsets[u + 1]);
        self.targets[a..b].iter().copied().zip(self.weights[a..b].iter().copied())
    }

    pub fn min_edge_weight(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.2).min_by(|a, b| a.total_cmp(b))
    }

    /// Two vertices from different components, or `None` when connected.
    pub fn disconnected_witness(&self) -> Option<(usize, usize)> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for (v, _) in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.iter().position(|s| !s).map(|b| (0, b))
    }

    /// Scales all weights by `factor`.
    pub fn scaled(&self, factor: f64) -> WeightedGraph {
        let mut g = self.clone();
        for w in g.weights.iter_mut() {
            *w *= factor;
        }
        for e in g.edges.iter_mut() {
            e.2 *= factor;
        }
        g
    }

    /// Rescales so the minimum pairwise distance becomes `1 + 1e-6`; returns the factor.
    /// The minimum pairwise distance equals the minimum edge weight.
    pub fn rescaled(&self) -> HwdResult<(WeightedGraph, f64)> {
        match self.min_edge_weight() {
            None => Ok((self.clone(), 1.0)),
            Some(w) if w <= 0.0 => Err(HwdError::pre(
                "zero-weight edge: distinct vertices at distance 0 cannot be rescaled",
            )),
            Some(w) => {
                let f = (1.0 + 1e-6) / w;
                Ok((self.scaled(f), f))
            }
        }
    }

    pub fn single_source_distances(&self, src: usize) -> Vec<f64> {
        dijkstra(self, src, None)
    }

    /// Shortest-path distance inside `G[S]`; infinite when disconnected there.
    pub fn induced_distance(&self, s: &VertexSet, u: usize, v: usize) -> HwdResult<f64> {
        if !s.contains(u) || !s.contains(v) {
            return Err(HwdError::pre(format!("vertices {u},{v} must both lie in S")));
        }
        let mask = self.mask(s);
        Ok(dijkstra(self, u, Some(&mask))[v])
    }

    /// Distances from `src` inside `G[S]` given as a membership mask.
    pub fn induced_distances_masked(&self, mask: &[bool], src: usize) -> Vec<f64> {
        dijkstra(self, src, Some(mask))
    }

    pub fn mask(&self, s: &VertexSet) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for x in s.iter() {
            m[x] = true;
        }
        m
    }

    /// Maximum pairwise distance inside `G[S]`; infinite when `G[S]` is disconnected.
    pub fn strong_diameter(&self, s: &VertexSet) -> f64 {
        let mask = self.mask(s);
        let mut best = 0.0f64;
        for u in s.iter() {
            let d = dijkstra(self, u, Some(&mask));
            for v in s.iter() {
                best = best.max(d[v]);
            }
        }
        best
    }
}

/// Dijkstra restricted to `mask` when given (the source must be in the mask).
fn dijkstra(g: &WeightedGraph, src: usize, mask: Option<&[bool]>) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapItem(0.0, src));
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for (v, w) in g.neighbors(u) {
            if let Some(m) = mask {
                if !m[v] {
                    continue;
                }
            }
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    dist
}

fn parse_err(line: usize, msg: impl Into<String>) -> HwdError {
    HwdError::Parse { line, msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> HwdResult<T> {
    let t = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    t.parse().map_err(|_| parse_err(line, format!("bad {what} '{t}'")))
}

/// Parses DIMACS `.gr` text (1-based ids); returns the graph and its load report.
/// An arc whose reverse with equal weight is already present is its mirror, not a parallel edge.
pub fn parse_dimacs(text: &str) -> HwdResult<(WeightedGraph, LoadReport)> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut unmatched: HashMap<(usize, usize, u64), usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            None | Some("c") => continue,
            Some("p") => {
                if n.is_some() {
                    return Err(parse_err(line, "duplicate problem line"));
                }
                let kind = it.next().unwrap_or("");
                if kind != "sp" {
                    return Err(parse_err(line, format!("expected 'p sp', found 'p {kind}'")));
                }
                let nv: usize = parse_num(it.next(), line, "vertex count")?;
                let _m: usize = parse_num(it.next(), line, "arc count")?;
                n = Some(nv);
            }
            Some("a") => {
                let nv = n.ok_or_else(|| parse_err(line, "arc before problem line"))?;
                let u: usize = parse_num(it.next(), line, "tail")?;
                let v: usize = parse_num(it.next(), line, "head")?;
                let w: f64 = parse_num(it.next(), line, "weight")?;
                if u == 0 || v == 0 || u > nv || v > nv {
                    return Err(parse_err(line, format!("vertex id out of range 1..={nv}")));
                }
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(parse_err(line, format!("invalid weight {w}")));
                }
                match unmatched.get_mut(&(v, u, w.to_bits())) {
                    Some(c) if *c > 0 => *c -= 1,
                    _ => {
                        *unmatched.entry((u, v, w.to_bits())).or_default() += 1;
                        edges.push((u - 1, v - 1, w));
                    }
                }
            }
            Some(tok) => return Err(parse_err(line, format!("unknown line type '{tok}'"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(0, "missing problem line"))?;
    WeightedGraph::from_edges(n, &edges)
}

/// Parses a whitespace edge list `u v w` (0-based); `#` starts a comment line.
pub fn parse_edge_list(text: &str) -> HwdResult<(WeightedGraph, LoadReport)> {
    let mut edges = Vec::new();
    let mut n = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut it = body.split_whitespace();
        let u: usize = parse_num(it.next(), line, "u")?;
        let v: usize = parse_num(it.next(), line, "v")?;
        let w: f64 = parse_num(it.next(), line, "w")?;
        if it.next().is_some() {
            return Err(parse_err(line, "expected exactly three fields"));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(parse_err(line, format!("invalid weight {w}")));
        }
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v, w));
    }
    if n == 0 {
        return Err(parse_err(0, "no edges"));
    }
    WeightedGraph::from_edges(n, &edges)
}

pub fn load_graph(path: &Path, format: GraphFormat) -> HwdResult<(WeightedGraph, LoadReport)> {
    let text = std::fs::read_to_string(path)?;
    match format {
        GraphFormat::Dimacs => parse_dimacs(&text),
        GraphFormat::EdgeList => parse_edge_list(&text),
    }
}

/// DIMACS text with both arc directions.
pub fn to_dimacs(g: &WeightedGraph) -> String {
    let mut s = format!("p sp {} {}\n", g.n, 2 * g.edges.len());
    for &(u, v, w) in &g.edges {
        s.push_str(&format!("a {} {} {}\na {} {} {}\n", u + 1, v + 1, w, v + 1, u + 1, w));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> WeightedGraph {
        WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0)]).unwrap().0
    }

    #[test]
    fn path_distances() {
        assert_eq!(path3().single_source_distances(0), vec![0.0, 1.0, 3.0]);
    }

    #[test]
    fn normalization_counts() {
        let (g, rep) =
            WeightedGraph::from_edges(2, &[(0, 1, 3.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 2.0)]);
        assert_eq!(rep.self_loops_dropped, 1);
        assert_eq!(rep.parallel_edges_collapsed, 1);
    }

    #[test]
    fn disconnected_names_components() {
        let err = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap_err();
        match err {
            HwdError::Disconnected { a, b } => assert_eq!((a, b), (0, 2)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn dimacs_path() {
        let (g, _) = parse_dimacs("c hi\np sp 3 2\na 1 2 1\na 2 3 2\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.single_source_distances(0), vec![0.0, 1.0, 3.0]);
    }

    #[test]
    fn dimacs_keeps_min_of_both_directions() {
        let (g, _) = parse_dimacs("p sp 2 2\na 1 2 5\na 2 1 3\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1, 3.0)]);
    }

    #[test]
    fn dimacs_id_out_of_range() {
        match parse_dimacs("p sp 2 1\na 1 3 1\n").unwrap_err() {
            HwdError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn edge_list_single() {
        let (g, _) = parse_edge_list("0 1 1.5\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1, 1.5)]);
    }

    #[test]
    fn edge_list_bad_token_line() {
        match parse_edge_list("0 1 1\n1 x 2\n").unwrap_err() {
            HwdError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn induced_on_cycle() {
        let g = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])
            .unwrap()
            .0;
        let s = VertexSet::from_vec(vec![0, 1, 2]);
        assert_eq!(g.induced_distance(&s, 0, 2).unwrap(), 2.0);
        let s2 = VertexSet::from_vec(vec![0, 2]);
        assert!(g.induced_distance(&s2, 0, 2).unwrap().is_infinite());
        assert!(g.induced_distance(&s2, 0, 1).is_err());
    }

    #[test]
    fn strong_exceeds_weak() {
        // Cluster {a, b, c}: a-b through a cheap outside vertex, inside only via c.
        // weak diameter 4 (a..b via x), strong diameter 6 (a-c-b).
        let g = WeightedGraph::from_edges(4, &[(0, 3, 2.0), (3, 1, 2.0), (0, 2, 3.0), (2, 1, 3.0)])
            .unwrap()
            .0;
        let s = VertexSet::from_vec(vec![0, 1, 2]);
        assert_eq!(g.strong_diameter(&s), 6.0);
    }

    #[test]
    fn rescale_sets_min_distance() {
        let (g, f) = path3().rescaled().unwrap();
        assert!((f - (1.0 + 1e-6)).abs() < 1e-12);
        assert!(g.min_edge_weight().unwrap() > 1.0);
    }

    #[test]
    fn dimacs_roundtrip() {
        let g = path3();
        let (h, _) = parse_dimacs(&to_dimacs(&g)).unwrap();
        assert_eq!(g.edges(), h.edges());
    }
}
