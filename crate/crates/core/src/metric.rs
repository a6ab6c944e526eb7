//! Shortest-path metric access with a dense all-pairs cache or memoized rows.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;

use crate::error::{HwdError, HwdResult};
use crate::graph::WeightedGraph;
use crate::vset::VertexSet;

/// Graphs up to this many vertices get a full distance matrix.
pub const DENSE_CAP: usize = 5000;

enum Rows {
    Dense(Vec<Arc<[f64]>>),
    Lazy(RwLock<HashMap<usize, Arc<[f64]>>>),
}

/// Read-only view of `d_G`. Safe to share between threads.
pub struct DistanceProvider {
    graph: Arc<WeightedGraph>,
    rows: Rows,
    diameter: OnceLock<f64>,
}

impl DistanceProvider {
    pub fn new(g: &WeightedGraph) -> Self {
        Self::with_cap(g, DENSE_CAP)
    }

    pub fn with_cap(g: &WeightedGraph, cap: usize) -> Self {
        let graph = Arc::new(g.clone());
        let rows = if g.vertex_count() <= cap {
            let rows: Vec<Arc<[f64]>> = (0..g.vertex_count())
                .into_par_iter()
                .map(|u| Arc::from(graph.single_source_distances(u)))
                .collect();
            Rows::Dense(rows)
        } else {
            Rows::Lazy(RwLock::new(HashMap::new()))
        };
        DistanceProvider { graph, rows, diameter: OnceLock::new() }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.rows, Rows::Dense(_))
    }

    /// Distances from `u` to every vertex.
    pub fn row(&self, u: usize) -> Arc<[f64]> {
        match &self.rows {
            Rows::Dense(r) => r[u].clone(),
            Rows::Lazy(cache) => {
                if let Some(r) = cache.read().expect("distance cache poisoned").get(&u) {
                    return r.clone();
                }
                let r: Arc<[f64]> = Arc::from(self.graph.single_source_distances(u));
                cache.write().expect("distance cache poisoned").entry(u).or_insert(r).clone()
            }
        }
    }

    #[inline]
    pub fn d(&self, u: usize, v: usize) -> f64 {
        match &self.rows {
            Rows::Dense(r) => r[u][v],
            Rows::Lazy(_) => self.row(u)[v],
        }
    }

    /// Maximum pairwise distance (for lazy providers: scans every row).
    pub fn diameter(&self) -> f64 {
        *self.diameter.get_or_init(|| {
            (0..self.n())
                .into_par_iter()
                .map(|u| self.row(u).iter().copied().fold(0.0, f64::max))
                .reduce(|| 0.0, f64::max)
        })
    }

    /// Absolute comparison slack: `1e-9` times the metric's scale.
    pub fn tol(&self) -> f64 {
        1e-9 * self.diameter().max(1.0)
    }

    /// `a ≤ b` up to slack.
    #[inline]
    pub fn le(&self, a: f64, b: f64) -> bool {
        a <= b + self.tol()
    }

    /// `a > b` up to slack; the exact complement of `le`.
    #[inline]
    pub fn gt(&self, a: f64, b: f64) -> bool {
        !self.le(a, b)
    }

    /// Closed ball `{u : d(v,u) ≤ r}`.
    pub fn ball(&self, v: usize, r: f64) -> VertexSet {
        let row = self.row(v);
        let t = r + self.tol();
        VertexSet::from_sorted((0..self.n()).filter(|&u| row[u] <= t).collect())
    }

    /// `min_{x∈S} d(v,x)`; infinite for empty `S`.
    pub fn dist_to_set(&self, v: usize, s: &[usize]) -> f64 {
        let row = self.row(v);
        s.iter().map(|&x| row[x]).fold(f64::INFINITY, f64::min)
    }

    /// Nearest member of `s` to `v`, ties to the lowest id.
    pub fn nearest_in(&self, v: usize, s: &[usize]) -> Option<(usize, f64)> {
        let row = self.row(v);
        let mut best: Option<(usize, f64)> = None;
        for &x in s {
            let d = row[x];
            match best {
                Some((bx, bd)) if d > bd || (d == bd && x > bx) => {}
                _ => best = Some((x, d)),
            }
        }
        best
    }

    /// Maximum pairwise `d_G` within `S`.
    pub fn weak_diameter(&self, s: &VertexSet) -> f64 {
        let mut best = 0.0f64;
        for u in s.iter() {
            let row = self.row(u);
            for v in s.iter() {
                best = best.max(row[v]);
            }
        }
        best
    }

    /// Minimum distance between distinct vertices.
    pub fn min_distance(&self) -> HwdResult<f64> {
        if self.n() < 2 {
            return Err(HwdError::pre("minimum distance needs at least two vertices"));
        }
        Ok(self.graph.min_edge_weight().unwrap_or(f64::INFINITY))
    }

    /// Ratio between the maximum and minimum pairwise distances.
    pub fn aspect_ratio(&self) -> HwdResult<f64> {
        let lo = self.min_distance()?;
        if lo <= 0.0 {
            return Err(HwdError::pre("zero distance between distinct vertices"));
        }
        Ok(self.diameter() / lo)
    }
}
