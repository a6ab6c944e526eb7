//! Strong sparse covers and sparse partition covers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::metric::DistanceProvider;
use crate::spc::{build_spc_local_search, local_sparsity, minimalize_spc, towns_and_sprawl, HittingSetStrategy};
use crate::vset::VertexSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(rename_all = "kebab-case")]
pub enum ClusterKind {
    /// `ball(anchor, radius)` around a hub.
    HubBall,
    /// `{u : d(u, ball(anchor,(2+ε)r)) ≤ εr}` around a hub.
    HubCluster,
    Town,
    Singleton,
}

impl ClusterKind {
    fn radius_form(self) -> bool {
        matches!(self, ClusterKind::HubBall | ClusterKind::HubCluster)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct CoverCluster {
    pub kind: ClusterKind,
    pub anchor: usize,
    pub members: VertexSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct Sparsity {
    pub max: usize,
    /// `histogram[k]` = number of vertices in exactly `k` clusters.
    pub histogram: Vec<usize>,
    pub per_vertex: Vec<usize>,
}

impl Sparsity {
    pub fn count(n: usize, clusters: &[CoverCluster]) -> Self {
        let mut per_vertex = vec![0usize; n];
        for c in clusters {
            for v in c.members.iter() {
                per_vertex[v] += 1;
            }
        }
        let max = per_vertex.iter().copied().max().unwrap_or(0);
        let mut histogram = vec![0usize; max + 1];
        for &k in &per_vertex {
            histogram[k] += 1;
        }
        Sparsity { max, histogram, per_vertex }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct SparseCover {
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub eps: f64,
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub padded_radius: f64,
    /// Local sparsity of the underlying minimal cover.
    pub spc_sparsity: usize,
    pub hubs: VertexSet,
    pub clusters: Vec<CoverCluster>,
    pub sparsity: Sparsity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct SparsePartitionCover {
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub eps: f64,
    pub r: f64,
    pub padded_radius: f64,
    pub clusters: Vec<CoverCluster>,
    /// Cluster ids per partition; partition 0 holds towns and sprawl singletons.
    pub partitions: Vec<Vec<usize>>,
    pub sparsity: Sparsity,
}

/// Hub balls of radius `αr` plus towns, for `r = Δ/(2α)`, `α = 2.8+6ε`.
pub fn sparse_cover(dp: &DistanceProvider, delta: f64, eps: f64) -> HwdResult<SparseCover> {
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(HwdError::param(format!("eps must lie in (0, 1/10], got {eps}")));
    }
    if !(delta > 0.0) {
        return Err(HwdError::param(format!("Delta must be positive, got {delta}")));
    }
    let alpha = 2.8 + 6.0 * eps;
    let beta = 0.8 + 2.0 * eps;
    let r = delta / (2.0 * alpha);
    let spc = minimalize_spc(dp, &build_spc_local_search(dp, r, eps, HittingSetStrategy::default())?)?;
    let towns = towns_and_sprawl(dp, &spc)?;
    let (s, _) = local_sparsity(dp, &spc);
    let mut clusters: Vec<CoverCluster> = spc
        .hubs
        .iter()
        .map(|x| CoverCluster { kind: ClusterKind::HubBall, anchor: x, members: dp.ball(x, alpha * r) })
        .collect();
    clusters.extend(towns.towns.iter().map(|t| CoverCluster {
        kind: ClusterKind::Town,
        anchor: t.center,
        members: t.members.clone(),
    }));
    let sparsity = Sparsity::count(dp.n(), &clusters);
    Ok(SparseCover {
        delta,
        eps,
        r,
        alpha,
        beta,
        padded_radius: delta / 8.0,
        spc_sparsity: s,
        hubs: spc.hubs,
        clusters,
        sparsity,
    })
}

/// Towns and sprawl singletons, then greedily colored hub clusters, for `r = Δ/(4(1+ε))`.
pub fn sparse_partition_cover(dp: &DistanceProvider, delta: f64, eps: f64) -> HwdResult<SparsePartitionCover> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(HwdError::param(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(delta > 0.0) {
        return Err(HwdError::param(format!("Delta must be positive, got {delta}")));
    }
    let n = dp.n();
    let r = delta / (4.0 * (1.0 + eps));
    let spc = minimalize_spc(dp, &build_spc_local_search(dp, r, eps, HittingSetStrategy::default())?)?;
    let towns = towns_and_sprawl(dp, &spc)?;
    let mut clusters: Vec<CoverCluster> = towns
        .towns
        .iter()
        .map(|t| CoverCluster { kind: ClusterKind::Town, anchor: t.center, members: t.members.clone() })
        .collect();
    clusters.extend(towns.sprawl.iter().map(|v| CoverCluster {
        kind: ClusterKind::Singleton,
        anchor: v,
        members: VertexSet::from_sorted(vec![v]),
    }));
    let mut partitions = vec![(0..clusters.len()).collect::<Vec<_>>()];
    let tol = dp.tol();
    let hub_clusters: Vec<CoverCluster> = spc
        .hubs
        .as_slice()
        .par_iter()
        .map(|&x| {
            let core = dp.ball(x, (2.0 + eps) * r);
            let members = (0..n)
                .filter(|&u| {
                    let row = dp.row(u);
                    core.iter().any(|w| row[w] <= eps * r + tol)
                })
                .collect::<Vec<_>>();
            CoverCluster { kind: ClusterKind::HubCluster, anchor: x, members: VertexSet::from_sorted(members) }
        })
        .collect();
    let mut color_members: Vec<Vec<bool>> = Vec::new();
    for c in hub_clusters {
        let id = clusters.len();
        let color = (0..color_members.len())
            .find(|&k| c.members.iter().all(|v| !color_members[k][v]))
            .unwrap_or_else(|| {
                color_members.push(vec![false; n]);
                partitions.push(Vec::new());
                color_members.len() - 1
            });
        for v in c.members.iter() {
            color_members[color][v] = true;
        }
        partitions[color + 1].push(id);
        clusters.push(c);
    }
    let sparsity = Sparsity::count(n, &clusters);
    Ok(SparsePartitionCover { delta, eps, r, padded_radius: eps * r, clusters, partitions, sparsity })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverViolation {
    Diameter { cluster: usize, value: f64, bound: f64 },
    Padding { vertex: usize },
    Sparsity { vertex: usize, recorded: usize, actual: usize },
    Overlap { partition: usize, vertex: usize },
}

/// Checks diameter (radius form `Δ/2` for hub clusters, exact strong diameter otherwise),
/// padding of `ball(v, padded_radius)`, recorded membership counts and, when partitions are
/// given, per-partition disjointness.
pub fn verify_cover(
    dp: &DistanceProvider,
    clusters: &[CoverCluster],
    recorded: Option<&Sparsity>,
    partitions: Option<&[Vec<usize>]>,
    delta: f64,
    padded_radius: f64,
) -> Option<CoverViolation> {
    let n = dp.n();
    let g = dp.graph();
    let diam = clusters.par_iter().enumerate().find_map_first(|(k, c)| {
        if c.members.iter().any(|v| v >= n) || c.members.is_empty() {
            return Some(CoverViolation::Diameter { cluster: k, value: f64::INFINITY, bound: delta });
        }
        if c.kind.radius_form() {
            let row = dp.row(c.anchor);
            let far = c.members.iter().map(|u| row[u]).fold(0.0, f64::max);
            dp.gt(far, delta / 2.0).then_some(CoverViolation::Diameter { cluster: k, value: far, bound: delta / 2.0 })
        } else {
            let sd = g.strong_diameter(&c.members);
            dp.gt(sd, delta).then_some(CoverViolation::Diameter { cluster: k, value: sd, bound: delta })
        }
    });
    if diam.is_some() {
        return diam;
    }
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, c) in clusters.iter().enumerate() {
        for v in c.members.iter() {
            by_vertex[v].push(k);
        }
    }
    let pad = (0..n).into_par_iter().find_map_first(|v| {
        let ball = dp.ball(v, padded_radius);
        let ok = by_vertex[v].iter().any(|&k| ball.is_subset(&clusters[k].members));
        (!ok).then_some(CoverViolation::Padding { vertex: v })
    });
    if pad.is_some() {
        return pad;
    }
    if let Some(rec) = recorded {
        for v in 0..n {
            let recorded = rec.per_vertex.get(v).copied().unwrap_or(usize::MAX);
            if recorded != by_vertex[v].len() {
                return Some(CoverViolation::Sparsity { vertex: v, recorded, actual: by_vertex[v].len() });
            }
        }
    }
    if let Some(parts) = partitions {
        for (p, ids) in parts.iter().enumerate() {
            let mut seen = vec![false; n];
            for &k in ids {
                for v in clusters.get(k).map(|c| c.members.as_slice()).unwrap_or(&[]) {
                    if std::mem::replace(&mut seen[*v], true) {
                        return Some(CoverViolation::Overlap { partition: p, vertex: *v });
                    }
                }
            }
        }
    }
    None
}

impl SparseCover {
    pub fn verify(&self, dp: &DistanceProvider) -> Option<CoverViolation> {
        verify_cover(dp, &self.clusters, Some(&self.sparsity), None, self.delta, self.padded_radius)
    }

    /// Hub balls whose induced subgraph has strong diameter above `Δ` (reported only).
    pub fn induced_diameter_flags(&self, dp: &DistanceProvider) -> Vec<(usize, f64)> {
        self.clusters
            .par_iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ClusterKind::HubBall)
            .filter_map(|(k, c)| {
                let sd = dp.graph().strong_diameter(&c.members);
                dp.gt(sd, self.delta).then_some((k, sd))
            })
            .collect()
    }
}

impl SparsePartitionCover {
    pub fn verify(&self, dp: &DistanceProvider) -> Option<CoverViolation> {
        verify_cover(dp, &self.clusters, Some(&self.sparsity), Some(&self.partitions), self.delta, self.padded_radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    #[test]
    fn star_cover() {
        let dp = DistanceProvider::new(&generate::star(6).unwrap());
        // r = 1 at eps = 0.1.
        let alpha = 2.8 + 0.6;
        let c = sparse_cover(&dp, 2.0 * alpha, 0.1).unwrap();
        assert_eq!(c.hubs.as_slice(), &[0]);
        assert!(c.clusters.len() <= 2);
        assert!(c.verify(&dp).is_none());
    }

    #[test]
    fn huge_scale_only_towns() {
        let dp = DistanceProvider::new(&generate::grid(3).unwrap());
        let c = sparse_cover(&dp, 1000.0, 0.1).unwrap();
        assert!(c.hubs.is_empty());
        assert!(c.clusters.iter().all(|k| k.kind == ClusterKind::Town));
        assert!(c.verify(&dp).is_none());
        let p = sparse_partition_cover(&dp, 1000.0, 0.5).unwrap();
        assert_eq!(p.partitions.len(), 1);
        assert!(p.verify(&dp).is_none());
    }

    #[test]
    fn removal_and_inflation_detected() {
        let g = generate::random_geometric(80, 0.2, 3).unwrap();
        let dp = DistanceProvider::new(&g);
        let c = sparse_cover(&dp, 0.5, 0.1).unwrap();
        assert!(c.verify(&dp).is_none());
        // Drop the only cluster padding some vertex.
        let (v, k) = (0..dp.n())
            .find_map(|v| {
                let ball = dp.ball(v, c.padded_radius);
                let pads: Vec<usize> =
                    (0..c.clusters.len()).filter(|&k| ball.is_subset(&c.clusters[k].members)).collect();
                (pads.len() == 1).then(|| (v, pads[0]))
            })
            .expect("some vertex has a unique padding cluster");
        let mut fewer = c.clusters.clone();
        fewer.remove(k);
        let first = verify_cover(&dp, &fewer, None, None, c.delta, c.padded_radius);
        assert!(matches!(first, Some(CoverViolation::Padding { vertex }) if vertex <= v));
        let mut fat = c.clusters.clone();
        fat[0].members = dp.ball(fat[0].anchor, c.delta);
        assert!(matches!(
            verify_cover(&dp, &fat, None, None, c.delta, c.padded_radius),
            Some(CoverViolation::Diameter { .. })
        ));
    }
}
