//! Shortest-path covers: verification, local-search construction, minimalization,
//! sparsity, ε-net covers and hub bound reports.

mod hitting;
mod pairs;
mod towns;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::metric::DistanceProvider;
use crate::nets::gonzales_order;
use crate::vset::VertexSet;

pub use hitting::{solve_hitting_set, HittingSetInstance, HittingSetStrategy, EXACT_UNIVERSE_CAP};
pub(crate) use pairs::PairIndex;
pub use towns::{towns_and_sprawl, Town, TownDecomposition};

/// Hub set for scale `r` and accuracy `eps`. Pairs with `d ∈ (r, span·r]` need a hub `x`
/// with `d(u,x)+d(x,z) ≤ (1+eps)·d(u,z)`; `span` is `2+eps` unless widened.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct ShortestPathCover {
    pub r: f64,
    pub eps: f64,
    pub span: f64,
    pub hubs: VertexSet,
    pub minimal: bool,
}

impl ShortestPathCover {
    pub fn new(r: f64, eps: f64, hubs: VertexSet) -> Self {
        ShortestPathCover { r, eps, span: 2.0 + eps, hubs, minimal: false }
    }

    pub fn with_span(mut self, span: f64) -> Self {
        self.span = span;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct SpcViolation {
    pub u: usize,
    pub z: usize,
    pub d: f64,
    /// Smallest `(d(u,x)+d(x,z))/d(u,z)` over hubs; infinite with no hubs.
    pub best_ratio: f64,
}

/// Lowest violating pair `(u,z)`, or `None` when the cover is valid.
pub fn verify_spc(dp: &DistanceProvider, spc: &ShortestPathCover) -> Option<SpcViolation> {
    let n = dp.n();
    let tol = dp.tol();
    let (lo, hi) = (spc.r + tol, spc.span * spc.r + tol);
    let hubs = spc.hubs.as_slice();
    (0..n).into_par_iter().find_map_first(|u| {
        let du = dp.row(u);
        for z in u + 1..n {
            let d = du[z];
            if d <= lo || d > hi {
                continue;
            }
            let dz = dp.row(z);
            let lim = (1.0 + spc.eps) * d + tol;
            if hubs.iter().any(|&x| du[x] + dz[x] <= lim) {
                continue;
            }
            let best = hubs.iter().map(|&x| du[x] + dz[x]).fold(f64::INFINITY, f64::min);
            return Some(SpcViolation { u, z, d, best_ratio: best / d });
        }
        None
    })
}

/// Progress record of the local search.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct LocalSearchTrace {
    /// `|SPC|` after initialization and after each accepted iteration.
    pub sizes: Vec<usize>,
    /// Center of the densest ball in the final, rejected iteration.
    pub last_center: Option<usize>,
}

fn check_eps_unit(eps: f64) -> HwdResult<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(HwdError::param(format!("eps must lie in [0,1], got {eps}")));
    }
    Ok(())
}

pub fn build_spc_local_search(
    dp: &DistanceProvider,
    r: f64,
    eps: f64,
    strategy: HittingSetStrategy,
) -> HwdResult<ShortestPathCover> {
    Ok(local_search(dp, r, eps, 2.0 + eps, strategy)?.0)
}

/// Local search over pairs in `(r, span·r]`; returns the cover and its trace.
pub fn local_search(
    dp: &DistanceProvider,
    r: f64,
    eps: f64,
    span: f64,
    strategy: HittingSetStrategy,
) -> HwdResult<(ShortestPathCover, LocalSearchTrace)> {
    if !(r > 0.0) {
        return Err(HwdError::param(format!("r must be positive, got {r}")));
    }
    check_eps_unit(eps)?;
    let n = dp.n();
    let tol = dp.tol();
    let idx = PairIndex::build(dp, r, eps, span);
    let rad = (2.0 + 4.0 * eps) * r;
    // Every affected pair has both endpoints within this distance of the ball center.
    let reach = rad + (1.0 + eps) * span * r + tol;
    let balls: Vec<FixedBitSet> = (0..n)
        .into_par_iter()
        .map(|v| {
            let row = dp.row(v);
            let mut b = FixedBitSet::with_capacity(n);
            for u in 0..n {
                if row[u] <= rad + tol {
                    b.insert(u);
                }
            }
            b
        })
        .collect();
    let mut spc = FixedBitSet::with_capacity(n);
    spc.insert_range(..);
    let mut size = n;
    let mut trace = LocalSearchTrace { sizes: vec![n], last_center: None };
    loop {
        let (v, _) = (0..n)
            .map(|v| (v, balls[v].intersection_count(&spc)))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let mut inside = balls[v].clone();
        inside.intersect_with(&spc);
        let row = dp.row(v);
        let affected: Vec<&FixedBitSet> = idx
            .pairs
            .par_iter()
            .zip(idx.sets.par_iter())
            .filter(|((a, b), s)| row[*a] <= reach && row[*b] <= reach && !s.is_disjoint(&inside))
            .map(|(_, s)| s)
            .collect();
        let h = hitting::hit_bitsets(&affected, n, strategy);
        let mut next = spc.clone();
        next.difference_with(&balls[v]);
        for &y in &h {
            next.insert(y);
        }
        let next_size = next.count_ones(..);
        if next_size >= size {
            trace.last_center = Some(v);
            break;
        }
        spc = next;
        size = next_size;
        trace.sizes.push(size);
    }
    let cover = ShortestPathCover {
        r,
        eps,
        span,
        hubs: VertexSet::from_sorted(spc.ones().collect()),
        minimal: false,
    };
    Ok((cover, trace))
}

/// Removes hubs in decreasing id while the cover stays valid.
pub fn minimalize_spc(dp: &DistanceProvider, spc: &ShortestPathCover) -> HwdResult<ShortestPathCover> {
    if let Some(v) = verify_spc(dp, spc) {
        return Err(HwdError::pre(format!(
            "cannot minimalize an invalid cover: pair ({},{}) at distance {} has best detour ratio {}",
            v.u, v.z, v.d, v.best_ratio
        )));
    }
    let idx = PairIndex::build(dp, spc.r, spc.eps, spc.span);
    let mut hubs = FixedBitSet::with_capacity(dp.n());
    for x in spc.hubs.iter() {
        hubs.insert(x);
    }
    let mut count: Vec<usize> = idx.sets.iter().map(|s| s.intersection_count(&hubs)).collect();
    for x in spc.hubs.as_slice().iter().rev().copied() {
        let needed = idx.sets.iter().zip(&count).any(|(s, &c)| c == 1 && s.contains(x));
        if needed {
            continue;
        }
        hubs.set(x, false);
        for (s, c) in idx.sets.iter().zip(count.iter_mut()) {
            if s.contains(x) {
                *c -= 1;
            }
        }
    }
    Ok(ShortestPathCover {
        hubs: VertexSet::from_sorted(hubs.ones().collect()),
        minimal: true,
        ..spc.clone()
    })
}

/// `max_v |ball(v,(2+4ε)r) ∩ hubs|` with the lowest-id witness.
pub fn local_sparsity(dp: &DistanceProvider, spc: &ShortestPathCover) -> (usize, usize) {
    let rad = (2.0 + 4.0 * spc.eps) * spc.r + dp.tol();
    let counts: Vec<usize> = (0..dp.n())
        .into_par_iter()
        .map(|v| {
            let row = dp.row(v);
            spc.hubs.iter().filter(|&x| row[x] <= rad).count()
        })
        .collect();
    counts.iter().enumerate().fold((0, 0), |b, (v, &c)| if c > b.0 { (c, v) } else { b })
}

/// Hubs form an `(ε/2)r`-net taken as a Gonzales prefix.
pub fn epsnet_spc(dp: &DistanceProvider, r: f64, eps: f64) -> HwdResult<ShortestPathCover> {
    if !(eps > 0.0) {
        return Err(HwdError::param("eps-net covers need eps > 0 (eps = 0 needs unboundedly many hubs)"));
    }
    if !(r > 0.0) {
        return Err(HwdError::param(format!("r must be positive, got {r}")));
    }
    let (order, radii) = gonzales_order(dp);
    let delta = eps / 2.0 * r;
    let k = (1..order.len()).find(|&k| radii[k] <= delta).unwrap_or(order.len());
    Ok(ShortestPathCover::new(r, eps, VertexSet::from_vec(order[..k].to_vec())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct HubBoundsReport {
    pub s: usize,
    /// Hubs within `(2+ε)r` of `ball(v,(2+4ε)r)`, per vertex.
    pub near_ball: Vec<usize>,
    /// Hubs inside `ball(v,(2.8+6ε)r)`, per vertex.
    pub wide_ball: Vec<usize>,
    /// Vertices whose `near_ball` count exceeds `3s²`.
    pub near_flagged: Vec<usize>,
    /// Vertices whose `wide_ball` count exceeds `2s²`.
    pub wide_flagged: Vec<usize>,
}

pub fn verify_hub_bounds(dp: &DistanceProvider, spc: &ShortestPathCover) -> HubBoundsReport {
    let (s, _) = local_sparsity(dp, spc);
    let tol = dp.tol();
    let (r, e) = (spc.r, spc.eps);
    let rows: Vec<(usize, usize)> = (0..dp.n())
        .into_par_iter()
        .map(|v| {
            let row = dp.row(v);
            let ball: Vec<usize> =
                (0..dp.n()).filter(|&u| row[u] <= (2.0 + 4.0 * e) * r + tol).collect();
            let near = spc
                .hubs
                .iter()
                .filter(|&x| {
                    let rx = dp.row(x);
                    ball.iter().any(|&u| rx[u] <= (2.0 + e) * r + tol)
                })
                .count();
            let wide = spc.hubs.iter().filter(|&x| row[x] <= (2.8 + 6.0 * e) * r + tol).count();
            (near, wide)
        })
        .collect();
    let near_ball: Vec<usize> = rows.iter().map(|p| p.0).collect();
    let wide_ball: Vec<usize> = rows.iter().map(|p| p.1).collect();
    let near_flagged = (0..dp.n()).filter(|&v| near_ball[v] > 3 * s * s).collect();
    let wide_flagged = (0..dp.n()).filter(|&v| wide_ball[v] > 2 * s * s).collect();
    HubBoundsReport { s, near_ball, wide_ball, near_flagged, wide_flagged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;

    fn star(leaves: usize) -> DistanceProvider {
        let e: Vec<_> = (1..=leaves).map(|l| (0, l, 1.0)).collect();
        DistanceProvider::new(&WeightedGraph::from_edges(leaves + 1, &e).unwrap().0)
    }

    #[test]
    fn star_center_is_cover() {
        let dp = star(5);
        let spc = ShortestPathCover::new(1.0, 0.0, VertexSet::from_vec(vec![0]));
        assert!(verify_spc(&dp, &spc).is_none());
        let all = ShortestPathCover::new(1.0, 0.0, (0..6).collect());
        assert!(verify_spc(&dp, &all).is_none());
    }

    #[test]
    fn star_leaf_is_not_cover() {
        let dp = star(5);
        let spc = ShortestPathCover::new(1.0, 0.0, VertexSet::from_vec(vec![1]));
        let v = verify_spc(&dp, &spc).unwrap();
        assert!(v.u != 1 && v.z != 1 && v.u >= 2);
        assert_eq!(v.d, 2.0);
    }

    #[test]
    fn star_local_search_finds_center() {
        let dp = star(6);
        let spc = build_spc_local_search(&dp, 1.0, 0.0, HittingSetStrategy::Greedy).unwrap();
        assert_eq!(spc.hubs.as_slice(), &[0]);
    }

    #[test]
    fn no_pairs_gives_empty_cover() {
        let dp = star(4);
        let spc = build_spc_local_search(&dp, 10.0, 0.5, HittingSetStrategy::default()).unwrap();
        assert!(spc.hubs.is_empty());
    }

    #[test]
    fn minimalize_star() {
        let dp = star(5);
        let all = ShortestPathCover::new(1.0, 0.0, (0..6).collect());
        let m = minimalize_spc(&dp, &all).unwrap();
        assert_eq!(m.hubs.as_slice(), &[0]);
        assert!(m.minimal);
        let again = minimalize_spc(&dp, &m).unwrap();
        assert_eq!(again.hubs, m.hubs);
        let empty = ShortestPathCover::new(10.0, 0.0, VertexSet::new());
        assert!(minimalize_spc(&dp, &empty).unwrap().hubs.is_empty());
        let bad = ShortestPathCover::new(1.0, 0.0, VertexSet::from_vec(vec![1]));
        assert!(minimalize_spc(&dp, &bad).is_err());
    }

    #[test]
    fn sparsity_basics() {
        let dp = star(5);
        assert_eq!(local_sparsity(&dp, &ShortestPathCover::new(1.0, 0.0, VertexSet::new())).0, 0);
        for r in [0.1, 1.0, 5.0] {
            let s = ShortestPathCover::new(r, 0.0, VertexSet::from_vec(vec![0]));
            assert_eq!(local_sparsity(&dp, &s).0, 1);
        }
    }

    #[test]
    fn epsnet_two_points() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 10.0)]).unwrap().0;
        let dp = DistanceProvider::new(&g);
        let spc = epsnet_spc(&dp, 1.0, 0.5).unwrap();
        assert_eq!(spc.hubs.as_slice(), &[0, 1]);
        assert!(verify_spc(&dp, &spc).is_none());
        assert!(epsnet_spc(&dp, 1.0, 0.0).is_err());
    }

    #[test]
    fn hub_bounds_star() {
        let dp = star(5);
        let rep = verify_hub_bounds(&dp, &ShortestPathCover::new(1.0, 0.0, VertexSet::from_vec(vec![0])));
        assert!(rep.near_ball.iter().chain(&rep.wide_ball).all(|&c| c <= 1));
        let rep = verify_hub_bounds(&dp, &ShortestPathCover::new(1.0, 0.0, VertexSet::new()));
        assert!(rep.near_ball.iter().chain(&rep.wide_ball).all(|&c| c == 0));
    }

    #[test]
    fn towns_all_hubs_gives_sprawl() {
        let dp = star(4);
        let t = towns_and_sprawl(&dp, &ShortestPathCover::new(1.0, 0.0, (0..5).collect())).unwrap();
        assert!(t.towns.is_empty());
        assert_eq!(t.sprawl.len(), 5);
    }

    #[test]
    fn towns_two_cliques() {
        // Cliques {0,1,2} and {3,4,5}, bridge 2-3 of weight 10, hub at 2.
        let mut e = vec![(2, 3, 10.0)];
        for c in [[0, 1, 2], [3, 4, 5]] {
            e.extend([(c[0], c[1], 1.0), (c[1], c[2], 1.0), (c[0], c[2], 1.0)]);
        }
        let dp = DistanceProvider::new(&WeightedGraph::from_edges(6, &e).unwrap().0);
        let spc = ShortestPathCover::new(1.0, 0.0, VertexSet::from_vec(vec![2]));
        let t = towns_and_sprawl(&dp, &spc).unwrap();
        assert_eq!(t.towns.len(), 1);
        assert_eq!(t.towns[0].center, 3);
        assert_eq!(t.towns[0].members.as_slice(), &[3, 4, 5]);
        assert_eq!(t.sprawl.as_slice(), &[0, 1, 2]);
    }

    #[test]
    fn duostar_center_hub_leaves_far_vertices() {
        // Every non-center vertex is at distance >= 1 > (2+eps)r from s, so the sprawl is not V;
        // {s} misses the pair (v_i, u_i) at 2/(7+16eps) and the towns around v_i, u_i collide.
        let eps = 0.1;
        let dp = DistanceProvider::new(&crate::generate::duostar(3, eps).unwrap());
        let r = 1.0 / (4.0 + 8.0 * eps);
        let spc = ShortestPathCover::new(r, eps, VertexSet::from_vec(vec![0]));
        assert!((1..dp.n()).all(|v| dp.d(0, v) > (2.0 + eps) * r));
        let v = verify_spc(&dp, &spc).unwrap();
        assert_eq!((v.u, v.z), (1, 2));
        assert!(matches!(towns_and_sprawl(&dp, &spc), Err(HwdError::Invariant(_))));
    }
}
