//! Hub hierarchy `H_0 ⊇ H_1 ⊇ …` over scales `r_i = (1+σ)^i`, plus walk transforms.

mod walk;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::metric::DistanceProvider;
use crate::nets::NetHierarchy;
use crate::spc::{
    epsnet_spc, local_search, minimalize_spc, towns_and_sprawl, verify_spc, HittingSetStrategy,
    ShortestPathCover, TownDecomposition,
};
use crate::vset::VertexSet;

pub use walk::{
    is_hub_net_respecting, is_net_respecting, make_hub_net_respecting, make_net_respecting,
    HubNetViolation, NetViolation, Walk,
};

/// How the initial per-level cover `SPC_i` is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(rename_all = "kebab-case")]
pub enum SpcBuilder {
    LocalSearch(HittingSetStrategy),
    EpsNet,
}

impl Default for SpcBuilder {
    fn default() -> Self {
        SpcBuilder::LocalSearch(HittingSetStrategy::default())
    }
}

/// Geometric scales `r_i = ratio^i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scales {
    pub ratio: f64,
}

impl Scales {
    pub fn r(&self, i: i64) -> f64 {
        self.ratio.powi(i as i32)
    }

    /// The `k` with `r_k < d ≤ r_{k+1}`; negative when `d ≤ 1`.
    pub fn level_of(&self, d: f64) -> i64 {
        debug_assert!(d > 0.0);
        let mut k = (d.ln() / self.ratio.ln()).ceil() as i64 - 1;
        while self.r(k + 1) < d {
            k += 1;
        }
        while self.r(k) >= d {
            k -= 1;
        }
        k
    }

    /// Smallest `L ≥ 0` with `r_L ≥ d`.
    pub fn ceil_level(&self, d: f64) -> i64 {
        if d <= 1.0 {
            0
        } else {
            self.level_of(d) + 1
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct HubLevel {
    pub i: usize,
    pub r: f64,
    #[serde(rename = "H_prime")]
    pub h_prime: VertexSet,
    #[serde(rename = "H")]
    pub h: VertexSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct HubHierarchy {
    pub eps: f64,
    pub sigma: f64,
    pub top_level: usize,
    /// Levels `0..=top_level`; `H'_L = H_L = ∅`.
    pub levels: Vec<HubLevel>,
}

pub fn check_hierarchy_eps(eps: f64) -> HwdResult<()> {
    if !(eps > 0.0 && eps <= 1.0 / 6.0) {
        return Err(HwdError::param(format!("eps must lie in (0, 1/6], got {eps}")));
    }
    Ok(())
}

pub fn check_min_distance(dp: &DistanceProvider) -> HwdResult<()> {
    if dp.n() >= 2 && !(dp.min_distance()? > 1.0) {
        return Err(HwdError::pre("minimum pairwise distance must exceed 1; rescale the graph first"));
    }
    Ok(())
}

impl HubHierarchy {
    pub fn scales(&self) -> Scales {
        Scales { ratio: 1.0 + self.sigma }
    }

    pub fn r(&self, i: i64) -> f64 {
        self.scales().r(i)
    }

    /// `H_i`; empty above the top level.
    pub fn h(&self, i: i64) -> &[usize] {
        if i < 0 {
            return self.levels[0].h.as_slice();
        }
        self.levels.get(i as usize).map_or(&[], |l| l.h.as_slice())
    }

    /// `H_i` wrapped as the `(r_i, 3ε/2)`-cover it is.
    pub fn hub_spc(&self, i: usize) -> ShortestPathCover {
        ShortestPathCover::new(self.levels[i].r, 1.5 * self.eps, self.levels[i].h.clone())
    }

    pub fn h_prime_spc(&self, i: usize) -> ShortestPathCover {
        ShortestPathCover::new(self.levels[i].r, 1.5 * self.eps, self.levels[i].h_prime.clone())
    }

    /// Net hierarchy with `δ_i = ε·r_i` on the same scales.
    pub fn nets(&self, dp: &DistanceProvider) -> NetHierarchy {
        NetHierarchy::build(dp, self.eps, 1.0 + self.sigma)
    }

    /// Towns of every level `ℓ` for hubs `H_ℓ`.
    pub fn towns_per_level(&self, dp: &DistanceProvider) -> HwdResult<Vec<TownDecomposition>> {
        (0..self.levels.len()).into_par_iter().map(|l| towns_and_sprawl(dp, &self.hub_spc(l))).collect()
    }

    /// Nesting and packing of every level; `Err` names the first violation.
    pub fn check_invariants(&self, dp: &DistanceProvider) -> HwdResult<()> {
        for i in 0..self.levels.len() {
            let h = &self.levels[i].h;
            if i + 1 < self.levels.len() && !self.levels[i + 1].h.is_subset(h) {
                return Err(HwdError::invariant(format!("H_{} is not a subset of H_{i}", i + 1)));
            }
            let thr = self.eps / 4.0 * self.levels[i].r;
            for x in h.iter() {
                for y in h.iter().filter(|&y| y > x) {
                    if dp.le(dp.d(x, y), thr) {
                        return Err(HwdError::invariant(format!(
                            "hubs {x},{y} of H_{i} are within eps/4 * r_{i}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the hierarchy top-down with deduplication and per-level minimalization.
pub fn build_hub_hierarchy(
    dp: &DistanceProvider,
    eps: f64,
    builder: SpcBuilder,
) -> HwdResult<HubHierarchy> {
    check_hierarchy_eps(eps)?;
    check_min_distance(dp)?;
    let sigma = eps / (4.0 + 3.0 * eps);
    let scales = Scales { ratio: 1.0 + sigma };
    let top = scales.ceil_level(dp.diameter()) as usize;
    let wide = 2.0 + 1.5 * eps;
    // Initial covers reach (r_i, (2+3ε/2)r_i] so the deduplicated sets are full (r_i, 3ε/2)-covers.
    let initial: Vec<ShortestPathCover> = (0..top)
        .into_par_iter()
        .map(|i| {
            let r = scales.r(i as i64);
            match builder {
                SpcBuilder::LocalSearch(s) => local_search(dp, r, eps, wide, s).map(|p| p.0),
                SpcBuilder::EpsNet => epsnet_spc(dp, r, eps).map(|c| c.with_span(wide)),
            }
        })
        .collect::<HwdResult<_>>()?;
    let mut h_prime: Vec<VertexSet> = vec![VertexSet::new(); top + 1];
    for i in (0..top).rev() {
        let r = scales.r(i as i64);
        let thr = eps / 4.0 * r;
        let mut cur = VertexSet::new();
        for x in initial[i].hubs.iter() {
            let row = dp.row(x);
            if cur.iter().any(|y| dp.le(row[y], thr)) {
                continue;
            }
            let above = (i + 1..=top)
                .find_map(|j| h_prime[j].iter().find(|&y| dp.le(row[y], thr)));
            cur.insert(above.unwrap_or(x));
        }
        let spc = ShortestPathCover::new(r, 1.5 * eps, cur);
        if let Some(v) = verify_spc(dp, &spc) {
            return Err(HwdError::invariant(format!(
                "H'_{i} is not an (r_i, 3eps/2) cover: pair ({},{}) best ratio {}",
                v.u, v.z, v.best_ratio
            )));
        }
        h_prime[i] = minimalize_spc(dp, &spc)?.hubs;
    }
    let mut levels = Vec::with_capacity(top + 1);
    let mut acc = VertexSet::new();
    for i in (0..=top).rev() {
        acc = acc.union(&h_prime[i]);
        levels.push(HubLevel { i, r: scales.r(i as i64), h_prime: h_prime[i].clone(), h: acc.clone() });
    }
    levels.reverse();
    let hh = HubHierarchy { eps, sigma, top_level: top, levels };
    hh.check_invariants(dp)?;
    Ok(hh)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct LevelSparsity {
    pub i: usize,
    /// `max_v |ball(v,(2+4ε)r_i) ∩ H_i|`.
    pub ball: usize,
    /// `max_v` number of `H_i` hubs within `(2+ε)r_i` of `ball(v,(2+4ε)r_i)`.
    pub near: usize,
}

pub fn hierarchy_sparsity_report(dp: &DistanceProvider, hh: &HubHierarchy) -> Vec<LevelSparsity> {
    let n = dp.n();
    let tol = dp.tol();
    let e = hh.eps;
    hh.levels
        .par_iter()
        .map(|lvl| {
            let r = lvl.r;
            let hubs = lvl.h.as_slice();
            let near_sets: Vec<fixedbitset::FixedBitSet> = hubs
                .iter()
                .map(|&x| {
                    let rx = dp.row(x);
                    let mut b = fixedbitset::FixedBitSet::with_capacity(n);
                    for u in 0..n {
                        if rx[u] <= (2.0 + e) * r + tol {
                            b.insert(u);
                        }
                    }
                    b
                })
                .collect();
            let (mut ball, mut near) = (0, 0);
            for v in 0..n {
                let row = dp.row(v);
                let mut bv = fixedbitset::FixedBitSet::with_capacity(n);
                for u in 0..n {
                    if row[u] <= (2.0 + 4.0 * e) * r + tol {
                        bv.insert(u);
                    }
                }
                ball = ball.max(hubs.iter().filter(|&&x| bv.contains(x)).count());
                near = near.max(near_sets.iter().filter(|s| !s.is_disjoint(&bv)).count());
            }
            LevelSparsity { i: lvl.i, ball, near }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;

    #[test]
    fn level_of_brackets() {
        let s = Scales { ratio: 1.1 };
        for d in [1.05, 1.1, 1.2, 5.0, 100.0] {
            let k = s.level_of(d);
            assert!(s.r(k) < d && d <= s.r(k + 1), "d={d} k={k}");
        }
        assert_eq!(s.ceil_level(1.0), 0);
        assert!(s.r(s.ceil_level(50.0)) >= 50.0);
    }

    #[test]
    fn rejects_bad_eps_and_scale() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 2.0)]).unwrap().0;
        let dp = DistanceProvider::new(&g);
        assert!(build_hub_hierarchy(&dp, 0.5, SpcBuilder::default()).is_err());
        let g1 = WeightedGraph::from_edges(2, &[(0, 1, 0.5)]).unwrap().0;
        assert!(build_hub_hierarchy(&DistanceProvider::new(&g1), 0.1, SpcBuilder::default()).is_err());
    }

    #[test]
    fn star_hierarchy() {
        let e: Vec<_> = (1..=6).map(|l| (0, l, 1.5)).collect();
        let dp = DistanceProvider::new(&WeightedGraph::from_edges(7, &e).unwrap().0);
        let hh = build_hub_hierarchy(&dp, 1.0 / 6.0, SpcBuilder::default()).unwrap();
        assert!(hh.r(hh.top_level as i64) >= 3.0);
        for i in 0..hh.levels.len() {
            assert!(verify_spc(&dp, &hh.h_prime_spc(i)).is_none());
        }
        assert!(hh.levels.iter().any(|l| l.h.as_slice() == [0]));
        for s in hierarchy_sparsity_report(&dp, &hh) {
            assert!(s.ball <= 2 && s.near <= 2);
        }
    }

    #[test]
    fn single_distance_metric() {
        // Unit-ish triangle: every pair at the same distance D.
        let g = WeightedGraph::from_edges(3, &[(0, 1, 4.0), (1, 2, 4.0), (0, 2, 4.0)]).unwrap().0;
        let dp = DistanceProvider::new(&g);
        let hh = build_hub_hierarchy(&dp, 1.0 / 6.0, SpcBuilder::default()).unwrap();
        let s = hh.scales();
        // Pairs need hubs only on levels with r_i < 4 ≤ (2+ε')r_i.
        for l in &hh.levels {
            if !(l.r < 4.0 && 4.0 <= (2.0 + 0.25) * l.r) {
                assert!(l.h_prime.is_empty(), "level {} r={}", l.i, l.r);
            }
        }
        assert!(hh.levels[s.level_of(4.0) as usize + 1..].iter().all(|l| l.h.is_empty()));
    }
}
