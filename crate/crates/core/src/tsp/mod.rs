//! Subset TSP by divide and conquer over dense town levels.

pub mod divide;
pub mod patch;
pub mod solver;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use divide::{build_interface, find_dense_level, solve_town, town_sub_instance, DenseLevel, Interface};
pub use patch::{min_weight_matching, mst, patch_walks, Matching, PatchCheck};
pub use solver::{heuristic_tour, held_karp, order_to_walk, solve_tour, tsp_brute_force, DistMatrix, SubSolver};

use crate::error::{HwdError, HwdResult};
use crate::hierarchy::{make_hub_net_respecting, Walk};
use crate::hierarchy::{build_hub_hierarchy, HubHierarchy, SpcBuilder};
use crate::metric::DistanceProvider;
use crate::nets::NetHierarchy;
use crate::spc::{local_sparsity, TownDecomposition};
use crate::vset::VertexSet;

/// Hierarchies shared by every recursive call.
pub struct TspContext<'a> {
    pub dp: &'a DistanceProvider,
    pub hh: HubHierarchy,
    pub nets: NetHierarchy,
    pub towns: Vec<TownDecomposition>,
}

impl<'a> TspContext<'a> {
    pub fn build(dp: &'a DistanceProvider, eps: f64, builder: SpcBuilder) -> HwdResult<Self> {
        let hh = build_hub_hierarchy(dp, eps, builder)?;
        let nets = hh.nets(dp);
        let towns = hh.towns_per_level(dp)?;
        Ok(TspContext { dp, hh, nets, towns })
    }

    /// Largest local sparsity over the hub levels.
    pub fn sparsity(&self) -> usize {
        (0..self.hh.levels.len()).map(|i| local_sparsity(self.dp, &self.hh.hub_spc(i)).0).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct TspConfig {
    pub eps: f64,
    /// Dense-level threshold; `None` uses [`default_q`].
    pub q: Option<usize>,
    pub solver: SubSolver,
    pub builder: SpcBuilder,
}

impl TspConfig {
    pub fn new(eps: f64) -> Self {
        TspConfig { eps, q: None, solver: SubSolver::Exact, builder: SpcBuilder::default() }
    }
}

/// `max(32, ⌈ε⁻⁵·ln²(1/ε)·s²⌉)` capped at `k`.
pub fn default_q(eps: f64, s: usize, k: usize) -> usize {
    let l = (1.0 / eps).ln();
    let f = (eps.powi(-5) * l * l * (s * s) as f64).ceil();
    let f = if f.is_finite() && f < usize::MAX as f64 { f as usize } else { usize::MAX };
    f.max(32).min(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct DivideStep {
    pub depth: usize,
    pub dense: DenseLevel,
    pub interface: usize,
    pub town_terminals: usize,
    pub patch: PatchCheck,
    /// Cost after hub-net rewriting of the patched walk.
    pub patched_hn_cost: f64,
    pub recursive_cost: f64,
    pub cost: f64,
    /// `w(P_{K'}) + (1+77ε)(Σ w(W_T) + 2·w(MST(I)))`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct TspSolution {
    pub walk: Walk,
    pub cost: f64,
    /// Every tour over an explicit metric was solved exactly.
    pub certified: bool,
    pub q: usize,
    pub steps: Vec<DivideStep>,
    /// Terminal counts of the fallback solves, outermost first.
    pub fallback_sizes: Vec<usize>,
    pub sub_solves: usize,
    pub inexact_sub_solves: usize,
}

struct Run<'c, 'a> {
    dp: &'a DistanceProvider,
    ctx: Option<&'c TspContext<'a>>,
    q: usize,
    solver: SubSolver,
    steps: Vec<DivideStep>,
    fallback_sizes: Vec<usize>,
    sub_solves: usize,
    inexact: usize,
}

pub fn solve_subset_tsp(dp: &DistanceProvider, terminals: &[usize], cfg: &TspConfig) -> HwdResult<TspSolution> {
    let k = VertexSet::from_vec(terminals.to_vec());
    if k.is_empty() {
        return Err(HwdError::param("terminal set is empty"));
    }
    if let Some(t) = k.iter().find(|&t| t >= dp.n()) {
        return Err(HwdError::param(format!("terminal {t} is not a vertex")));
    }
    if !(cfg.eps > 0.0) {
        return Err(HwdError::param(format!("eps must be positive, got {}", cfg.eps)));
    }
    if let Some(q) = cfg.q {
        if q < 2 {
            return Err(HwdError::param(format!("q must be at least 2, got {q}")));
        }
    }
    // A dense level needs more than q terminal towns, so q ≥ |K| never divides.
    let needs_ctx = cfg.q.is_none_or(|q| q < k.len()) && k.len() > 32;
    let ctx = match (cfg.q, k.len()) {
        (Some(q), m) if q < m => Some(TspContext::build(dp, cfg.eps, cfg.builder)?),
        (None, _) if needs_ctx => Some(TspContext::build(dp, cfg.eps, cfg.builder)?),
        _ => None,
    };
    let q = match cfg.q {
        Some(q) => q,
        None => default_q(cfg.eps, ctx.as_ref().map_or(0, |c| c.sparsity()), k.len()),
    };
    let mut run = Run {
        dp,
        ctx: ctx.as_ref(),
        q,
        solver: cfg.solver,
        steps: Vec::new(),
        fallback_sizes: Vec::new(),
        sub_solves: 0,
        inexact: 0,
    };
    let walk = run.solve(&k, 0, cfg.eps)?;
    if !walk.is_closed() || k.iter().any(|t| !walk.vertices().contains(&t)) {
        return Err(HwdError::internal("solver output is not a closed walk over all terminals"));
    }
    Ok(TspSolution {
        cost: walk.cost(dp),
        walk,
        certified: run.inexact == 0,
        q,
        steps: run.steps,
        fallback_sizes: run.fallback_sizes,
        sub_solves: run.sub_solves,
        inexact_sub_solves: run.inexact,
    })
}

impl Run<'_, '_> {
    fn tour(&mut self, dm: &DistMatrix) -> solver::TourResult {
        let t = solve_tour(dm, self.solver);
        self.sub_solves += 1;
        if !t.exact {
            self.inexact += 1;
        }
        t
    }

    fn solve(&mut self, k: &VertexSet, depth: usize, eps: f64) -> HwdResult<Walk> {
        if k.len() == 1 {
            return Ok(Walk::new(vec![k.as_slice()[0]]));
        }
        if depth > self.dp.n() {
            return Err(HwdError::internal(format!("recursion depth exceeded {}", self.dp.n())));
        }
        let dense = match self.ctx {
            Some(ctx) => find_dense_level(ctx, k, self.q)?,
            None => None,
        };
        let Some(dl) = dense else {
            self.fallback_sizes.push(k.len());
            let pts = k.as_slice();
            let t = self.tour(&DistMatrix::from_points(self.dp, pts));
            let w = order_to_walk(pts, &t.order);
            return match (depth, self.ctx) {
                (d, Some(ctx)) if d > 0 => make_hub_net_respecting(self.dp, &ctx.hh, &ctx.nets, &w),
                _ => Ok(w),
            };
        };
        let ctx = self.ctx.expect("dense level implies hierarchies");
        let iface = build_interface(ctx, &dl)?;
        let td = &ctx.towns[dl.i];
        let per_town: Vec<Vec<usize>> = dl
            .towns
            .iter()
            .map(|&t| td.towns[t].members.iter().filter(|&u| k.contains(u)).collect())
            .collect();
        let subs = per_town
            .par_iter()
            .map(|ts| town_sub_instance(self.dp, ts, &iface))
            .collect::<HwdResult<Vec<_>>>()?;
        let solved: Vec<(Walk, bool)> = subs.par_iter().map(|s| solve_town(s, self.solver)).collect();
        self.sub_solves += solved.len();
        self.inexact += solved.iter().filter(|s| !s.1).count();
        let walks: Vec<Walk> = solved.into_iter().map(|s| s.0).collect();
        let (patched, check) = patch_walks(self.dp, &walks, &iface.hubs)?;
        let patched_hn = make_hub_net_respecting(self.dp, &ctx.hh, &ctx.nets, &patched)?;
        let removed: VertexSet = per_town.iter().flatten().copied().collect();
        let t_u = removed.as_slice()[0];
        let rest: VertexSet = k.iter().filter(|&t| t == t_u || !removed.contains(t)).collect();
        let rec = self.solve(&rest, depth + 1, eps)?;
        let walk = splice(&patched_hn, &rec, t_u)?;
        let cost = walk.cost(self.dp);
        let recursive_cost = rec.cost(self.dp);
        let bound = recursive_cost + (1.0 + 77.0 * eps) * check.bound;
        if cost > bound + self.dp.tol() * walk.len() as f64 {
            return Err(HwdError::invariant(format!("divide step costs {cost}, above its bound {bound}")));
        }
        self.steps.push(DivideStep {
            depth,
            interface: iface.hubs.len(),
            town_terminals: removed.len(),
            dense: dl,
            patched_hn_cost: patched_hn.cost(self.dp),
            patch: check,
            recursive_cost,
            cost,
            bound,
        });
        Ok(walk)
    }
}

/// Inserts closed walk `inner` (rotated to start at `at`) into closed walk `outer` at `at`.
pub fn splice(outer: &Walk, inner: &Walk, at: usize) -> HwdResult<Walk> {
    let o = outer.vertices();
    let pos = o.iter().position(|&x| x == at).ok_or_else(|| HwdError::internal(format!("{at} missing from walk")))?;
    let iv = inner.vertices();
    let body = &iv[..iv.len().saturating_sub(1).max(1)];
    let ip = body.iter().position(|&x| x == at).ok_or_else(|| HwdError::internal(format!("{at} missing from walk")))?;
    let mut out = Vec::with_capacity(o.len() + body.len());
    out.extend_from_slice(&o[..pos]);
    out.extend(body[ip..].iter().chain(&body[..ip]));
    out.extend_from_slice(&o[pos..]);
    let mut w = Walk::new(out);
    w.collapse();
    Ok(w)
}
