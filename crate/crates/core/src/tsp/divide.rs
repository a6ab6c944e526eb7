//! Divide step: dense level, interface hubs, and town sub-instances with a virtual point.

use serde::{Deserialize, Serialize};

use super::solver::{solve_tour, DistMatrix, SubSolver};
use super::TspContext;
use crate::error::{HwdError, HwdResult};
use crate::hierarchy::Walk;
use crate::metric::DistanceProvider;
use crate::vset::VertexSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct DenseLevel {
    pub i: usize,
    pub v: usize,
    pub r: f64,
    /// Indices into the level's towns: all terminal towns meeting the ball.
    pub candidates: Vec<usize>,
    pub y_n: Option<usize>,
    pub excluded: Option<usize>,
    /// `candidates` minus `excluded`.
    pub towns: Vec<usize>,
}

/// `⌈log_{1+σ}(6/ε+8)⌉` and its floor.
pub fn level_gap(eps: f64, sigma: f64) -> (usize, usize) {
    let x = (6.0 / eps + 8.0).ln() / (1.0 + sigma).ln();
    (x.ceil() as usize, x.floor() as usize)
}

/// Smallest level `i` and lowest `v` whose `(2+4ε)r_i` ball meets more than `q` terminal towns.
pub fn find_dense_level(ctx: &TspContext, terminals: &VertexSet, q: usize) -> HwdResult<Option<DenseLevel>> {
    let dp = ctx.dp;
    let n = dp.n();
    let eps = ctx.hh.eps;
    if terminals.len() <= q {
        return Ok(None);
    }
    for (i, td) in ctx.towns.iter().enumerate() {
        let member = td.membership(n);
        let mut tt: Vec<usize> = terminals.iter().filter_map(|t| member[t]).collect();
        tt.sort_unstable();
        tt.dedup();
        if tt.len() <= q {
            continue;
        }
        let r = td.r;
        let rad = (2.0 + 4.0 * eps) * r;
        for v in 0..n {
            let row = dp.row(v);
            let meets: Vec<usize> = tt
                .iter()
                .copied()
                .filter(|&t| td.towns[t].members.iter().any(|u| dp.le(row[u], rad)))
                .collect();
            if meets.len() <= q {
                continue;
            }
            let (gap, _) = level_gap(eps, ctx.hh.sigma);
            let j = (i + gap) as i64;
            let outer = (3.0 + 4.0 * eps) * r;
            let ys: Vec<usize> = ctx.nets.prefix(j).iter().copied().filter(|&y| dp.le(row[y], outer)).collect();
            if ys.len() > 1 {
                return Err(HwdError::invariant(format!(
                    "net points {} and {} of level {j} both lie within (3+4eps)r_{i} of {v}",
                    ys[0], ys[1]
                )));
            }
            let y_n = ys.first().copied();
            let excluded = y_n.and_then(|y| member[y]).filter(|t| meets.contains(t));
            let towns = meets.iter().copied().filter(|&t| Some(t) != excluded).collect();
            return Ok(Some(DenseLevel { i, v, r, candidates: meets, y_n, excluded, towns }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct Interface {
    pub i: usize,
    pub v: usize,
    pub hubs: VertexSet,
    /// `(level j, hub)` for every qualifying hub and level.
    pub entries: Vec<(usize, usize)>,
}

impl Interface {
    /// Nearest interface hub, ties to the lowest id.
    pub fn chi(&self, dp: &DistanceProvider, u: usize) -> Option<(usize, f64)> {
        dp.nearest_in(u, self.hubs.as_slice())
    }
}

/// Hubs of `H_j` within `(2+ε)r_j` of `ball(v,(2+4ε)r_i)` for `i ≤ j ≤ i+⌊log_{1+σ}(6/ε+8)⌋`,
/// with the close-interface-point checks on the towns of `dl`.
pub fn build_interface(ctx: &TspContext, dl: &DenseLevel) -> HwdResult<Interface> {
    let dp = ctx.dp;
    let eps = ctx.hh.eps;
    let ball = dp.ball(dl.v, (2.0 + 4.0 * eps) * dl.r);
    let (_, span) = level_gap(eps, ctx.hh.sigma);
    let mut entries = Vec::new();
    for j in dl.i..=dl.i + span {
        let rj = ctx.hh.r(j as i64);
        for &x in ctx.hh.h(j as i64) {
            let row = dp.row(x);
            if ball.iter().any(|b| dp.le(row[b], (2.0 + eps) * rj)) {
                entries.push((j, x));
            }
        }
    }
    let hubs: VertexSet = entries.iter().map(|e| e.1).collect();
    let iface = Interface { i: dl.i, v: dl.v, hubs, entries };
    if dl.towns.len() >= 2 {
        if iface.hubs.is_empty() {
            return Err(HwdError::invariant(format!(
                "{} towns at level {} but the interface is empty",
                dl.towns.len(),
                dl.i
            )));
        }
        let lim = (3.0 + 8.0 * eps) * dl.r;
        let td = &ctx.towns[dl.i];
        for &t in &dl.towns {
            for u in td.towns[t].members.iter() {
                let (x, d) = iface.chi(dp, u).expect("nonempty");
                if !dp.le(d, lim) {
                    return Err(HwdError::invariant(format!(
                        "vertex {u} is {d} from its nearest interface hub {x}, above (3+8eps)r_{}",
                        dl.i
                    )));
                }
            }
        }
    }
    Ok(iface)
}

/// Terminals of one town plus a virtual point `p` (last index) at interface distance.
#[derive(Clone, Debug, PartialEq)]
pub struct TownSubInstance {
    pub terminals: Vec<usize>,
    pub chi: Vec<usize>,
    pub dist: DistMatrix,
}

pub fn town_sub_instance(dp: &DistanceProvider, terminals: &[usize], iface: &Interface) -> HwdResult<TownSubInstance> {
    let m = terminals.len();
    let mut chi = Vec::with_capacity(m);
    let mut to_p = Vec::with_capacity(m);
    for &t in terminals {
        let (x, d) = iface.chi(dp, t).ok_or_else(|| HwdError::pre("town sub-instance needs a nonempty interface"))?;
        chi.push(x);
        to_p.push(d);
    }
    let rows: Vec<_> = terminals.iter().map(|&t| dp.row(t)).collect();
    let dist = DistMatrix::from_fn(m + 1, |a, b| match (a == m, b == m) {
        (true, true) => 0.0,
        (true, false) => to_p[b],
        (false, true) => to_p[a],
        (false, false) => rows[a][terminals[b]],
    });
    let tol = dp.tol();
    for a in 0..=m {
        for b in 0..=m {
            for c in 0..=m {
                if dist.get(a, c) > dist.get(a, b) + dist.get(b, c) + tol {
                    return Err(HwdError::invariant(format!(
                        "town sub-instance violates the triangle inequality at ({a},{b},{c})"
                    )));
                }
            }
        }
    }
    Ok(TownSubInstance { terminals: terminals.to_vec(), chi, dist })
}

/// Tour over the sub-instance unfolded at `p` into a walk `χ_s, s, …, t, χ_t`.
pub fn solve_town(sub: &TownSubInstance, solver: SubSolver) -> (Walk, bool) {
    let m = sub.terminals.len();
    let tour = solve_tour(&sub.dist, solver);
    let at = tour.order.iter().position(|&x| x == m).expect("p is visited");
    let seq: Vec<usize> = (1..=m).map(|k| tour.order[(at + k) % (m + 1)]).collect();
    let mut w = Vec::with_capacity(m + 2);
    w.push(sub.chi[seq[0]]);
    w.extend(seq.iter().map(|&k| sub.terminals[k]));
    w.push(sub.chi[seq[m - 1]]);
    (Walk::new(w), tour.exact)
}
