//! Walks and the net-respecting / hub-net-respecting rewrites.

use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::hierarchy::{HubHierarchy, Scales};
use crate::metric::DistanceProvider;
use crate::nets::NetHierarchy;
use crate::spc::TownDecomposition;

/// Vertex sequence; consecutive vertices form connections priced by `d_G`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(transparent)]
pub struct Walk(pub Vec<usize>);

impl Walk {
    pub fn new(v: Vec<usize>) -> Self {
        Walk(v)
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.0.len() == 1 || (self.0.len() >= 2 && self.0.first() == self.0.last())
    }

    pub fn cost(&self, dp: &DistanceProvider) -> f64 {
        self.0.windows(2).map(|w| dp.d(w[0], w[1])).sum()
    }

    pub fn connections(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    /// Drops zero-length connections.
    pub fn collapse(&mut self) {
        self.0.dedup();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct NetViolation {
    pub index: usize,
    pub u: usize,
    pub z: usize,
    pub level: i64,
}

fn scales_of(nets: &NetHierarchy) -> Scales {
    Scales { ratio: nets.ratio() }
}

/// First connection `(u,z)` with `d ∈ (r_i, r_{i+1}]` and `u ∉ N_i` or `z ∉ N_i`.
pub fn is_net_respecting(dp: &DistanceProvider, nets: &NetHierarchy, walk: &Walk) -> Option<NetViolation> {
    let s = scales_of(nets);
    walk.connections().enumerate().find_map(|(index, (u, z))| {
        let d = dp.d(u, z);
        if d <= 0.0 {
            return None;
        }
        let level = s.level_of(d);
        (!nets.contains(level, u) || !nets.contains(level, z)).then_some(NetViolation { index, u, z, level })
    })
}

/// Net shift: target level offset for replacement endpoints.
const NET_SHIFT: i64 = 16;

/// Replaces the longest violating connection until none remain; cost grows by at most `1+60ε`.
pub fn make_net_respecting(dp: &DistanceProvider, nets: &NetHierarchy, walk: &Walk) -> HwdResult<Walk> {
    let eps = nets.base();
    let s = scales_of(nets);
    let mut w = walk.clone();
    w.collapse();
    let levels = s.ceil_level(dp.diameter()).max(1) as usize;
    let cap = 10 * dp.n().max(1) * levels;
    for _ in 0..=cap {
        let mut worst: Option<(usize, f64, i64)> = None;
        for (t, (u, z)) in w.connections().enumerate() {
            let d = dp.d(u, z);
            let i = s.level_of(d);
            if nets.contains(i, u) && nets.contains(i, z) {
                continue;
            }
            if worst.is_none_or(|(_, bd, _)| d > bd) {
                worst = Some((t, d, i));
            }
        }
        let Some((t, _, i)) = worst else {
            let (before, after) = (walk.cost(dp), w.cost(dp));
            if after > (1.0 + 60.0 * eps) * before + dp.tol() * (w.len() as f64) {
                return Err(HwdError::invariant(format!(
                    "net-respecting walk costs {after}, more than (1+60eps) x {before}"
                )));
            }
            return Ok(w);
        };
        let (u, z) = (w.0[t], w.0[t + 1]);
        let up = nets.nearest(dp, i + NET_SHIFT, u);
        let zp = nets.nearest(dp, i + NET_SHIFT, z);
        w.0.splice(t + 1..t + 1, [up, zp]);
        w.collapse();
    }
    Err(HwdError::internal(format!("net-respecting rewrite exceeded {cap} iterations")))
}

/// Net-respects the walk, then routes each connection through a hub of its level.
pub fn make_hub_net_respecting(
    dp: &DistanceProvider,
    hh: &HubHierarchy,
    nets: &NetHierarchy,
    walk: &Walk,
) -> HwdResult<Walk> {
    let eps = hh.eps;
    let s = hh.scales();
    let pn = make_net_respecting(dp, nets, walk)?;
    let tol = dp.tol();
    let mut out = Vec::with_capacity(pn.len() * 2);
    if let Some(&first) = pn.0.first() {
        out.push(first);
    }
    for (u, z) in pn.connections() {
        let d = dp.d(u, z);
        let k = s.level_of(d);
        let (du, dz) = (dp.row(u), dp.row(z));
        let lim = (1.0 + 1.5 * eps) * d + tol;
        let x = hh.h(k).iter().copied().find(|&x| du[x] + dz[x] <= lim).ok_or_else(|| {
            HwdError::invariant(format!("no hub of H_{k} within a (1+3eps/2) detour of connection ({u},{z})"))
        })?;
        if x != u && x != z {
            out.push(x);
        }
        out.push(z);
    }
    let out = Walk(out);
    let (before, after) = (walk.cost(dp), out.cost(dp));
    if after > (1.0 + 77.0 * eps) * before + tol * (out.len() as f64) {
        return Err(HwdError::invariant(format!(
            "hub-net-respecting walk costs {after}, more than (1+77eps) x {before}"
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct HubNetViolation {
    /// Town level `ℓ`.
    pub level: usize,
    pub index: usize,
    /// Endpoint inside the town.
    pub inside: usize,
    pub outside: usize,
    /// Required level `max(ℓ, j)`.
    pub k: i64,
}

/// Checks every town-leaving connection against the net and hub of level `max(ℓ, j)`.
pub fn is_hub_net_respecting(
    dp: &DistanceProvider,
    hh: &HubHierarchy,
    nets: &NetHierarchy,
    towns_per_level: &[TownDecomposition],
    walk: &Walk,
) -> Option<HubNetViolation> {
    let s = hh.scales();
    let stretch = 1.0 + 0.75 * hh.eps;
    let n = dp.n();
    for (level, td) in towns_per_level.iter().enumerate() {
        if td.towns.is_empty() {
            continue;
        }
        let m = td.membership(n);
        for (index, (a, b)) in walk.connections().enumerate() {
            if m[a] == m[b] {
                continue;
            }
            let d = dp.d(a, b) / stretch;
            if d <= 1.0 {
                continue;
            }
            let j = s.level_of(d);
            let k = (level as i64).max(j);
            for (inside, outside) in [(a, b), (b, a)] {
                if m[inside].is_none() {
                    continue;
                }
                if !nets.contains(k, inside) || !hh.h(k).contains(&outside) {
                    return Some(HubNetViolation { level, index, inside, outside, k });
                }
            }
        }
    }
    None
}
