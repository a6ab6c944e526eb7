//! Towns and sprawl of a shortest-path cover.

use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::metric::DistanceProvider;
use crate::spc::ShortestPathCover;
use crate::vset::VertexSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct Town {
    pub center: usize,
    pub members: VertexSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct TownDecomposition {
    pub r: f64,
    pub eps: f64,
    pub towns: Vec<Town>,
    pub sprawl: VertexSet,
}

impl TownDecomposition {
    /// Town index of every vertex (`None` for sprawl).
    pub fn membership(&self, n: usize) -> Vec<Option<usize>> {
        let mut m = vec![None; n];
        for (k, t) in self.towns.iter().enumerate() {
            for v in t.members.iter() {
                m[v] = Some(k);
            }
        }
        m
    }
}

/// Towns are `ball(c, r)` around vertices `c` with `d(c, hubs) > (2+ε)r`, taken in
/// increasing id; a center already inside an earlier town is skipped.
pub fn towns_and_sprawl(dp: &DistanceProvider, spc: &ShortestPathCover) -> HwdResult<TownDecomposition> {
    let n = dp.n();
    let r = spc.r;
    let far = (2.0 + spc.eps) * r;
    let hubs = spc.hubs.as_slice();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut towns: Vec<Town> = Vec::new();
    for v in 0..n {
        if owner[v].is_some() || !dp.gt(dp.dist_to_set(v, hubs), far) {
            continue;
        }
        let members = dp.ball(v, r);
        let k = towns.len();
        for u in members.iter() {
            if let Some(j) = owner[u] {
                return Err(HwdError::invariant(format!(
                    "towns centered at {} and {} overlap at vertex {u}",
                    towns[j].center, v
                )));
            }
            owner[u] = Some(k);
        }
        towns.push(Town { center: v, members });
    }
    for t in &towns {
        check_town(dp, t, r, &owner)?;
    }
    let sprawl = VertexSet::from_sorted((0..n).filter(|&v| owner[v].is_none()).collect());
    for v in sprawl.iter() {
        if dp.gt(dp.dist_to_set(v, hubs), far) {
            return Err(HwdError::internal(format!("sprawl vertex {v} has no hub within (2+eps)r")));
        }
    }
    Ok(TownDecomposition { r, eps: spc.eps, towns, sprawl })
}

fn check_town(dp: &DistanceProvider, t: &Town, r: f64, owner: &[Option<usize>]) -> HwdResult<()> {
    let me = owner[t.center];
    for u in t.members.iter() {
        let row = dp.row(u);
        for (x, o) in owner.iter().enumerate() {
            if *o == me {
                if dp.gt(row[x], r) {
                    return Err(HwdError::invariant(format!(
                        "town centered at {} has diameter pair ({u},{x}) at distance {} > r",
                        t.center, row[x]
                    )));
                }
            } else if dp.le(row[x], r) {
                return Err(HwdError::invariant(format!(
                    "town centered at {} is within r of outside vertex {x} (via {u})",
                    t.center
                )));
            }
        }
    }
    Ok(())
}
