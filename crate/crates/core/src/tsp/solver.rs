//! Tours over small explicit metrics: Held-Karp, a 2-opt heuristic, and brute force.

use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::hierarchy::Walk;
use crate::metric::DistanceProvider;

pub const HELD_KARP_CAP: usize = 18;
pub const BRUTE_FORCE_CAP: usize = 11;

/// Row-major symmetric distance table.
#[derive(Clone, Debug, PartialEq)]
pub struct DistMatrix {
    m: usize,
    d: Vec<f64>,
}

impl DistMatrix {
    pub fn from_fn(m: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut d = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                d[a * m + b] = f(a, b);
            }
        }
        DistMatrix { m, d }
    }

    pub fn from_points(dp: &DistanceProvider, pts: &[usize]) -> Self {
        let rows: Vec<_> = pts.iter().map(|&p| dp.row(p)).collect();
        Self::from_fn(pts.len(), |a, b| rows[a][pts[b]])
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.d[a * self.m + b]
    }

    pub fn tour_cost(&self, order: &[usize]) -> f64 {
        if order.len() < 2 {
            return 0.0;
        }
        (0..order.len()).map(|k| self.get(order[k], order[(k + 1) % order.len()])).sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(rename_all = "lowercase")]
pub enum SubSolver {
    /// Held-Karp up to `HELD_KARP_CAP` points, heuristic beyond.
    #[default]
    Exact,
    Heuristic,
}

impl std::str::FromStr for SubSolver {
    type Err = HwdError;

    fn from_str(s: &str) -> HwdResult<Self> {
        match s {
            "exact" => Ok(SubSolver::Exact),
            "heuristic" => Ok(SubSolver::Heuristic),
            _ => Err(HwdError::param(format!("unknown solver {s:?}; use exact or heuristic"))),
        }
    }
}

/// Cyclic visiting order starting at point 0.
#[derive(Clone, Debug, PartialEq)]
pub struct TourResult {
    pub order: Vec<usize>,
    pub cost: f64,
    pub exact: bool,
}

pub fn held_karp(dm: &DistMatrix) -> HwdResult<TourResult> {
    let m = dm.len();
    if m > HELD_KARP_CAP {
        return Err(HwdError::param(format!("Held-Karp is limited to {HELD_KARP_CAP} points, got {m}")));
    }
    if m <= 2 {
        let order: Vec<usize> = (0..m).collect();
        return Ok(TourResult { cost: dm.tour_cost(&order), order, exact: true });
    }
    // Point 0 is fixed; bit b stands for point b+1.
    let k = m - 1;
    let full = 1usize << k;
    let mut cost = vec![f64::INFINITY; full * k];
    let mut from = vec![u8::MAX; full * k];
    for j in 0..k {
        cost[(1 << j) * k + j] = dm.get(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..k {
            let c = cost[mask * k + j];
            if mask & (1 << j) == 0 || !c.is_finite() {
                continue;
            }
            for t in 0..k {
                if mask & (1 << t) != 0 {
                    continue;
                }
                let nm = mask | (1 << t);
                let nc = c + dm.get(j + 1, t + 1);
                if nc < cost[nm * k + t] {
                    cost[nm * k + t] = nc;
                    from[nm * k + t] = j as u8;
                }
            }
        }
    }
    let last = full - 1;
    let (mut best, mut end) = (f64::INFINITY, 0);
    for j in 0..k {
        let c = cost[last * k + j] + dm.get(j + 1, 0);
        if c < best {
            best = c;
            end = j;
        }
    }
    let mut rev = Vec::with_capacity(m);
    let (mut mask, mut j) = (last, end);
    loop {
        rev.push(j + 1);
        let p = from[mask * k + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    rev.push(0);
    rev.reverse();
    Ok(TourResult { cost: dm.tour_cost(&rev), order: rev, exact: true })
}

fn nearest_neighbor(dm: &DistMatrix) -> Vec<usize> {
    let m = dm.len();
    let mut seen = vec![false; m];
    let mut order = vec![0];
    seen[0] = true;
    for _ in 1..m {
        let u = *order.last().unwrap();
        let v = (0..m).filter(|&v| !seen[v]).min_by(|&a, &b| dm.get(u, a).total_cmp(&dm.get(u, b))).unwrap();
        seen[v] = true;
        order.push(v);
    }
    order
}

/// Preorder of the MST rooted at 0, children by increasing index.
pub fn mst_preorder(dm: &DistMatrix) -> Vec<usize> {
    let m = dm.len();
    if m == 0 {
        return Vec::new();
    }
    let (edges, _) = super::patch::mst(dm);
    let mut adj = vec![Vec::new(); m];
    for &(a, b) in &edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut order = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        if seen[u] {
            continue;
        }
        seen[u] = true;
        order.push(u);
        let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| !seen[v]).collect();
        next.sort_unstable_by(|a, b| b.cmp(a));
        stack.extend(next);
    }
    order
}

/// Reverses segments while any exchange shortens the tour.
pub fn two_opt(dm: &DistMatrix, order: &mut [usize]) {
    let m = order.len();
    if m < 4 {
        return;
    }
    let scale = dm.tour_cost(order).max(1.0);
    for _ in 0..1000 {
        let mut improved = false;
        for i in 0..m - 2 {
            for j in i + 2..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                let (a, b, c, d) = (order[i], order[i + 1], order[j], order[(j + 1) % m]);
                let delta = dm.get(a, c) + dm.get(b, d) - dm.get(a, b) - dm.get(c, d);
                if delta < -1e-12 * scale {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Best of nearest-neighbor and MST-preorder starts after 2-opt; never above twice the MST.
pub fn heuristic_tour(dm: &DistMatrix) -> TourResult {
    let m = dm.len();
    if m <= 3 {
        let order: Vec<usize> = (0..m).collect();
        return TourResult { cost: dm.tour_cost(&order), order, exact: true };
    }
    let mut best: Option<TourResult> = None;
    for mut order in [mst_preorder(dm), nearest_neighbor(dm)] {
        two_opt(dm, &mut order);
        let cost = dm.tour_cost(&order);
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(TourResult { order, cost, exact: false });
        }
    }
    best.unwrap()
}

pub fn solve_tour(dm: &DistMatrix, solver: SubSolver) -> TourResult {
    match solver {
        SubSolver::Exact if dm.len() <= HELD_KARP_CAP => held_karp(dm).expect("size checked"),
        _ => heuristic_tour(dm),
    }
}

/// Optimal closed walk visiting `terminals`, by Held-Karp on their induced metric.
pub fn tsp_brute_force(dp: &DistanceProvider, terminals: &[usize]) -> HwdResult<(Walk, f64)> {
    if terminals.is_empty() {
        return Err(HwdError::param("terminal set is empty"));
    }
    if terminals.len() > BRUTE_FORCE_CAP {
        return Err(HwdError::param(format!(
            "brute-force TSP is limited to {BRUTE_FORCE_CAP} terminals, got {}",
            terminals.len()
        )));
    }
    let dm = DistMatrix::from_points(dp, terminals);
    let t = held_karp(&dm)?;
    Ok((order_to_walk(terminals, &t.order), t.cost))
}

/// Closed walk `pts[order[0]], …, pts[order[0]]`.
pub fn order_to_walk(pts: &[usize], order: &[usize]) -> Walk {
    let mut w: Vec<usize> = order.iter().map(|&k| pts[k]).collect();
    if w.len() >= 2 {
        w.push(w[0]);
    }
    Walk::new(w)
}
