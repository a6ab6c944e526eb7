//! Interface patching: MST, minimum matching on odd vertices, and an Euler tour.

use serde::{Deserialize, Serialize};

use super::solver::DistMatrix;
use crate::error::{HwdError, HwdResult};
use crate::hierarchy::Walk;
use crate::metric::DistanceProvider;
use crate::vset::VertexSet;

pub const MATCHING_DP_CAP: usize = 20;

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let p = self.0[y];
            self.0[y] = r;
            y = p;
        }
        r
    }
}

/// Kruskal over all pairs; ties by index. Returns edges and total weight.
pub fn mst(dm: &DistMatrix) -> (Vec<(usize, usize)>, f64) {
    let m = dm.len();
    let mut pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    pairs.sort_by(|x, y| dm.get(x.0, x.1).total_cmp(&dm.get(y.0, y.1)).then(x.cmp(y)));
    let mut dsu = Dsu((0..m).collect());
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    let mut w = 0.0;
    for (a, b) in pairs {
        let (ra, rb) = (dsu.find(a), dsu.find(b));
        if ra != rb {
            dsu.0[ra] = rb;
            edges.push((a, b));
            w += dm.get(a, b);
            if edges.len() + 1 == m {
                break;
            }
        }
    }
    (edges, w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub weight: f64,
    /// Subset DP optimum; otherwise the lighter of greedy and tour splitting.
    pub exact: bool,
}

fn matching_dp(dm: &DistMatrix, pts: &[usize]) -> Matching {
    let k = pts.len();
    let full = 1usize << k;
    let mut best = vec![f64::INFINITY; full];
    let mut pick = vec![u8::MAX; full];
    best[0] = 0.0;
    for mask in 1..full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut b = f64::INFINITY;
        let mut p = u8::MAX;
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            r &= r - 1;
            let c = dm.get(pts[i], pts[j]) + best[rest & !(1 << j)];
            if c < b {
                b = c;
                p = j as u8;
            }
        }
        best[mask] = b;
        pick[mask] = p;
    }
    let mut pairs = Vec::with_capacity(k / 2);
    let mut mask = full - 1;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = pick[mask] as usize;
        pairs.push((pts[i], pts[j]));
        mask &= !(1 << i) & !(1 << j);
    }
    Matching { pairs, weight: best[full - 1], exact: true }
}

fn weight_of(dm: &DistMatrix, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(a, b)| dm.get(a, b)).sum()
}

fn matching_greedy(dm: &DistMatrix, pts: &[usize]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> =
        pts.iter().enumerate().flat_map(|(x, &a)| pts[x + 1..].iter().map(move |&b| (a, b))).collect();
    pairs.sort_by(|x, y| dm.get(x.0, x.1).total_cmp(&dm.get(y.0, y.1)).then(x.cmp(y)));
    let mut used = vec![false; dm.len()];
    let mut out = Vec::with_capacity(pts.len() / 2);
    for (a, b) in pairs {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            out.push((a, b));
        }
    }
    out
}

/// Shortcut of the doubled MST over all points, restricted to `pts`, split into its two
/// alternating matchings; the lighter weighs at most the MST.
fn matching_tour_split(dm: &DistMatrix, pts: &[usize]) -> Vec<(usize, usize)> {
    let mut inside = vec![false; dm.len()];
    for &p in pts {
        inside[p] = true;
    }
    let cyc: Vec<usize> = super::solver::mst_preorder(dm).into_iter().filter(|&v| inside[v]).collect();
    let k = cyc.len();
    let a: Vec<_> = (0..k).step_by(2).map(|t| (cyc[t], cyc[t + 1])).collect();
    let b: Vec<_> = (1..k).step_by(2).map(|t| (cyc[t], cyc[(t + 1) % k])).collect();
    if weight_of(dm, &b) < weight_of(dm, &a) {
        b
    } else {
        a
    }
}

/// Minimum perfect matching on `pts` (indices into `dm`).
pub fn min_weight_matching(dm: &DistMatrix, pts: &[usize]) -> HwdResult<Matching> {
    if pts.len() % 2 == 1 {
        return Err(HwdError::param(format!("matching needs an even point count, got {}", pts.len())));
    }
    if pts.len() <= MATCHING_DP_CAP {
        return Ok(matching_dp(dm, pts));
    }
    let g = matching_greedy(dm, pts);
    let s = matching_tour_split(dm, pts);
    let pairs = if weight_of(dm, &s) < weight_of(dm, &g) { s } else { g };
    Ok(Matching { weight: weight_of(dm, &pairs), pairs, exact: false })
}

/// Hierholzer on a connected multigraph with all degrees even. Returns `(edge, forward)` in
/// traversal order starting at `start`.
pub fn euler_circuit(m: usize, edges: &[(usize, usize)], start: usize) -> HwdResult<Vec<(usize, bool)>> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    for (e, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((e, b));
        if a != b {
            adj[b].push((e, a));
        } else {
            adj[a].push((e, a));
        }
    }
    if let Some(v) = (0..m).find(|&v| adj[v].len() % 2 == 1) {
        return Err(HwdError::internal(format!("vertex {v} has odd degree in the patching multigraph")));
    }
    let mut used = vec![false; edges.len()];
    let mut ptr = vec![0usize; m];
    let mut stack: Vec<(usize, Option<(usize, bool)>)> = vec![(start, None)];
    let mut out = Vec::with_capacity(edges.len());
    while let Some(&(u, _)) = stack.last() {
        while ptr[u] < adj[u].len() && used[adj[u][ptr[u]].0] {
            ptr[u] += 1;
        }
        if ptr[u] == adj[u].len() {
            let (_, via) = stack.pop().unwrap();
            out.extend(via);
        } else {
            let (e, v) = adj[u][ptr[u]];
            used[e] = true;
            stack.push((v, Some((e, edges[e].0 == u))));
        }
    }
    if out.len() != edges.len() {
        return Err(HwdError::internal("patching multigraph is disconnected"));
    }
    out.reverse();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct PatchCheck {
    pub walks: usize,
    pub interface: usize,
    pub walks_cost: f64,
    pub mst: f64,
    pub matching: f64,
    pub matching_exact: bool,
    pub cost: f64,
    /// `Σ w(W_j) + 2·w(MST(I))`.
    pub bound: f64,
}

/// Closed walk traversing every walk and visiting all of `interface`.
pub fn patch_walks(dp: &DistanceProvider, walks: &[Walk], interface: &VertexSet) -> HwdResult<(Walk, PatchCheck)> {
    if interface.is_empty() {
        return Err(HwdError::pre("patching needs a nonempty interface"));
    }
    let pts = interface.as_slice();
    let index = |v: usize| pts.binary_search(&v).ok();
    let dm = DistMatrix::from_points(dp, pts);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (k, w) in walks.iter().enumerate() {
        let (Some(&a), Some(&b)) = (w.vertices().first(), w.vertices().last()) else {
            return Err(HwdError::pre(format!("walk {k} is empty")));
        };
        match (index(a), index(b)) {
            (Some(x), Some(y)) => edges.push((x, y)),
            _ => return Err(HwdError::pre(format!("walk {k} has an endpoint outside the interface"))),
        }
    }
    let red = edges.len();
    let (tree, mst_w) = mst(&dm);
    edges.extend(tree);
    let mut deg = vec![0usize; pts.len()];
    for &(a, b) in &edges {
        deg[a] += 1;
        deg[b] += 1;
    }
    let odd: Vec<usize> = (0..pts.len()).filter(|&v| deg[v] % 2 == 1).collect();
    let matching = min_weight_matching(&dm, &odd)?;
    edges.extend(matching.pairs.iter().copied());
    let circuit = euler_circuit(pts.len(), &edges, 0)?;
    let mut out = vec![pts[0]];
    for (e, fwd) in circuit {
        if e < red {
            let w = walks[e].vertices();
            if fwd {
                out.extend_from_slice(&w[1..]);
            } else {
                out.extend(w.iter().rev().skip(1));
            }
        } else {
            let (a, b) = edges[e];
            out.push(pts[if fwd { b } else { a }]);
        }
    }
    let mut walk = Walk::new(out);
    walk.collapse();
    let walks_cost: f64 = walks.iter().map(|w| w.cost(dp)).sum();
    let cost = walk.cost(dp);
    let check = PatchCheck {
        walks: walks.len(),
        interface: pts.len(),
        walks_cost,
        mst: mst_w,
        matching: matching.weight,
        matching_exact: matching.exact,
        cost,
        bound: walks_cost + 2.0 * mst_w,
    };
    if cost > check.bound + dp.tol() * (walk.len() as f64 + 1.0) {
        return Err(HwdError::invariant(format!(
            "patched walk costs {cost}, above walks + 2 MST = {}",
            check.bound
        )));
    }
    Ok((walk, check))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exhaustive_matching(dm: &DistMatrix, pts: &[usize]) -> f64 {
        if pts.is_empty() {
            return 0.0;
        }
        let (a, rest) = (pts[0], &pts[1..]);
        (0..rest.len())
            .map(|k| {
                let mut r = rest.to_vec();
                let b = r.remove(k);
                dm.get(a, b) + exhaustive_matching(dm, &r)
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn unit_square() {
        let p = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let dm = DistMatrix::from_fn(4, |a, b| {
            let (x, y): ((f64, f64), (f64, f64)) = (p[a], p[b]);
            ((x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sqrt()
        });
        assert_eq!(mst(&dm).1, 3.0);
        assert_eq!(min_weight_matching(&dm, &[0, 1, 2, 3]).unwrap().weight, 2.0);
        assert!(min_weight_matching(&dm, &[0, 1, 2]).is_err());
    }

    #[test]
    fn dp_matches_exhaustive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let w: Vec<f64> = (0..144).map(|_| rng.random_range(1.0..10.0)).collect();
            let dm = DistMatrix::from_fn(12, |a, b| if a == b { 0.0 } else { w[a.min(b) * 12 + a.max(b)] });
            let pts: Vec<usize> = (0..10).collect();
            let m = min_weight_matching(&dm, &pts).unwrap();
            assert!((m.weight - exhaustive_matching(&dm, &pts)).abs() < 1e-9);
        }
    }

    #[test]
    fn large_matching_below_mst() {
        let dm = DistMatrix::from_fn(30, |a, b| ((a as f64 * 1.7).sin() * 5.0 - (b as f64 * 1.7).sin() * 5.0).abs() + if a == b { 0.0 } else { 1.0 });
        let pts: Vec<usize> = (0..30).collect();
        let m = min_weight_matching(&dm, &pts).unwrap();
        assert!(!m.exact && m.weight <= mst(&dm).1 + 1e-9);
    }

    #[test]
    fn trivial_and_loop_walks() {
        let g = crate::generate::star(6).unwrap();
        let dp = DistanceProvider::new(&g);
        let one = VertexSet::from_vec(vec![1]);
        let (w, _) = patch_walks(&dp, &[], &one).unwrap();
        assert_eq!(w.vertices(), &[1]);
        let iface = VertexSet::from_vec(vec![1, 2, 3]);
        let walk = Walk::new(vec![1, 0, 4, 0, 1]);
        let (w, c) = patch_walks(&dp, &[walk], &iface).unwrap();
        assert!(w.is_closed() && c.cost <= c.bound + 1e-9);
        for v in [1, 2, 3, 4] {
            assert!(w.vertices().contains(&v));
        }
    }

    #[test]
    fn three_walks_six_points() {
        let g = crate::generate::grid(4).unwrap();
        let dp = DistanceProvider::new(&g);
        let iface = VertexSet::from_vec(vec![0, 3, 5, 10, 12, 15]);
        let walks = vec![Walk::new(vec![0, 1, 2, 3]), Walk::new(vec![5, 6, 10]), Walk::new(vec![12, 13, 14, 15])];
        let (w, c) = patch_walks(&dp, &walks, &iface).unwrap();
        assert!(w.is_closed());
        assert!(c.cost <= c.bound + 1e-9);
        for v in [1, 2, 6, 13, 14] {
            assert!(w.vertices().contains(&v));
        }
    }
}
