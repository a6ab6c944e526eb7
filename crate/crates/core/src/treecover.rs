//! Tree covers from leveled shortest-path covers split into separated groups.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::hierarchy::{check_min_distance, Scales, SpcBuilder};
use crate::metric::DistanceProvider;
use crate::oracle::Lca;
use crate::spc::{epsnet_spc, local_search};
use crate::vset::VertexSet;

pub const NONE: usize = usize::MAX;

/// One dominating tree. Nodes `0..n` are the leaves (node id = vertex id); later nodes are
/// hub copies.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverTree {
    pub q: usize,
    pub j: usize,
    pub underlying: Vec<usize>,
    /// `-1` for leaves, `k` for copies made at step `k` (scale index `q + kK`).
    pub level: Vec<i64>,
    pub parent: Vec<usize>,
    pub weight: Vec<f64>,
    /// Roots before joining, in id order; the first is the tree root.
    pub roots: Vec<usize>,
    pub dist_to_root: Vec<f64>,
}

impl CoverTree {
    pub fn node_count(&self) -> usize {
        self.underlying.len()
    }

    pub fn root(&self) -> usize {
        self.roots[0]
    }

    /// Children lists.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.node_count()];
        for (v, &p) in self.parent.iter().enumerate() {
            if p != NONE {
                ch[p].push(v);
            }
        }
        ch
    }

    fn compute_dist_to_root(&mut self) -> HwdResult<()> {
        let ch = self.children();
        let mut d = vec![f64::NAN; self.node_count()];
        let mut stack = vec![self.root()];
        d[self.root()] = 0.0;
        let mut seen = 1;
        while let Some(u) = stack.pop() {
            for &c in &ch[u] {
                d[c] = d[u] + self.weight[c];
                seen += 1;
                stack.push(c);
            }
        }
        if seen != self.node_count() {
            return Err(HwdError::invariant(format!("tree (q={}, j={}) is not connected", self.q, self.j)));
        }
        self.dist_to_root = d;
        Ok(())
    }

    /// Tree distance by walking parents (reference implementation).
    pub fn naive_distance(&self, u: usize, v: usize) -> f64 {
        let mut anc = std::collections::HashMap::new();
        let (mut x, mut acc) = (u, 0.0);
        loop {
            anc.insert(x, acc);
            if self.parent[x] == NONE {
                break;
            }
            acc += self.weight[x];
            x = self.parent[x];
        }
        let (mut y, mut acc) = (v, 0.0);
        loop {
            if let Some(a) = anc.get(&y) {
                return a + acc;
            }
            acc += self.weight[y];
            y = self.parent[y];
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct TreeLevel {
    pub i: usize,
    pub r: f64,
    pub hubs: VertexSet,
    pub groups: Vec<VertexSet>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeCover {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    /// Level stride `K = ⌈log_{1+δ}(32/ε)⌉`.
    pub stride: usize,
    /// Graph diameter; weight of root-joining edges.
    pub phi: f64,
    pub scale: f64,
    pub levels: Vec<TreeLevel>,
    pub trees: Vec<CoverTree>,
}

impl TreeCover {
    pub fn s_max(&self) -> usize {
        self.levels.iter().map(|l| l.groups.len()).max().unwrap_or(0)
    }

    pub fn total_nodes(&self) -> usize {
        self.trees.iter().map(|t| t.node_count()).sum()
    }
}

/// Greedy split of `hubs` (increasing id) into groups with pairwise distance `> (2+4ε)r`.
pub fn partition_spc_groups(dp: &DistanceProvider, hubs: &VertexSet, r: f64, eps: f64) -> Vec<VertexSet> {
    let sep = (2.0 + 4.0 * eps) * r;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for x in hubs.iter() {
        let row = dp.row(x);
        match groups.iter_mut().find(|g| g.iter().all(|&y| dp.gt(row[y], sep))) {
            Some(g) => g.push(x),
            None => groups.push(vec![x]),
        }
    }
    groups.into_iter().map(VertexSet::from_sorted).collect()
}

pub fn build_tree_cover(dp: &DistanceProvider, eps: f64, builder: SpcBuilder) -> HwdResult<TreeCover> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(HwdError::param(format!("eps must lie in (0, 1], got {eps}")));
    }
    check_min_distance(dp)?;
    let n = dp.n();
    let delta = eps / 3.0;
    let scales = Scales { ratio: 1.0 + delta };
    let stride = ((32.0 / eps).ln() / (1.0 + delta).ln()).ceil() as usize;
    let phi = dp.diameter();
    let top: Option<usize> = (phi >= 1.0).then(|| {
        let mut t = (phi.ln() / (1.0 + delta).ln()).floor() as i64;
        while scales.r(t + 1) <= phi {
            t += 1;
        }
        while t > 0 && scales.r(t) > phi {
            t -= 1;
        }
        t as usize
    });
    let levels: Vec<TreeLevel> = match top {
        None => Vec::new(),
        Some(top) => (0..=top)
            .into_par_iter()
            .map(|i| {
                let r = scales.r(i as i64);
                let spc = match builder {
                    SpcBuilder::LocalSearch(s) => local_search(dp, r, eps, 2.0 + eps, s)?.0,
                    SpcBuilder::EpsNet => epsnet_spc(dp, r, eps)?,
                };
                let groups = partition_spc_groups(dp, &spc.hubs, r, eps);
                Ok(TreeLevel { i, r, hubs: spc.hubs, groups })
            })
            .collect::<HwdResult<_>>()?,
    };
    let s_max = levels.iter().map(|l| l.groups.len()).max().unwrap_or(0).max(1);
    let jobs: Vec<(usize, usize)> = (0..stride).flat_map(|q| (1..=s_max).map(move |j| (q, j))).collect();
    let trees = jobs
        .par_iter()
        .map(|&(q, j)| build_tree(dp, &levels, eps, stride, phi, q, j))
        .collect::<HwdResult<Vec<_>>>()?;
    Ok(TreeCover { n, eps, delta, stride, phi, scale: 1.0, levels, trees })
}

fn build_tree(
    dp: &DistanceProvider,
    levels: &[TreeLevel],
    eps: f64,
    stride: usize,
    phi: f64,
    q: usize,
    j: usize,
) -> HwdResult<CoverTree> {
    let n = dp.n();
    let tol = dp.tol();
    let mut t = CoverTree {
        q,
        j,
        underlying: (0..n).collect(),
        level: vec![-1; n],
        parent: vec![NONE; n],
        weight: vec![0.0; n],
        roots: Vec::new(),
        dist_to_root: Vec::new(),
    };
    let mut reps: Vec<usize> = (0..n).collect();
    let mut leaf_rep: Vec<usize> = (0..n).collect();
    let mut leaf_acc = vec![0.0f64; n];
    let mut k = 0usize;
    while q + k * stride < levels.len() {
        let lvl = &levels[q + k * stride];
        let reach = (1.0 + 2.0 * eps) * lvl.r + tol;
        let group: &[usize] = lvl.groups.get(j - 1).map_or(&[], |g| g.as_slice());
        let mut copies: Vec<(usize, usize)> = Vec::new();
        let mut next = Vec::with_capacity(reps.len());
        for &rep in &reps {
            let row = dp.row(t.underlying[rep]);
            let mut hit = group.iter().copied().filter(|&x| row[x] <= reach);
            let Some(x) = hit.next() else {
                next.push(rep);
                continue;
            };
            if let Some(y) = hit.next() {
                return Err(HwdError::internal(format!(
                    "hubs {x} and {y} of group {j} at level {} both reach representative {rep}",
                    lvl.i
                )));
            }
            let node = match copies.iter().find(|c| c.0 == x) {
                Some(&(_, node)) => node,
                None => {
                    let node = t.underlying.len();
                    t.underlying.push(x);
                    t.level.push(k as i64);
                    t.parent.push(NONE);
                    t.weight.push(0.0);
                    copies.push((x, node));
                    node
                }
            };
            t.parent[rep] = node;
            t.weight[rep] = row[x];
        }
        next.extend(copies.iter().map(|c| c.1));
        for v in 0..n {
            let r = leaf_rep[v];
            if t.parent[r] != NONE && t.level[t.parent[r]] == k as i64 {
                leaf_acc[v] += t.weight[r];
                leaf_rep[v] = t.parent[r];
            }
            if leaf_acc[v] > 4.0 * lvl.r + tol {
                return Err(HwdError::invariant(format!(
                    "leaf {v} is {} from its representative at level {}, beyond 4 r",
                    leaf_acc[v], lvl.i
                )));
            }
        }
        reps = next;
        k += 1;
    }
    reps.sort_unstable();
    for w in reps.windows(2) {
        t.parent[w[1]] = w[0];
        t.weight[w[1]] = phi;
    }
    t.roots = reps;
    t.compute_dist_to_root()?;
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct TreeCoverCheck {
    pub pairs: usize,
    /// Worst `min_T d_T(u,v) / d(u,v)` and its pair.
    pub worst_ratio: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// First pair some tree underestimates: `(tree, u, v, tree distance, d)`.
    pub domination_violation: Option<(usize, usize, usize, f64, f64)>,
    pub stretch_ok: bool,
}

impl TreeCoverCheck {
    pub fn ok(&self) -> bool {
        self.domination_violation.is_none() && self.stretch_ok
    }
}

/// Full pair scan: domination in every tree and best stretch `≤ 1+2ε`.
pub fn verify_tree_cover(dp: &DistanceProvider, tc: &TreeCover) -> HwdResult<TreeCoverCheck> {
    let lcas: Vec<Lca> = tc.trees.par_iter().map(Lca::build).collect::<HwdResult<_>>()?;
    let n = dp.n();
    let tol = dp.tol();
    let per_u: Vec<(f64, Option<(usize, usize)>, Option<(usize, usize, usize, f64, f64)>)> = (0..n)
        .into_par_iter()
        .map(|u| {
            let row = dp.row(u);
            let mut worst = (0.0f64, None);
            let mut dom = None;
            for v in u + 1..n {
                let d = row[v];
                let mut best = f64::INFINITY;
                for (k, l) in lcas.iter().enumerate() {
                    let td = l.distance(u, v);
                    if dom.is_none() && td < d - tol {
                        dom = Some((k, u, v, td, d));
                    }
                    best = best.min(td);
                }
                let ratio = if d > 0.0 { best / d } else { 1.0 };
                if ratio > worst.0 {
                    worst = (ratio, Some((u, v)));
                }
            }
            (worst.0, worst.1, dom)
        })
        .collect();
    let mut check = TreeCoverCheck {
        pairs: n * n.saturating_sub(1) / 2,
        worst_ratio: 1.0,
        worst_pair: None,
        domination_violation: None,
        stretch_ok: true,
    };
    for (ratio, pair, dom) in per_u {
        if pair.is_some() && (check.worst_pair.is_none() || ratio > check.worst_ratio) {
            check.worst_ratio = ratio;
            check.worst_pair = pair;
        }
        if check.domination_violation.is_none() {
            check.domination_violation = dom;
        }
    }
    if let Some((u, v)) = check.worst_pair {
        let d = dp.d(u, v);
        check.stretch_ok = check.worst_ratio * d <= (1.0 + 2.0 * tc.eps) * d + tol;
    }
    Ok(check)
}

const TREE_MAGIC: &[u8; 8] = b"HWDTREE\0";
const TREE_VERSION: u32 = 1;

fn write_set<W: Write>(w: &mut W, s: &[usize]) -> std::io::Result<()> {
    w.write_u64::<LE>(s.len() as u64)?;
    for &x in s {
        w.write_u64::<LE>(x as u64)?;
    }
    Ok(())
}

fn read_vec<R: Read>(r: &mut R) -> std::io::Result<Vec<usize>> {
    let k = r.read_u64::<LE>()? as usize;
    (0..k).map(|_| r.read_u64::<LE>().map(|x| x as usize)).collect()
}

fn enc(x: usize) -> u64 {
    if x == NONE {
        u64::MAX
    } else {
        x as u64
    }
}

fn dec(x: u64) -> usize {
    if x == u64::MAX {
        NONE
    } else {
        x as usize
    }
}

/// Versioned little-endian serialization of a tree cover.
pub fn write_tree_cover<W: Write>(w: &mut W, tc: &TreeCover) -> std::io::Result<()> {
    w.write_all(TREE_MAGIC)?;
    w.write_u32::<LE>(TREE_VERSION)?;
    w.write_u64::<LE>(tc.n as u64)?;
    for x in [tc.eps, tc.delta, tc.phi, tc.scale] {
        w.write_f64::<LE>(x)?;
    }
    w.write_u64::<LE>(tc.stride as u64)?;
    w.write_u64::<LE>(tc.levels.len() as u64)?;
    for l in &tc.levels {
        w.write_u64::<LE>(l.i as u64)?;
        w.write_f64::<LE>(l.r)?;
        write_set(w, l.hubs.as_slice())?;
        w.write_u64::<LE>(l.groups.len() as u64)?;
        for g in &l.groups {
            write_set(w, g.as_slice())?;
        }
    }
    w.write_u64::<LE>(tc.trees.len() as u64)?;
    for t in &tc.trees {
        w.write_u64::<LE>(t.q as u64)?;
        w.write_u64::<LE>(t.j as u64)?;
        w.write_u64::<LE>(t.node_count() as u64)?;
        for v in 0..t.node_count() {
            w.write_u64::<LE>(t.underlying[v] as u64)?;
            w.write_i64::<LE>(t.level[v])?;
            w.write_u64::<LE>(enc(t.parent[v]))?;
            w.write_f64::<LE>(t.weight[v])?;
        }
        write_set(w, &t.roots)?;
    }
    Ok(())
}

fn bad(msg: &str) -> HwdError {
    HwdError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string()))
}

pub fn read_tree_cover<R: Read>(r: &mut R) -> HwdResult<TreeCover> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TREE_MAGIC {
        return Err(bad("not a tree cover file"));
    }
    if r.read_u32::<LE>()? != TREE_VERSION {
        return Err(bad("unsupported tree cover version"));
    }
    let n = r.read_u64::<LE>()? as usize;
    let eps = r.read_f64::<LE>()?;
    let delta = r.read_f64::<LE>()?;
    let phi = r.read_f64::<LE>()?;
    let scale = r.read_f64::<LE>()?;
    let stride = r.read_u64::<LE>()? as usize;
    let nl = r.read_u64::<LE>()? as usize;
    let mut levels = Vec::with_capacity(nl);
    for _ in 0..nl {
        let i = r.read_u64::<LE>()? as usize;
        let lr = r.read_f64::<LE>()?;
        let hubs = VertexSet::from_vec(read_vec(r)?);
        let ng = r.read_u64::<LE>()? as usize;
        let groups = (0..ng).map(|_| read_vec(r).map(VertexSet::from_vec)).collect::<std::io::Result<_>>()?;
        levels.push(TreeLevel { i, r: lr, hubs, groups });
    }
    let nt = r.read_u64::<LE>()? as usize;
    let mut trees = Vec::with_capacity(nt);
    for _ in 0..nt {
        let q = r.read_u64::<LE>()? as usize;
        let j = r.read_u64::<LE>()? as usize;
        let nodes = r.read_u64::<LE>()? as usize;
        let mut t = CoverTree {
            q,
            j,
            underlying: Vec::with_capacity(nodes),
            level: Vec::with_capacity(nodes),
            parent: Vec::with_capacity(nodes),
            weight: Vec::with_capacity(nodes),
            roots: Vec::new(),
            dist_to_root: Vec::new(),
        };
        for _ in 0..nodes {
            t.underlying.push(r.read_u64::<LE>()? as usize);
            t.level.push(r.read_i64::<LE>()?);
            t.parent.push(dec(r.read_u64::<LE>()?));
            t.weight.push(r.read_f64::<LE>()?);
        }
        t.roots = read_vec(r)?;
        if t.roots.is_empty() || t.parent.iter().any(|&p| p != NONE && p >= nodes) {
            return Err(bad("corrupt tree table"));
        }
        t.compute_dist_to_root()?;
        trees.push(t);
    }
    Ok(TreeCover { n, eps, delta, stride, phi, scale, levels, trees })
}
