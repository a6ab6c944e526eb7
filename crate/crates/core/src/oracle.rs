//! Approximate distance oracle: a tree cover with an Euler-tour sparse-table LCA per tree.

use std::io::{Read, Write};
use std::time::Instant;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::treecover::{read_tree_cover, write_tree_cover, CoverTree, TreeCover, NONE};

/// Euler tour of a rooted tree with range-minimum over depths.
#[derive(Clone, Debug, PartialEq)]
pub struct Lca {
    pub euler: Vec<u32>,
    pub depth: Vec<u32>,
    pub first: Vec<u32>,
    /// `table[k][i]` is the minimum of `depth << 32 | node` over tour positions `[i, i + 2^k)`.
    pub table: Vec<Vec<u64>>,
    pub dist_to_root: Vec<f64>,
}

impl Lca {
    pub fn build(t: &CoverTree) -> HwdResult<Self> {
        let m = t.node_count();
        let ch = t.children();
        let mut euler = Vec::with_capacity(2 * m);
        let mut depth = Vec::with_capacity(2 * m);
        let mut first = vec![u32::MAX; m];
        let root = t.root();
        // (node, depth, next child index)
        let mut stack = vec![(root, 0u32, 0usize)];
        first[root] = 0;
        euler.push(root as u32);
        depth.push(0);
        while let Some(top) = stack.last_mut() {
            let (u, du, ci) = *top;
            if ci < ch[u].len() {
                top.2 += 1;
                let c = ch[u][ci];
                first[c] = euler.len() as u32;
                euler.push(c as u32);
                depth.push(du + 1);
                stack.push((c, du + 1, 0));
            } else {
                stack.pop();
                if let Some(&(p, dp, _)) = stack.last() {
                    euler.push(p as u32);
                    depth.push(dp);
                }
            }
        }
        if first.contains(&u32::MAX) {
            return Err(HwdError::invariant(format!("tree (q={}, j={}) is disconnected", t.q, t.j)));
        }
        let len = euler.len();
        let mut table = vec![(0..len).map(|p| (depth[p] as u64) << 32 | euler[p] as u64).collect::<Vec<u64>>()];
        let mut w = 1;
        while 2 * w <= len {
            let prev = table.last().unwrap();
            let next: Vec<u64> = (0..=len - 2 * w).map(|i| prev[i].min(prev[i + w])).collect();
            table.push(next);
            w *= 2;
        }
        Ok(Lca { euler, depth, first, table, dist_to_root: t.dist_to_root.clone() })
    }

    pub fn lca(&self, u: usize, v: usize) -> usize {
        let (mut l, mut r) = (self.first[u] as usize, self.first[v] as usize);
        if l > r {
            std::mem::swap(&mut l, &mut r);
        }
        let k = (usize::BITS - 1 - (r - l + 1).leading_zeros()) as usize;
        let row = &self.table[k];
        (row[l].min(row[r + 1 - (1 << k)]) & 0xffff_ffff) as usize
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        let a = self.lca(u, v);
        self.dist_to_root[u] + self.dist_to_root[v] - 2.0 * self.dist_to_root[a]
    }

    pub fn words(&self) -> usize {
        self.euler.len() + self.depth.len() + self.first.len() + self.dist_to_root.len()
            + 2 * self.table.iter().map(Vec::len).sum::<usize>()
    }
}

/// Ancestor-walk LCA (reference implementation).
pub fn naive_lca(t: &CoverTree, u: usize, v: usize) -> usize {
    let mut anc = std::collections::HashSet::new();
    let mut x = u;
    loop {
        anc.insert(x);
        if t.parent[x] == NONE {
            break;
        }
        x = t.parent[x];
    }
    let mut y = v;
    while !anc.contains(&y) {
        y = t.parent[y];
    }
    y
}

#[derive(Clone, Debug)]
pub struct DistanceOracle {
    pub cover: TreeCover,
    pub lcas: Vec<Lca>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct OracleSize {
    pub trees: usize,
    pub nodes: usize,
    pub words: usize,
    /// `Σ nodes·⌈log₂ nodes⌉` over trees.
    pub nlogn: usize,
}

pub fn build_oracle(cover: TreeCover) -> HwdResult<DistanceOracle> {
    let lcas = cover.trees.par_iter().map(Lca::build).collect::<HwdResult<_>>()?;
    Ok(DistanceOracle { cover, lcas })
}

impl DistanceOracle {
    pub fn n(&self) -> usize {
        self.cover.n
    }

    pub fn eps(&self) -> f64 {
        self.cover.eps
    }

    /// Estimate in the units the cover was built in.
    pub fn query(&self, u: usize, v: usize) -> f64 {
        if u == v {
            return 0.0;
        }
        self.lcas.iter().map(|l| l.distance(u, v)).fold(f64::INFINITY, f64::min)
    }

    /// Estimate in the units of the graph before rescaling.
    pub fn query_original(&self, u: usize, v: usize) -> f64 {
        self.query(u, v) / self.cover.scale
    }

    pub fn size(&self) -> OracleSize {
        let nodes = self.cover.total_nodes();
        OracleSize {
            trees: self.lcas.len(),
            nodes,
            words: self.lcas.iter().map(Lca::words).sum::<usize>() + 4 * nodes,
            nlogn: self
                .cover
                .trees
                .iter()
                .map(|t| {
                    let m = t.node_count();
                    m * (usize::BITS - (m.max(2) - 1).leading_zeros()) as usize
                })
                .sum(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct BenchStats {
    pub queries: usize,
    pub mean_ns: f64,
    pub median_ns: f64,
    pub p99_ns: f64,
    pub qps: f64,
    /// Sum of estimates; keeps the work observable and pins the pair sequence.
    pub checksum: f64,
}

pub fn bench_pairs(n: usize, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n == 0 {
        return Vec::new();
    }
    (0..count).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect()
}

pub fn bench_oracle(o: &DistanceOracle, count: usize, seed: u64) -> BenchStats {
    let pairs = bench_pairs(o.n(), count, seed);
    if pairs.is_empty() {
        return BenchStats::default();
    }
    let mut lat = Vec::with_capacity(pairs.len());
    let mut checksum = 0.0;
    let start = Instant::now();
    for &(u, v) in &pairs {
        let t = Instant::now();
        checksum += std::hint::black_box(o.query(u, v));
        lat.push(t.elapsed().as_nanos() as f64);
    }
    let total = start.elapsed().as_secs_f64();
    let mean = lat.iter().sum::<f64>() / lat.len() as f64;
    lat.sort_by(f64::total_cmp);
    let pick = |p: f64| lat[((p * lat.len() as f64).ceil() as usize).clamp(1, lat.len()) - 1];
    BenchStats {
        queries: lat.len(),
        mean_ns: mean,
        median_ns: pick(0.5),
        p99_ns: pick(0.99),
        qps: if total > 0.0 { lat.len() as f64 / total } else { f64::INFINITY },
        checksum,
    }
}

const LCA_MAGIC: &[u8; 8] = b"HWDLCA\0\0";
const LCA_VERSION: u32 = 1;

fn write_u32s<W: Write>(w: &mut W, xs: &[u32]) -> std::io::Result<()> {
    w.write_u64::<LE>(xs.len() as u64)?;
    xs.iter().try_for_each(|&x| w.write_u32::<LE>(x))
}

fn read_u32s<R: Read>(r: &mut R) -> std::io::Result<Vec<u32>> {
    let k = r.read_u64::<LE>()? as usize;
    (0..k).map(|_| r.read_u32::<LE>()).collect()
}

pub fn write_oracle<W: Write>(w: &mut W, o: &DistanceOracle) -> std::io::Result<()> {
    write_tree_cover(w, &o.cover)?;
    w.write_all(LCA_MAGIC)?;
    w.write_u32::<LE>(LCA_VERSION)?;
    w.write_u64::<LE>(o.lcas.len() as u64)?;
    for l in &o.lcas {
        write_u32s(w, &l.euler)?;
        write_u32s(w, &l.depth)?;
        write_u32s(w, &l.first)?;
        w.write_u64::<LE>(l.table.len() as u64)?;
        for row in &l.table {
            w.write_u64::<LE>(row.len() as u64)?;
            row.iter().try_for_each(|&x| w.write_u64::<LE>(x))?;
        }
    }
    Ok(())
}

fn corrupt(msg: &str) -> HwdError {
    HwdError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string()))
}

pub fn read_oracle<R: Read>(r: &mut R) -> HwdResult<DistanceOracle> {
    let cover = read_tree_cover(r)?;
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != LCA_MAGIC || r.read_u32::<LE>()? != LCA_VERSION {
        return Err(corrupt("missing or unsupported LCA section"));
    }
    let k = r.read_u64::<LE>()? as usize;
    if k != cover.trees.len() {
        return Err(corrupt("LCA table count differs from tree count"));
    }
    let mut lcas = Vec::with_capacity(k);
    for t in &cover.trees {
        let euler = read_u32s(r)?;
        let depth = read_u32s(r)?;
        let first = read_u32s(r)?;
        let levels = r.read_u64::<LE>()? as usize;
        let table = (0..levels)
            .map(|_| {
                let k = r.read_u64::<LE>()? as usize;
                (0..k).map(|_| r.read_u64::<LE>()).collect::<std::io::Result<Vec<u64>>>()
            })
            .collect::<std::io::Result<Vec<_>>>()?;
        let m = t.node_count();
        let len = euler.len();
        let ok = len == 2 * m - 1
            && depth.len() == len
            && first.len() == m
            && first.iter().all(|&f| (f as usize) < len)
            && euler.iter().all(|&x| (x as usize) < m)
            && !table.is_empty()
            && table.iter().enumerate().all(|(k, row)| row.len() == len + 1 - (1 << k) && row.iter().all(|&p| ((p & 0xffff_ffff) as usize) < m));
        if !ok {
            return Err(corrupt("inconsistent LCA tables"));
        }
        lcas.push(Lca { euler, depth, first, table, dist_to_root: t.dist_to_root.clone() });
    }
    Ok(DistanceOracle { cover, lcas })
}
