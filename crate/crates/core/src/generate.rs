//! Deterministic instance generators for fixtures, tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::HwdResult;
use crate::graph::WeightedGraph;

fn build(n: usize, edges: &[(usize, usize, f64)]) -> HwdResult<WeightedGraph> {
    Ok(WeightedGraph::from_edges(n, edges)?.0)
}

/// Center 0 with `leaves` unit spokes.
pub fn star(leaves: usize) -> HwdResult<WeightedGraph> {
    let e: Vec<_> = (1..=leaves).map(|l| (0, l, 1.0)).collect();
    build(leaves + 1, &e)
}

/// `k×k` grid with unit edges; vertex `i·k + j`.
pub fn grid(k: usize) -> HwdResult<WeightedGraph> {
    let mut e = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let v = i * k + j;
            if j + 1 < k {
                e.push((v, v + 1, 1.0));
            }
            if i + 1 < k {
                e.push((v, v + k, 1.0));
            }
        }
    }
    build(k * k, &e)
}

/// Center `s = 0` joined by unit edges to pairs `v_i = 3i+1`, `u_i = 3i+2`; each pair is
/// joined to `z_i = 3i+3` by edges of weight `1/(7+16ε)`.
pub fn duostar(pairs: usize, eps: f64) -> HwdResult<WeightedGraph> {
    let alpha = 1.0 / (7.0 + 16.0 * eps);
    let mut e = Vec::new();
    for i in 0..pairs {
        let (v, u, z) = (3 * i + 1, 3 * i + 2, 3 * i + 3);
        e.extend([(0, v, 1.0), (0, u, 1.0), (v, z, alpha), (u, z, alpha)]);
    }
    build(3 * pairs + 1, &e)
}

fn points(n: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect()
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Euclidean MST edges (Prim) of a point set.
fn euclidean_mst(p: &[(f64, f64)]) -> Vec<(usize, usize, f64)> {
    let n = p.len();
    let mut best = vec![(f64::INFINITY, 0usize); n];
    let mut done = vec![false; n];
    let mut out = Vec::new();
    let mut cur = 0;
    done[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if !done[v] {
                let d = dist(p[cur], p[v]);
                if d < best[v].0 {
                    best[v] = (d, cur);
                }
            }
        }
        let v = (0..n).filter(|&v| !done[v]).min_by(|&a, &b| best[a].0.total_cmp(&best[b].0)).unwrap();
        done[v] = true;
        out.push((best[v].1, v, best[v].0));
        cur = v;
    }
    out
}

/// Uniform points in the unit square; edges between points within `radius`, plus the
/// Euclidean MST so the graph is connected. Weights are Euclidean lengths.
pub fn random_geometric(n: usize, radius: f64, seed: u64) -> HwdResult<WeightedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = points(n, &mut rng);
    let mut e = euclidean_mst(&p);
    for a in 0..n {
        for b in a + 1..n {
            let d = dist(p[a], p[b]);
            if d <= radius {
                e.push((a, b, d));
            }
        }
    }
    build(n, &e)
}

/// Complete graph on uniform points in the unit square with Euclidean weights.
pub fn euclidean_complete(n: usize, seed: u64) -> HwdResult<WeightedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = points(n, &mut rng);
    let mut e = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            e.push((a, b, dist(p[a], p[b])));
        }
    }
    build(n, &e)
}

/// Random spanning tree plus `extra` random edges; weights uniform in `[wmin, wmax]`.
pub fn random_connected(n: usize, extra: usize, wmin: f64, wmax: f64, seed: u64) -> HwdResult<WeightedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = Vec::new();
    let w = |rng: &mut ChaCha8Rng| if wmax > wmin { rng.random_range(wmin..=wmax) } else { wmin };
    for v in 1..n {
        let u = rng.random_range(0..v);
        let x = w(&mut rng);
        e.push((u, v, x));
    }
    if n >= 2 {
        for _ in 0..extra {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let x = w(&mut rng);
            e.push((a, b, x));
        }
    }
    build(n, &e)
}

/// Hub `0` with `clusters` spokes of weight `spoke`; spoke end `c_k` carries
/// `cluster_size − 1` pendant points at weights in `[1, 1.3]`. Terminals are all
/// cluster vertices. Returns the graph and its terminals.
pub fn clustered_towns(
    clusters: usize,
    cluster_size: usize,
    spoke: f64,
    seed: u64,
) -> HwdResult<(WeightedGraph, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e = Vec::new();
    let mut terminals = Vec::new();
    let mut next = 1;
    for _ in 0..clusters {
        let c = next;
        next += 1;
        e.push((0, c, spoke));
        terminals.push(c);
        for _ in 1..cluster_size {
            e.push((c, next, rng.random_range(1.0..=1.3)));
            terminals.push(next);
            next += 1;
        }
    }
    Ok((build(next, &e)?, terminals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let s = star(5).unwrap();
        assert_eq!((s.vertex_count(), s.edge_count()), (6, 5));
        let g = grid(4).unwrap();
        assert_eq!((g.vertex_count(), g.edge_count()), (16, 24));
    }

    #[test]
    fn duostar_weights() {
        let g = duostar(3, 0.1).unwrap();
        assert_eq!(g.vertex_count(), 10);
        let alpha = 1.0 / (7.0 + 16.0 * 0.1);
        let small: Vec<f64> = g.edges().iter().map(|e| e.2).filter(|&w| w < 1.0).collect();
        assert_eq!(small.len(), 6);
        assert!(small.iter().all(|&w| (w - alpha).abs() < 1e-15));
    }

    #[test]
    fn deterministic() {
        let a = random_geometric(40, 0.2, 7).unwrap();
        let b = random_geometric(40, 0.2, 7).unwrap();
        assert_eq!(a.edges(), b.edges());
    }
}
