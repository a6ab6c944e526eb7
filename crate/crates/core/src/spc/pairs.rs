//! Pairs needing a hub at one scale, each with its candidate hub set.

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use crate::metric::DistanceProvider;

/// Pairs `u < z` with `d(u,z) ∈ (r, span·r]` and their sets
/// `S_{u,z} = {y : d(u,y)+d(y,z) ≤ (1+ε)·d(u,z)}`.
pub(crate) struct PairIndex {
    pub pairs: Vec<(usize, usize)>,
    pub sets: Vec<FixedBitSet>,
}

impl PairIndex {
    pub fn build(dp: &DistanceProvider, r: f64, eps: f64, span: f64) -> Self {
        let n = dp.n();
        let tol = dp.tol();
        let (lo, hi) = (r + tol, span * r + tol);
        let per_u: Vec<Vec<((usize, usize), FixedBitSet)>> = (0..n)
            .into_par_iter()
            .map(|u| {
                let du = dp.row(u);
                let mut out = Vec::new();
                for z in u + 1..n {
                    let d = du[z];
                    if d <= lo || d > hi {
                        continue;
                    }
                    let dz = dp.row(z);
                    let lim = (1.0 + eps) * d + tol;
                    let mut s = FixedBitSet::with_capacity(n);
                    for y in 0..n {
                        if du[y] + dz[y] <= lim {
                            s.insert(y);
                        }
                    }
                    out.push(((u, z), s));
                }
                out
            })
            .collect();
        let mut pairs = Vec::new();
        let mut sets = Vec::new();
        for (p, s) in per_u.into_iter().flatten() {
            pairs.push(p);
            sets.push(s);
        }
        PairIndex { pairs, sets }
    }
}
