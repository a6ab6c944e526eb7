//! Hitting sets: greedy set cover and exact branch and bound on small universes.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::vset::VertexSet;

/// Largest universe handled by the exact solver.
pub const EXACT_UNIVERSE_CAP: usize = 24;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(rename_all = "kebab-case")]
pub enum HittingSetStrategy {
    /// Greedy max-coverage, ties to the lowest id.
    Greedy,
    /// Exact when the universe has at most 24 elements, greedy otherwise.
    #[default]
    ExactSmall,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HittingSetInstance {
    pub universe: VertexSet,
    pub sets: Vec<VertexSet>,
}

pub fn solve_hitting_set(
    inst: &HittingSetInstance,
    strategy: HittingSetStrategy,
) -> HwdResult<VertexSet> {
    if let Some(k) = inst.sets.iter().position(|s| s.is_empty()) {
        return Err(HwdError::pre(format!("set {k} of the hitting set instance is empty")));
    }
    let width = inst
        .sets
        .iter()
        .flat_map(|s| s.iter())
        .chain(inst.universe.iter())
        .max()
        .map_or(0, |m| m + 1);
    let bits: Vec<FixedBitSet> = inst
        .sets
        .iter()
        .map(|s| {
            let mut b = FixedBitSet::with_capacity(width);
            for x in s.iter() {
                b.insert(x);
            }
            b
        })
        .collect();
    let refs: Vec<&FixedBitSet> = bits.iter().collect();
    Ok(VertexSet::from_vec(hit_bitsets(&refs, width, strategy)))
}

/// Hitting set over bitset-encoded sets of width `width`; every set must be nonempty.
pub(crate) fn hit_bitsets(
    sets: &[&FixedBitSet],
    width: usize,
    strategy: HittingSetStrategy,
) -> Vec<usize> {
    if sets.is_empty() {
        return Vec::new();
    }
    let greedy = greedy(sets, width);
    if strategy == HittingSetStrategy::Greedy {
        return greedy;
    }
    let mut universe = FixedBitSet::with_capacity(width);
    for s in sets {
        universe.union_with(s);
    }
    let elems: Vec<usize> = universe.ones().collect();
    if elems.len() > EXACT_UNIVERSE_CAP {
        return greedy;
    }
    exact(sets, &elems, greedy)
}

fn greedy(sets: &[&FixedBitSet], width: usize) -> Vec<usize> {
    let mut count = vec![0usize; width];
    for s in sets {
        for y in s.ones() {
            count[y] += 1;
        }
    }
    let mut hit = vec![false; sets.len()];
    let mut left = sets.len();
    let mut out = Vec::new();
    while left > 0 {
        let mut best = 0usize;
        for y in 1..width {
            if count[y] > count[best] {
                best = y;
            }
        }
        debug_assert!(count[best] > 0);
        out.push(best);
        for (k, s) in sets.iter().enumerate() {
            if !hit[k] && s.contains(best) {
                hit[k] = true;
                left -= 1;
                for y in s.ones() {
                    count[y] -= 1;
                }
            }
        }
    }
    out.sort_unstable();
    out
}

fn exact(sets: &[&FixedBitSet], elems: &[usize], incumbent: Vec<usize>) -> Vec<usize> {
    let mut masks: Vec<u32> = sets
        .iter()
        .map(|s| {
            elems.iter().enumerate().filter(|(_, &e)| s.contains(e)).fold(0u32, |m, (k, _)| m | (1 << k))
        })
        .collect();
    masks.sort_unstable();
    masks.dedup();
    // A superset is hit whenever its subset is.
    let keep: Vec<u32> = masks
        .iter()
        .copied()
        .filter(|&a| !masks.iter().any(|&b| b != a && b & a == b))
        .collect();
    let mut best_mask = 0u32;
    for &y in &incumbent {
        let k = elems.iter().position(|&e| e == y).expect("greedy picks lie in the universe");
        best_mask |= 1 << k;
    }
    let mut best = best_mask.count_ones();
    branch(&keep, 0, &mut best, &mut best_mask);
    (0..elems.len()).filter(|k| best_mask & (1 << k) != 0).map(|k| elems[k]).collect()
}

fn branch(sets: &[u32], chosen: u32, best: &mut u32, best_mask: &mut u32) {
    let size = chosen.count_ones();
    let unhit = sets.iter().copied().filter(|&s| s & chosen == 0);
    let Some(pivot) = unhit.min_by_key(|s| s.count_ones()) else {
        if size < *best {
            *best = size;
            *best_mask = chosen;
        }
        return;
    };
    if size + 1 >= *best {
        return;
    }
    let mut rest = pivot;
    while rest != 0 {
        let k = rest.trailing_zeros();
        rest &= rest - 1;
        branch(sets, chosen | (1 << k), best, best_mask);
    }
}
