//! Net hierarchies from a Gonzales (farthest-point) order.

use crate::metric::DistanceProvider;
use crate::vset::VertexSet;

/// Nested nets `N_i`, each the shortest Gonzales prefix with covering radius `≤ base·ratio^i`.
#[derive(Clone, Debug)]
pub struct NetHierarchy {
    base: f64,
    ratio: f64,
    order: Vec<usize>,
    /// `radii[k]` is the distance of `order[k]` to `order[..k]`; `radii[0] = ∞`.
    radii: Vec<f64>,
    position: Vec<usize>,
}

/// Farthest-point order from vertex 0, ties to the lowest id, with insertion radii.
pub fn gonzales_order(dp: &DistanceProvider) -> (Vec<usize>, Vec<f64>) {
    let n = dp.n();
    let mut order = Vec::with_capacity(n);
    let mut radii = Vec::with_capacity(n);
    let mut near = vec![f64::INFINITY; n];
    let mut taken = vec![false; n];
    let mut next = 0usize;
    for _ in 0..n {
        order.push(next);
        radii.push(near[next]);
        taken[next] = true;
        let row = dp.row(next);
        let mut best: Option<(usize, f64)> = None;
        for v in 0..n {
            if taken[v] {
                continue;
            }
            near[v] = near[v].min(row[v]);
            if best.is_none_or(|(_, bd)| near[v] > bd) {
                best = Some((v, near[v]));
            }
        }
        match best {
            Some((v, _)) => next = v,
            None => break,
        }
    }
    (order, radii)
}

impl NetHierarchy {
    pub fn build(dp: &DistanceProvider, base: f64, ratio: f64) -> Self {
        assert!(ratio > 1.0 && base > 0.0, "net hierarchy needs ratio > 1 and base > 0");
        let (order, radii) = gonzales_order(dp);
        let mut position = vec![0; order.len()];
        for (k, &v) in order.iter().enumerate() {
            position[v] = k;
        }
        NetHierarchy { base, ratio, order, radii, position }
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn insertion_radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn delta(&self, i: i64) -> f64 {
        self.base * self.ratio.powi(i as i32)
    }

    /// Length of the shortest prefix whose covering radius is `≤ delta`.
    pub fn prefix_len_for(&self, delta: f64) -> usize {
        // radii[1..] is nonincreasing; covering radius of prefix k is radii[k] (0 when k = n).
        let n = self.order.len();
        let (mut lo, mut hi) = (1usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.radii[mid] <= delta {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }

    pub fn prefix_len(&self, i: i64) -> usize {
        self.prefix_len_for(self.delta(i))
    }

    /// Members of `N_i` in Gonzales order.
    pub fn prefix(&self, i: i64) -> &[usize] {
        &self.order[..self.prefix_len(i)]
    }

    pub fn net(&self, i: i64) -> VertexSet {
        VertexSet::from_vec(self.prefix(i).to_vec())
    }

    pub fn contains(&self, i: i64, v: usize) -> bool {
        self.position[v] < self.prefix_len(i)
    }

    /// Nearest point of `N_i` to `v`, ties to the lowest id.
    pub fn nearest(&self, dp: &DistanceProvider, i: i64, v: usize) -> usize {
        dp.nearest_in(v, self.prefix(i)).expect("nets are nonempty").0
    }

    /// First level whose net is a single point.
    pub fn top_level(&self) -> i64 {
        if self.order.len() <= 1 {
            return 0;
        }
        let r = self.radii[1];
        let mut i = ((r / self.base).ln() / self.ratio.ln()).ceil().max(0.0) as i64;
        while i > 0 && self.delta(i - 1) >= r {
            i -= 1;
        }
        while self.delta(i) < r {
            i += 1;
        }
        i
    }

    /// Materialized nets `N_0 ⊇ … ⊇ N_top`.
    pub fn levels(&self) -> Vec<VertexSet> {
        (0..=self.top_level()).map(|i| self.net(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;

    fn line4() -> DistanceProvider {
        let g = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap().0;
        DistanceProvider::new(&g)
    }

    #[test]
    fn collinear_level0() {
        let dp = line4();
        let nh = NetHierarchy::build(&dp, 1.0, 2.0);
        assert_eq!(nh.order(), &[0, 3, 1, 2]);
        let n0 = nh.net(0);
        assert_eq!(n0.as_slice(), &[0, 3]);
        for u in 0..4 {
            assert!(dp.dist_to_set(u, n0.as_slice()) <= 1.0);
        }
    }

    #[test]
    fn large_base_single_point() {
        let dp = line4();
        let nh = NetHierarchy::build(&dp, 3.0, 2.0);
        for i in 0..4 {
            assert_eq!(nh.net(i).as_slice(), &[0]);
        }
        assert_eq!(nh.top_level(), 0);
    }

    #[test]
    fn top_level_is_first_singleton() {
        let dp = line4();
        let nh = NetHierarchy::build(&dp, 0.5, 2.0);
        let t = nh.top_level();
        assert_eq!(nh.prefix_len(t), 1);
        assert!(nh.prefix_len(t - 1) > 1);
        assert_eq!(nh.levels().len() as i64, t + 1);
    }
}
