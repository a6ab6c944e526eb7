//! Strong padded decompositions by clustering with shifted starting times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HwdError, HwdResult};
use crate::metric::DistanceProvider;
use crate::spc::{
    build_spc_local_search, local_sparsity, minimalize_spc, towns_and_sprawl, HittingSetStrategy,
    ShortestPathCover, TownDecomposition,
};
use crate::vset::VertexSet;

/// Inverse-CDF draw from the exponential distribution with rate `lambda` truncated to
/// `[theta1, theta2]`.
pub fn sample_texp<R: Rng + ?Sized>(lambda: f64, theta1: f64, theta2: f64, rng: &mut R) -> HwdResult<f64> {
    if !(theta1 < theta2) {
        return Err(HwdError::param(format!("need theta1 < theta2, got [{theta1}, {theta2}]")));
    }
    if !(lambda > 0.0) {
        return Err(HwdError::param(format!("need lambda > 0, got {lambda}")));
    }
    Ok(texp_quantile(lambda, theta1, theta2, rng.random::<f64>()))
}

/// Quantile function; `expm1`/`ln_1p` keep it accurate as `lambda → 0`.
pub fn texp_quantile(lambda: f64, theta1: f64, theta2: f64, u: f64) -> f64 {
    let c = -(-lambda * (theta2 - theta1)).exp_m1();
    let y = theta1 - (-u * c).ln_1p() / lambda;
    y.clamp(theta1, theta2)
}

pub fn texp_cdf(lambda: f64, theta1: f64, theta2: f64, y: f64) -> f64 {
    if y <= theta1 {
        return 0.0;
    }
    if y >= theta2 {
        return 1.0;
    }
    (-lambda * (y - theta1)).exp_m1() / (-lambda * (theta2 - theta1)).exp_m1()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(rename_all = "lowercase")]
pub enum CenterKind {
    Hub,
    Town,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct ShiftedCenter {
    pub center: usize,
    pub kind: CenterKind,
    pub shift: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// Deterministic part of a decomposition at one scale: cover, towns, centers, rate.
#[derive(Clone, Debug)]
pub struct DecompositionPlan {
    pub delta: f64,
    pub eps: f64,
    pub r: f64,
    pub lambda: f64,
    pub sparsity: usize,
    pub spc: ShortestPathCover,
    pub towns: TownDecomposition,
    /// Hubs by id, then town centers by id; the index is the tie-break order.
    pub centers: Vec<(usize, CenterKind)>,
}

impl DecompositionPlan {
    pub fn new(
        dp: &DistanceProvider,
        delta: f64,
        eps: f64,
        lambda_override: Option<f64>,
        strategy: HittingSetStrategy,
    ) -> HwdResult<Self> {
        if !(0.0..=0.25).contains(&eps) {
            return Err(HwdError::param(format!("eps must lie in [0, 1/4], got {eps}")));
        }
        if !(delta > 0.0) {
            return Err(HwdError::param(format!("Delta must be positive, got {delta}")));
        }
        let r = delta / (6.0 * (1.0 + eps));
        let spc = minimalize_spc(dp, &build_spc_local_search(dp, r, eps, strategy)?)?;
        let towns = towns_and_sprawl(dp, &spc)?;
        let (s, _) = local_sparsity(dp, &spc);
        let lambda = match lambda_override {
            Some(l) if l > 0.0 => l,
            Some(l) => return Err(HwdError::param(format!("lambda must be positive, got {l}"))),
            None => 4.0 * ((2.0 * (s * s) as f64 + 1.0).ln() + 1.0),
        };
        let mut centers: Vec<(usize, CenterKind)> = spc.hubs.iter().map(|x| (x, CenterKind::Hub)).collect();
        centers.extend(towns.towns.iter().map(|t| (t.center, CenterKind::Town)));
        Ok(DecompositionPlan { delta, eps, r, lambda, sparsity: s, spc, towns, centers })
    }

    /// Shift interval (absolute) for a center kind: hubs `[a,b]·r`, town centers `[0,t]·r`.
    pub fn interval(&self, kind: CenterKind) -> (f64, f64) {
        match kind {
            CenterKind::Hub => ((0.5 + 2.0 * self.eps) * self.r, (1.0 + 2.0 * self.eps) * self.r),
            CenterKind::Town => (0.0, 0.5 * self.r),
        }
    }

    /// Shifts for one trial; each center draws from its own stream keyed by its id.
    pub fn sample_shifts(&self, seed: u64, trial: u64) -> Vec<ShiftedCenter> {
        let key = seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        self.centers
            .iter()
            .map(|&(center, kind)| {
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                rng.set_stream(center as u64);
                let (t1, t2) = self.interval(kind);
                let y = texp_quantile(self.lambda, 0.0, (t2 - t1) / self.r, rng.random::<f64>());
                ShiftedCenter { center, kind, shift: t1 + y * self.r, theta1: t1, theta2: t2 }
            })
            .collect()
    }

    pub fn sample(&self, dp: &DistanceProvider, seed: u64, trial: u64) -> HwdResult<PaddedPartition> {
        let shifts = self.sample_shifts(seed, trial);
        let assignment = assign(dp, &shifts);
        let part = PaddedPartition::assemble(self, seed, shifts, assignment);
        part.check_center_radius(dp)?;
        Ok(part)
    }
}

/// Index of the center maximizing `shift − d(center, v)`, ties to the lowest index.
pub fn assign(dp: &DistanceProvider, shifts: &[ShiftedCenter]) -> Vec<usize> {
    let rows: Vec<_> = shifts.iter().map(|c| dp.row(c.center)).collect();
    (0..dp.n())
        .into_par_iter()
        .map(|v| {
            let mut best = (0usize, f64::NEG_INFINITY);
            for (k, c) in shifts.iter().enumerate() {
                let f = c.shift - rows[k][v];
                if f > best.1 {
                    best = (k, f);
                }
            }
            best.0
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct PartitionCluster {
    pub center: usize,
    pub kind: CenterKind,
    pub shift: f64,
    pub members: VertexSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct PaddedPartition {
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub eps: f64,
    pub r: f64,
    pub lambda: f64,
    pub seed: u64,
    /// All centers with their shifts, in tie-break order.
    pub shifts: Vec<ShiftedCenter>,
    /// Center index per vertex.
    pub assignment: Vec<usize>,
    /// Nonempty clusters in center order.
    pub clusters: Vec<PartitionCluster>,
}

impl PaddedPartition {
    fn assemble(plan: &DecompositionPlan, seed: u64, shifts: Vec<ShiftedCenter>, assignment: Vec<usize>) -> Self {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); shifts.len()];
        for (v, &k) in assignment.iter().enumerate() {
            members[k].push(v);
        }
        let clusters = members
            .into_iter()
            .enumerate()
            .filter(|(_, m)| !m.is_empty())
            .map(|(k, m)| PartitionCluster {
                center: shifts[k].center,
                kind: shifts[k].kind,
                shift: shifts[k].shift,
                members: VertexSet::from_sorted(m),
            })
            .collect();
        PaddedPartition {
            delta: plan.delta,
            eps: plan.eps,
            r: plan.r,
            lambda: plan.lambda,
            seed,
            shifts,
            assignment,
            clusters,
        }
    }

    /// Every cluster contains its center and reaches all members inside `G[C]` within `Δ/2`.
    fn check_center_radius(&self, dp: &DistanceProvider) -> HwdResult<()> {
        let g = dp.graph();
        for c in &self.clusters {
            if !c.members.contains(c.center) {
                return Err(HwdError::invariant(format!("cluster of center {} misses its center", c.center)));
            }
            let d = g.induced_distances_masked(&g.mask(&c.members), c.center);
            if let Some(v) = c.members.iter().find(|&v| dp.gt(d[v], self.delta / 2.0)) {
                return Err(HwdError::invariant(format!(
                    "vertex {v} is {} from center {} inside its cluster, beyond Delta/2",
                    d[v], c.center
                )));
            }
        }
        Ok(())
    }
}

pub fn padded_decomposition(dp: &DistanceProvider, delta: f64, eps: f64, seed: u64) -> HwdResult<PaddedPartition> {
    DecompositionPlan::new(dp, delta, eps, None, HittingSetStrategy::default())?.sample(dp, seed, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionViolation {
    Coverage { vertex: usize },
    Diameter { center: usize, strong_diameter: f64 },
    Assignment { vertex: usize, recorded: usize, argmax: usize },
}

/// Exact replay: coverage, strong diameter per cluster, and argmax consistency.
pub fn verify_partition(dp: &DistanceProvider, p: &PaddedPartition) -> Option<PartitionViolation> {
    let n = dp.n();
    let mut seen = vec![0usize; n];
    for c in &p.clusters {
        for v in c.members.iter() {
            if v >= n {
                return Some(PartitionViolation::Coverage { vertex: v });
            }
            seen[v] += 1;
        }
    }
    if let Some(v) = (0..n).find(|&v| seen[v] != 1) {
        return Some(PartitionViolation::Coverage { vertex: v });
    }
    if p.assignment.len() != n {
        return Some(PartitionViolation::Coverage { vertex: p.assignment.len().min(n) });
    }
    let truth = assign(dp, &p.shifts);
    for v in 0..n {
        let k = p.assignment[v];
        let ok_cluster = p
            .clusters
            .iter()
            .any(|c| k < p.shifts.len() && c.center == p.shifts[k].center && c.members.contains(v));
        if truth[v] != k || !ok_cluster {
            return Some(PartitionViolation::Assignment { vertex: v, recorded: k, argmax: truth[v] });
        }
    }
    let g = dp.graph();
    p.clusters.par_iter().find_map_first(|c| {
        let sd = g.strong_diameter(&c.members);
        dp.gt(sd, p.delta).then_some(PartitionViolation::Diameter { center: c.center, strong_diameter: sd })
    })
}

/// One-sided Wilson score lower bound at normal quantile `z`.
pub fn wilson_lower(successes: usize, trials: usize, z: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).max(0.0)
}

/// Normal quantile for a one-sided 99% bound.
pub const Z99: f64 = 2.326_347_874_040_841;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct PaddingRow {
    pub gamma: f64,
    /// `e^{-4γλ}`.
    pub floor: f64,
    pub per_vertex: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub min: f64,
    pub mean: f64,
    /// Fraction of vertices whose 99% lower bound reaches the floor.
    pub fraction_meeting_floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct PaddingReport {
    pub trials: usize,
    pub lambda: f64,
    pub r: f64,
    pub rows: Vec<PaddingRow>,
}

/// Fraction of trials in which `ball(v, γ·r)` lies inside `v`'s cluster, per vertex and `γ`.
/// `on_partition` sees every sampled partition (for extra per-trial checks).
pub fn estimate_padding<F>(
    dp: &DistanceProvider,
    plan: &DecompositionPlan,
    gammas: &[f64],
    trials: usize,
    seed: u64,
    on_partition: F,
) -> HwdResult<PaddingReport>
where
    F: Fn(&PaddedPartition) -> HwdResult<()> + Sync,
{
    if let Some(&g) = gammas.iter().find(|&&g| !(0.0..=0.125).contains(&g)) {
        return Err(HwdError::param(format!("gamma must lie in [0, 1/8], got {g}")));
    }
    if trials == 0 {
        return Err(HwdError::param("trials must be at least 1"));
    }
    let n = dp.n();
    let balls: Vec<Vec<VertexSet>> =
        gammas.iter().map(|&g| (0..n).map(|v| dp.ball(v, g * plan.r)).collect()).collect();
    let counts = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let part = plan.sample(dp, seed, t)?;
            on_partition(&part)?;
            let a = &part.assignment;
            Ok::<_, HwdError>(balls
                .iter()
                .map(|bs| (0..n).map(|v| bs[v].iter().all(|u| a[u] == a[v]) as usize).collect::<Vec<_>>())
                .collect::<Vec<_>>())
        })
        .try_reduce(
            || vec![vec![0usize; n]; gammas.len()],
            |mut acc, x| {
                for (ra, rx) in acc.iter_mut().zip(x) {
                    for (a, b) in ra.iter_mut().zip(rx) {
                        *a += b;
                    }
                }
                Ok::<_, HwdError>(acc)
            },
        )?;
    let rows = gammas
        .iter()
        .zip(counts)
        .map(|(&gamma, c)| {
            let floor = (-4.0 * gamma * plan.lambda).exp();
            let per_vertex: Vec<f64> = c.iter().map(|&k| k as f64 / trials as f64).collect();
            let lower_bounds: Vec<f64> = c.iter().map(|&k| wilson_lower(k, trials, Z99)).collect();
            let meet = lower_bounds.iter().filter(|&&l| l >= floor).count();
            PaddingRow {
                gamma,
                floor,
                min: per_vertex.iter().copied().fold(1.0, f64::min),
                mean: per_vertex.iter().sum::<f64>() / n as f64,
                fraction_meeting_floor: meet as f64 / n as f64,
                per_vertex,
                lower_bounds,
            }
        })
        .collect();
    Ok(PaddingReport { trials, lambda: plan.lambda, r: plan.r, rows })
}
