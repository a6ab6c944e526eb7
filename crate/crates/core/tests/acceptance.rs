//! Acceptance suite: one pass/fail line per criterion. Exits nonzero if any hard criterion fails.

use std::time::{Duration, Instant};

use hwd::covers::{sparse_cover, sparse_partition_cover, CoverCluster};
use hwd::decomp::{estimate_padding, texp_cdf, texp_quantile, sample_texp, verify_partition, DecompositionPlan};
use hwd::hierarchy::{
    build_hub_hierarchy, is_hub_net_respecting, is_net_respecting, make_hub_net_respecting,
    make_net_respecting, SpcBuilder, Walk,
};
use hwd::oracle::{bench_oracle, build_oracle};
use hwd::spc::{
    build_spc_local_search, epsnet_spc, local_sparsity, towns_and_sprawl, verify_spc, HittingSetStrategy,
    ShortestPathCover, TownDecomposition,
};
use hwd::treecover::{build_tree_cover, verify_tree_cover};
use hwd::tsp::{solve_subset_tsp, tsp_brute_force, TspConfig};
use hwd::{generate, DistanceProvider, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rescaled(g: WeightedGraph) -> DistanceProvider {
    DistanceProvider::new(&g.rescaled().expect("positive weights").0)
}

/// Random instance family used by several criteria.
fn random_instance(seed: u64, n: usize) -> WeightedGraph {
    match seed % 3 {
        0 => generate::random_geometric(n, 0.15, seed).unwrap(),
        1 => generate::random_connected(n, n, 1.0, 4.0, seed).unwrap(),
        _ => generate::random_connected(n, n / 3, 1.0, 10.0, seed).unwrap(),
    }
}

/// Independent town checks: diameter, separation, and sprawl coverage.
fn town_violations(dp: &DistanceProvider, spc: &ShortestPathCover, td: &TownDecomposition) -> usize {
    let n = dp.n();
    let tol = dp.tol();
    let r = spc.r;
    let mut bad = 0;
    let member = td.membership(n);
    for (k, t) in td.towns.iter().enumerate() {
        for u in t.members.iter() {
            let row = dp.row(u);
            for v in 0..n {
                let inside = member[v] == Some(k);
                if inside && row[v] > r + tol {
                    bad += 1;
                }
                if !inside && row[v] <= r + tol {
                    bad += 1;
                }
            }
        }
    }
    let far = (2.0 + spc.eps) * r + tol;
    for v in td.sprawl.iter() {
        if !spc.hubs.iter().any(|h| dp.d(v, h) <= far) {
            bad += 1;
        }
    }
    bad
}

fn criteria_1_2() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut runs = 0;
    let mut counterexamples = 0;
    let mut town_bad = 0;
    let mut town_runs = 0;
    for seed in 0..50u64 {
        let n = 30 + (seed as usize * 7) % 171;
        let dp = DistanceProvider::new(&random_instance(seed, n));
        let diam = dp.diameter();
        for eps in [0.0, 1.0 / 6.0, 0.5] {
            for frac in [1.0 / 24.0, 1.0 / 8.0, 1.0 / 3.0] {
                let spc = build_spc_local_search(&dp, frac * diam, eps, HittingSetStrategy::default()).unwrap();
                runs += 1;
                if verify_spc(&dp, &spc).is_some() {
                    counterexamples += 1;
                    continue;
                }
                match towns_and_sprawl(&dp, &spc) {
                    Ok(td) => town_bad += town_violations(&dp, &spc, &td),
                    Err(_) => town_bad += 1,
                }
                town_runs += 1;
            }
        }
    }
    let star = DistanceProvider::new(&generate::star(12).unwrap());
    let s = build_spc_local_search(&star, 1.0, 0.0, HittingSetStrategy::default()).unwrap();
    let star_ok = s.hubs.as_slice() == [0] && verify_spc(&star, &s).is_none();
    let elapsed = start.elapsed();
    let c1 = outcome(
        counterexamples == 0 && star_ok && elapsed < Duration::from_secs(60),
        format!(
            "{runs} covers, {counterexamples} counterexamples; star hubs {:?}; {:.1}s (limit 60s)",
            s.hubs.as_slice(),
            elapsed.as_secs_f64()
        ),
    );
    let c2 = outcome(town_bad == 0, format!("{town_runs} decompositions, {town_bad} violations"));
    (c1, c2)
}

fn criterion_3() -> Outcome {
    let eps = 1.0 / 6.0;
    let mut bad = 0;
    let mut levels = 0;
    for seed in 0..10u64 {
        let dp = rescaled(random_instance(seed, 40 + 8 * seed as usize));
        let hh = build_hub_hierarchy(&dp, eps, SpcBuilder::default()).unwrap();
        for (i, l) in hh.levels.iter().enumerate() {
            levels += 1;
            let thr = eps / 4.0 * l.r;
            for x in l.h.iter() {
                for y in l.h.iter().filter(|&y| y > x) {
                    if dp.d(x, y) <= thr {
                        bad += 1;
                    }
                }
            }
            if verify_spc(&dp, &hh.h_prime_spc(i)).is_some() {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("10 hierarchies, {levels} levels, {bad} violations"))
}

fn criterion_4() -> Outcome {
    let eps = 1.0 / 6.0;
    let mut bad = Vec::new();
    let mut worst = (1.0f64, 1.0f64);
    let mut walks = 0;
    for seed in 0..4u64 {
        let dp = rescaled(random_instance(seed, 50));
        let hh = build_hub_hierarchy(&dp, eps, SpcBuilder::default()).unwrap();
        let nets = hh.nets(&dp);
        let towns = hh.towns_per_level(&dp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        for _ in 0..50 {
            walks += 1;
            let len = rng.random_range(2..12);
            let mut w: Vec<usize> = (0..len).map(|_| rng.random_range(0..dp.n())).collect();
            w.push(w[0]);
            let w = Walk::new(w);
            let c = w.cost(&dp).max(f64::MIN_POSITIVE);
            let pn = make_net_respecting(&dp, &nets, &w).unwrap();
            let phn = make_hub_net_respecting(&dp, &hh, &nets, &w).unwrap();
            let (rn, rhn) = (pn.cost(&dp) / c, phn.cost(&dp) / c);
            if w.cost(&dp) > 0.0 {
                worst = (worst.0.max(rn), worst.1.max(rhn));
            }
            if rn > 1.0 + 60.0 * eps + 1e-9 || rhn > 1.0 + 77.0 * eps + 1e-9 {
                bad.push("ratio");
            }
            if is_net_respecting(&dp, &nets, &pn).is_some() {
                bad.push("net predicate");
            }
            if is_hub_net_respecting(&dp, &hh, &nets, &towns, &phn).is_some() {
                bad.push("hub-net predicate");
            }
            if make_net_respecting(&dp, &nets, &pn).unwrap() != pn {
                bad.push("net idempotence");
            }
            if !pn.is_closed() || !phn.is_closed() {
                bad.push("closedness");
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{walks} walks, worst ratios net {:.4} (limit {:.2}) hub-net {:.4} (limit {:.2}); violations {:?}",
            worst.0,
            1.0 + 60.0 * eps,
            worst.1,
            1.0 + 77.0 * eps,
            bad
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let eps = 0.125;
    let dp = rescaled(generate::random_geometric(300, 0.12, 5).unwrap());
    let delta = dp.diameter() / 6.0;
    let plan = DecompositionPlan::new(&dp, delta, eps, None, HittingSetStrategy::default()).unwrap();
    let diam_bad = std::sync::atomic::AtomicUsize::new(0);
    let rep = estimate_padding(&dp, &plan, &[1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0], 1000, 11, |p| {
        if verify_partition(&dp, p).is_some() {
            diam_bad.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        Ok(())
    })
    .unwrap();
    let diam_bad = diam_bad.into_inner();
    let fracs: Vec<String> = rep
        .rows
        .iter()
        .map(|r| format!("gamma {}: {:.3} meet floor {:.3e}", r.gamma, r.fraction_meeting_floor, r.floor))
        .collect();
    let elapsed = start.elapsed();
    let ok = diam_bad == 0
        && rep.rows.iter().all(|r| r.fraction_meeting_floor >= 0.99)
        && elapsed < Duration::from_secs(300);
    outcome(
        ok,
        format!(
            "1000 partitions, {diam_bad} diameter violations; lambda {:.3}; {}; {:.1}s (limit 300s)",
            rep.lambda,
            fracs.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn recount(n: usize, clusters: &[CoverCluster]) -> Vec<usize> {
    let mut c = vec![0; n];
    for cl in clusters {
        for v in cl.members.iter() {
            c[v] += 1;
        }
    }
    c
}

fn criterion_6() -> Outcome {
    let mut bad = Vec::new();
    let mut runs = 0;
    for seed in 0..6u64 {
        let n = if seed == 0 { 500 } else { 60 + 40 * seed as usize };
        let dp = DistanceProvider::new(&random_instance(seed, n));
        for frac in [0.1, 0.3] {
            let delta = frac * dp.diameter();
            runs += 1;
            let sc = sparse_cover(&dp, delta, 0.1).unwrap();
            if let Some(v) = sc.verify(&dp) {
                bad.push(format!("cover {v:?}"));
            }
            for v in 0..n {
                let ball = dp.ball(v, delta / 8.0);
                if !sc.clusters.iter().any(|c| ball.is_subset(&c.members)) {
                    bad.push(format!("ball({v}) uncovered"));
                }
            }
            if recount(n, &sc.clusters) != sc.sparsity.per_vertex {
                bad.push("cover sparsity recount".into());
            }
            let pc = sparse_partition_cover(&dp, delta, 0.5).unwrap();
            if let Some(v) = pc.verify(&dp) {
                bad.push(format!("partition cover {v:?}"));
            }
            for part in &pc.partitions {
                let mut seen = vec![false; n];
                for &k in part {
                    for u in pc.clusters[k].members.iter() {
                        if std::mem::replace(&mut seen[u], true) {
                            bad.push(format!("overlap at {u}"));
                        }
                    }
                }
            }
            for v in 0..n {
                let ball = dp.ball(v, 0.5 * pc.r);
                if !pc.clusters.iter().any(|c| ball.is_subset(&c.members)) {
                    bad.push(format!("partition ball({v}) uncovered"));
                }
            }
            if recount(n, &pc.clusters) != pc.sparsity.per_vertex {
                bad.push("partition sparsity recount".into());
            }
        }
    }
    bad.truncate(5);
    outcome(bad.is_empty(), format!("{runs} covers and partition covers; violations {bad:?}"))
}

fn criterion_7() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut worst = [1.0f64; 3];
    let mut pairs = 0usize;
    let mut latency = Vec::new();
    let epss = [1.0, 0.5, 0.25];
    for seed in 0..20u64 {
        let n = match seed {
            18 => 500,
            19 => 250,
            _ => 40 + 10 * seed as usize,
        };
        let dp = rescaled(random_instance(seed, n));
        for (e, &eps) in epss.iter().enumerate() {
            let tc = build_tree_cover(&dp, eps, SpcBuilder::default()).unwrap();
            let check = verify_tree_cover(&dp, &tc).unwrap();
            if !check.ok() {
                bad.push(format!("seed {seed} eps {eps}: {check:?}"));
            }
            worst[e] = worst[e].max(check.worst_ratio);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<(usize, usize, usize)> = (0..200)
                .map(|_| (rng.random_range(0..tc.trees.len()), rng.random_range(0..n), rng.random_range(0..n)))
                .collect();
            let o = build_oracle(tc).unwrap();
            for &(t, u, v) in &samples {
                if (o.lcas[t].distance(u, v) - o.cover.trees[t].naive_distance(u, v)).abs() > dp.tol() {
                    bad.push(format!("seed {seed}: tree {t} distance mismatch at ({u},{v})"));
                }
            }
            let tol = dp.tol();
            for u in 0..n {
                let row = dp.row(u);
                for v in u + 1..n {
                    pairs += 1;
                    let est = o.query(u, v);
                    if est < row[v] - tol || est > (1.0 + 2.0 * eps) * row[v] + tol {
                        bad.push(format!("seed {seed} eps {eps}: estimate {est} for d {}", row[v]));
                    }
                }
            }
            if n == 500 {
                latency.push((eps, o.lcas.len(), bench_oracle(&o, 20_000, 7)));
            }
        }
    }
    bad.truncate(5);
    let c7 = outcome(
        bad.is_empty(),
        format!(
            "20 instances x 3 eps, {pairs} oracle pairs; worst stretch {:.4}/{:.4}/{:.4} (limits 3/2/1.5); {:.1}s; violations {bad:?}",
            worst[0],
            worst[1],
            worst[2],
            start.elapsed().as_secs_f64()
        ),
    );
    let met = latency.iter().all(|l| l.2.p99_ns < 50_000.0);
    let lat: Vec<String> = latency
        .iter()
        .map(|(eps, trees, b)| format!("eps {eps}: {trees} trees, p99 {:.1}us, {:.0} q/s", b.p99_ns / 1e3, b.qps))
        .collect();
    (c7, outcome(met, format!("soft target p99 < 50us at n=500 (reported only): {}", lat.join("; "))))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let eps_run = (1.0 / 6.0) / 1350.0;
    let limit = 1.0 + 1350.0 * eps_run;
    let mut worst = 1.0f64;
    let mut bad = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..100u64 {
        let n = rng.random_range(20..60);
        let dp = rescaled(random_instance(seed, n));
        let mut k: Vec<usize> = (0..n).collect();
        for i in 0..n {
            k.swap(i, rng.random_range(i..n));
        }
        k.truncate(rng.random_range(1..=9));
        let sol = solve_subset_tsp(&dp, &k, &TspConfig::new(eps_run)).unwrap();
        let (_, opt) = tsp_brute_force(&dp, &k).unwrap();
        let ratio = if opt > 0.0 { sol.cost / opt } else { 1.0 };
        worst = worst.max(ratio);
        if ratio > limit + 1e-12 || !sol.certified {
            bad.push(format!("seed {seed}: ratio {ratio}"));
        }
    }
    let mut divides = 0;
    let mut patches = 0;
    let mut div_ratio = 1.0f64;
    for seed in 0..5u64 {
        let q = 3;
        let (g, k) = generate::clustered_towns(q + 2, if seed < 3 { 2 } else { q }, 10.0, seed).unwrap();
        let dp = rescaled(g);
        let cfg = TspConfig { q: Some(q), ..TspConfig::new(1.0 / 6.0) };
        let sol = solve_subset_tsp(&dp, &k, &cfg).unwrap();
        divides += sol.steps.len();
        if sol.steps.is_empty() {
            bad.push(format!("clustered seed {seed}: divide path did not fire"));
        }
        for st in &sol.steps {
            patches += 1;
            if st.patch.cost > st.patch.bound + dp.tol() || st.cost > st.bound + dp.tol() {
                bad.push(format!("clustered seed {seed}: patch bound"));
            }
        }
        if k.len() <= 11 {
            let (_, opt) = tsp_brute_force(&dp, &k).unwrap();
            div_ratio = div_ratio.max(sol.cost / opt);
        }
    }
    let elapsed = start.elapsed();
    bad.truncate(5);
    outcome(
        bad.is_empty() && elapsed < Duration::from_secs(600),
        format!(
            "100 instances, worst ratio {worst:.6} (limit {limit:.4}); clustered towns: {divides} divide steps, {patches} patch bounds checked, worst divide-path ratio {div_ratio:.3} (informative); {:.1}s; violations {bad:?}",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (lambda, t1, t2) in [(1.0, 0.0, 0.5), (5.0, 0.75, 1.25), (1e-9, 0.0, 1.0)] {
        let mut xs: Vec<f64> = (0..100_000).map(|_| sample_texp(lambda, t1, t2, &mut rng).unwrap()).collect();
        xs.sort_by(f64::total_cmp);
        for p in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let y = texp_quantile(lambda, t1, t2, p);
            let emp = xs.partition_point(|&x| x <= y) as f64 / xs.len() as f64;
            worst = worst.max((emp - texp_cdf(lambda, t1, t2, y)).abs());
        }
    }
    outcome(worst <= 0.01, format!("3 parameter sets x 5 quantiles, 1e5 samples; max CDF gap {worst:.5} (limit 0.01)"))
}

fn criterion_10() -> Outcome {
    let mut bad = 0;
    let mut runs = 0;
    let mut worst = (0usize, 0.0f64);
    for seed in 0..20u64 {
        let dp = DistanceProvider::new(&generate::euclidean_complete(40 + seed as usize, seed).unwrap());
        let diam = dp.diameter();
        for eps in [1.0 / 6.0, 0.5, 1.0] {
            for frac in [0.05, 0.15, 0.4] {
                runs += 1;
                let spc = epsnet_spc(&dp, frac * diam, eps).unwrap();
                if verify_spc(&dp, &spc).is_some() {
                    bad += 1;
                }
                let (s, _) = local_sparsity(&dp, &spc);
                let bound = (64.0 + 32.0 / eps).powi(2);
                if s as f64 > bound {
                    bad += 1;
                }
                if s as f64 / bound > worst.1 {
                    worst = (s, s as f64 / bound);
                }
            }
        }
    }
    outcome(bad == 0, format!("{runs} covers, {bad} violations; largest sparsity/bound {} ({:.2e})", worst.0, worst.1))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: &str, name: &str, o: Outcome, hard: bool| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} [{tag}] {name}: {}", o.detail);
        if hard && !o.pass {
            failed += 1;
        }
    };
    let (c1, c2) = criteria_1_2();
    report("1", "SPC correctness", c1, true);
    report("2", "town properties", c2, true);
    report("3", "hub hierarchy", criterion_3(), true);
    report("4", "walk transforms", criterion_4(), true);
    report("5", "padded decomposition", criterion_5(), true);
    report("6", "sparse covers", criterion_6(), true);
    let (c7, c7s) = criterion_7();
    report("7", "tree cover and oracle", c7, true);
    report("7s", "oracle latency", c7s, false);
    report("8", "subset TSP", criterion_8(), true);
    report("9", "truncated exponential sampler", criterion_9(), true);
    report("10", "eps-net covers in the plane", criterion_10(), true);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
