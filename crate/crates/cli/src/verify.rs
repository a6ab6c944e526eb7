//! Independent re-checks shared by the construction commands and `hwd verify`.

use std::io::Cursor;

use anyhow::{bail, Context, Result};
use hwd::covers::{SparseCover, SparsePartitionCover};
use hwd::decomp::{verify_partition, PaddedPartition};
use hwd::hierarchy::HubHierarchy;
use hwd::oracle::{bench_pairs, read_oracle, DistanceOracle};
use hwd::spc::{verify_spc, ShortestPathCover, TownDecomposition};
use hwd::treecover::{read_tree_cover, verify_tree_cover, TreeCover, TreeCoverCheck};
use hwd::{DistanceProvider, HwdError};
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::{summarize, CoverResult, DecomposeResult, HierarchyResult, PartitionCoverResult, SpcResult, TourFile, TspResult};
use crate::input::{self, InputFormat};
use crate::report::{Check, Report};
use crate::VerifyArgs;

pub fn check_spc(dp: &DistanceProvider, spc: &ShortestPathCover) -> Check {
    if let Some(x) = spc.hubs.iter().find(|&x| x >= dp.n()) {
        return Check::fail("spc_valid", json!({ "hub": x }), "hub is not a vertex");
    }
    Check::from_violation("spc_valid", verify_spc(dp, spc), "pair in (r, span*r] without an eps-good hub")
}

#[derive(Clone, Debug, Serialize)]
struct TownWitness {
    reason: &'static str,
    vertex: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    other: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distance: Option<f64>,
}

fn town_witness(dp: &DistanceProvider, spc: &ShortestPathCover, td: &TownDecomposition) -> Option<TownWitness> {
    let n = dp.n();
    let w = |reason, vertex, other, distance| Some(TownWitness { reason, vertex, other, distance });
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut in_sprawl = vec![false; n];
    for (k, t) in td.towns.iter().enumerate() {
        for v in t.members.iter() {
            if v >= n || owner[v].is_some() {
                return w("vertex in two towns or out of range", v, None, None);
            }
            owner[v] = Some(k);
        }
    }
    for v in td.sprawl.iter() {
        if v >= n || owner[v].is_some() {
            return w("sprawl vertex out of range or inside a town", v, None, None);
        }
        in_sprawl[v] = true;
    }
    if let Some(v) = (0..n).find(|&v| owner[v].is_none() && !in_sprawl[v]) {
        return w("vertex neither in a town nor in the sprawl", v, None, None);
    }
    let hubs = spc.hubs.as_slice();
    let far = (2.0 + spc.eps) * spc.r;
    for (k, t) in td.towns.iter().enumerate() {
        if owner.get(t.center) != Some(&Some(k)) {
            return w("town misses its center", t.center, None, None);
        }
        let dh = dp.dist_to_set(t.center, hubs);
        if !dp.gt(dh, far) {
            return w("town center within (2+eps)r of a hub", t.center, None, Some(dh));
        }
        for u in t.members.iter() {
            let row = dp.row(u);
            for (x, o) in owner.iter().enumerate() {
                let inside = *o == Some(k);
                if inside && dp.gt(row[x], spc.r) {
                    return w("town members farther apart than r", u, Some(x), Some(row[x]));
                }
                if !inside && dp.le(row[x], spc.r) {
                    return w("town within r of an outside vertex", u, Some(x), Some(row[x]));
                }
            }
        }
    }
    let sprawl_far = td.sprawl.iter().find_map(|v| {
        let dh = dp.dist_to_set(v, hubs);
        dp.gt(dh, far).then_some((v, dh))
    });
    if let Some((v, dh)) = sprawl_far {
        return w("sprawl vertex farther than (2+eps)r from every hub", v, None, Some(dh));
    }
    None
}

pub fn check_towns(dp: &DistanceProvider, spc: &ShortestPathCover, td: &TownDecomposition) -> Check {
    Check::from_violation("towns_valid", town_witness(dp, spc, td), "town decomposition property broken")
}

pub fn check_hierarchy(dp: &DistanceProvider, hh: &HubHierarchy) -> Vec<Check> {
    let inv = match hh.check_invariants(dp) {
        Ok(()) => Check::pass("hierarchy_nesting_packing"),
        Err(e) => Check::fail("hierarchy_nesting_packing", json!({ "message": e.to_string() }), e.to_string()),
    };
    let bad = hh.levels.iter().enumerate().find_map(|(i, l)| {
        if let Some(x) = l.h.iter().find(|&x| x >= dp.n()) {
            return Some(json!({ "level": i, "hub": x }));
        }
        verify_spc(dp, &hh.h_prime_spc(i)).map(|v| json!({ "level": i, "violation": v }))
    });
    let cov = match bad {
        None => Check::pass("levels_are_covers"),
        Some(w) => Check::fail("levels_are_covers", w, "some H'_i is not an (r_i, 3eps/2) cover"),
    };
    vec![inv, cov]
}

pub fn check_partition(dp: &DistanceProvider, p: &PaddedPartition) -> Check {
    Check::from_violation("partition_valid", verify_partition(dp, p), "partition replay failed")
}

pub fn check_cover(dp: &DistanceProvider, c: &SparseCover) -> Check {
    Check::from_violation("cover_valid", c.verify(dp), "sparse cover property broken")
}

pub fn check_partition_cover(dp: &DistanceProvider, c: &SparsePartitionCover) -> Check {
    Check::from_violation("partition_cover_valid", c.verify(dp), "sparse partition cover property broken")
}

pub fn check_tree_cover(dp: &DistanceProvider, tc: &TreeCover) -> Result<(Check, TreeCoverCheck)> {
    if tc.n != dp.n() {
        let c = Check::fail("tree_cover_valid", json!({ "cover_n": tc.n, "graph_n": dp.n() }), "vertex counts differ");
        let empty = TreeCoverCheck { pairs: 0, worst_ratio: f64::INFINITY, worst_pair: None, domination_violation: None, stretch_ok: false };
        return Ok((c, empty));
    }
    let r = verify_tree_cover(dp, tc)?;
    let c = if r.ok() {
        Check::pass("tree_cover_valid")
    } else {
        let w = json!({
            "domination_violation": r.domination_violation,
            "worst_pair": r.worst_pair,
            "worst_ratio": r.worst_ratio,
            "bound": 1.0 + 2.0 * tc.eps,
        });
        Check::fail("tree_cover_valid", w, "a tree underestimates a distance or the best stretch exceeds 1+2eps")
    };
    Ok((c, r))
}

/// Pairs above this vertex count are sampled instead of scanned.
pub const SANDWICH_FULL_SCAN: usize = 2000;
const SANDWICH_SAMPLES: usize = 200_000;

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct SandwichStats {
    pub pairs: usize,
    pub exhaustive: bool,
    pub worst_ratio: f64,
    pub worst_pair: Option<(usize, usize)>,
}

/// `d ≤ query ≤ (1+2ε)d` on every pair (sampled beyond 2000 vertices).
pub fn check_sandwich(dp: &DistanceProvider, o: &DistanceOracle) -> (Check, SandwichStats) {
    let n = dp.n();
    let tol = dp.tol();
    let bound = 1.0 + 2.0 * o.eps();
    let pairs: Vec<(usize, usize)> = if n <= SANDWICH_FULL_SCAN {
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
    } else {
        bench_pairs(n, SANDWICH_SAMPLES, 0).into_iter().filter(|(u, v)| u != v).collect()
    };
    let viol = pairs.par_iter().find_map_first(|&(u, v)| {
        let (q, d) = (o.query(u, v), dp.d(u, v));
        (q < d - tol || q > bound * d + tol).then_some((u, v, q, d))
    });
    let (worst_ratio, worst_pair) = pairs
        .par_iter()
        .map(|&(u, v)| (o.query(u, v) / dp.d(u, v), Some((u, v))))
        .reduce(|| (0.0, None), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let stats = SandwichStats { pairs: pairs.len(), exhaustive: n <= SANDWICH_FULL_SCAN, worst_ratio, worst_pair };
    let c = match viol {
        None => Check::pass("oracle_sandwich"),
        Some((u, v, q, d)) => Check::fail(
            "oracle_sandwich",
            json!({ "u": u, "v": v, "estimate": q, "distance": d, "bound": bound }),
            "estimate outside [d, (1+2eps)d]",
        ),
    };
    (c, stats)
}

/// Walk is closed, in range, visits every terminal and its cost matches (original units).
pub fn check_tour(dp: &DistanceProvider, terminals: &[usize], t: &TourFile) -> Vec<Check> {
    let n = dp.n();
    if let Some(&v) = t.walk.iter().find(|&&v| v >= n) {
        return vec![Check::fail("walk_in_range", json!({ "vertex": v }), "walk vertex is not a graph vertex")];
    }
    let mut out = vec![Check::pass("walk_in_range")];
    let closed = t.walk.len() == 1 || (t.walk.len() >= 2 && t.walk.first() == t.walk.last());
    out.push(if closed {
        Check::pass("walk_closed")
    } else {
        Check::fail("walk_closed", json!({ "first": t.walk.first(), "last": t.walk.last() }), "walk is not closed")
    });
    let mut seen = vec![false; n];
    for &v in &t.walk {
        seen[v] = true;
    }
    out.push(match terminals.iter().find(|&&k| !seen[k]) {
        None => Check::pass("visits_terminals"),
        Some(&k) => Check::fail("visits_terminals", json!({ "terminal": k }), "terminal missing from walk"),
    });
    let cost: f64 = t.walk.windows(2).map(|w| dp.d(w[0], w[1])).sum();
    out.push(if (cost - t.cost).abs() <= 1e-9 * cost.abs().max(1.0) {
        Check::pass("cost_matches")
    } else {
        Check::fail("cost_matches", json!({ "recorded": t.cost, "recomputed": cost }), "recorded cost differs from the walk's cost")
    });
    out
}

fn parse<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| HwdError::Parse { line: 0, msg: format!("artifact result: {e}") }.into())
}

const TREE_MAGIC: &[u8] = b"HWDTREE\0";

pub fn run(a: &VerifyArgs, fmt: InputFormat) -> Result<Report> {
    let mut inp = input::load(&a.graph.input, fmt)?;
    let bytes = std::fs::read(&a.artifact).with_context(|| format!("reading {}", a.artifact.display()))?;
    let params = json!({ "artifact": a.artifact, "terminals": a.terminals });
    if bytes.starts_with(TREE_MAGIC) {
        return verify_binary(&mut inp, &bytes, params);
    }
    let v: Value = serde_json::from_slice(&bytes)
        .map_err(|e| HwdError::Parse { line: e.line(), msg: format!("{}: {e}", a.artifact.display()) })?;
    let kind = match v.get("kind").and_then(Value::as_str) {
        Some(k) => k.to_string(),
        None if v.get("walk").is_some() => "tour".to_string(),
        None => bail!(HwdError::Parse { line: 0, msg: "artifact has neither a kind nor a walk".into() }),
    };
    let mut rep = Report::new("verify", Some(inp.info.clone()), params);
    rep.timings_ms = None;
    if kind != "tour" {
        let recorded = v.pointer("/input/sha256").and_then(Value::as_str);
        rep.check(match recorded {
            Some(h) if h == inp.info.sha256 => Check::pass("input_matches"),
            h => Check::fail("input_matches", json!({ "recorded": h, "actual": inp.info.sha256 }), "artifact was built from a different graph"),
        });
    }
    let res = v.get("result").unwrap_or(&Value::Null);
    match kind.as_str() {
        "spc" | "towns" => {
            let dp = inp.provider();
            let r: SpcResult = parse(res)?;
            rep.check(check_spc(&dp, &r.spc));
            if let Some(td) = &r.towns {
                rep.check(check_towns(&dp, &r.spc, td));
            }
        }
        "hierarchy" => {
            let dp = inp.rescaled_provider()?;
            let r: HierarchyResult = parse(res)?;
            for c in check_hierarchy(&dp, &r.hierarchy) {
                rep.check(c);
            }
        }
        "decompose" => {
            let r: DecomposeResult = parse(res)?;
            rep.check(check_partition(&inp.provider(), &r.partition));
        }
        "cover" => {
            let r: CoverResult = parse(res)?;
            rep.check(check_cover(&inp.provider(), &r.cover));
        }
        "partition-cover" => {
            let r: PartitionCoverResult = parse(res)?;
            rep.check(check_partition_cover(&inp.provider(), &r.cover));
        }
        "tsp" => {
            let r: TspResult = parse(res)?;
            let n = inp.graph.vertex_count();
            if let Some(p) = &a.terminals {
                let k = input::load_terminals(p, n)?;
                rep.check(if k == r.terminals {
                    Check::pass("terminals_match")
                } else {
                    Check::fail("terminals_match", json!({ "recorded": r.terminals.len(), "given": k.len() }), "terminal sets differ")
                });
            }
            if let Some(&t) = r.terminals.iter().find(|&&t| t >= n) {
                bail!(HwdError::Parse { line: 0, msg: format!("recorded terminal {t} is not a vertex") });
            }
            for c in check_tour(&inp.provider(), &r.terminals, &r.tour) {
                rep.check(c);
            }
        }
        "tour" => {
            let Some(p) = &a.terminals else {
                bail!(HwdError::param("bare tour files need --terminals"));
            };
            let k = input::load_terminals(p, inp.graph.vertex_count())?;
            let t: TourFile = parse(&v)?;
            for c in check_tour(&inp.provider(), &k, &t) {
                rep.check(c);
            }
        }
        "treecover" | "oracle-build" => {
            bail!(HwdError::param(format!("'{kind}' reports are summaries; verify the binary file instead")))
        }
        other => bail!(HwdError::param(format!("no verifier for artifact kind '{other}'"))),
    }
    rep.result(json!({ "artifact_kind": kind }))?;
    Ok(rep)
}

fn verify_binary(inp: &mut input::Input, bytes: &[u8], params: Value) -> Result<Report> {
    let dp = inp.rescaled_provider()?;
    let mut rep = Report::new("verify", Some(inp.info.clone()), params);
    rep.timings_ms = None;
    let mut cur = Cursor::new(bytes);
    let tc = match read_tree_cover(&mut cur) {
        Ok(tc) => tc,
        Err(e) => {
            rep.check(Check::fail("format", json!({ "message": e.to_string() }), "tree cover section is corrupt"));
            rep.result(json!({ "artifact_kind": "treecover" }))?;
            return Ok(rep);
        }
    };
    let is_oracle = (cur.position() as usize) < bytes.len();
    let kind = if is_oracle { "oracle" } else { "treecover" };
    let scale_ok = (tc.scale - inp.info.scale).abs() <= 1e-12 * inp.info.scale.abs().max(1.0);
    rep.check(if scale_ok {
        Check::pass("scale_matches")
    } else {
        Check::fail("scale_matches", json!({ "recorded": tc.scale, "expected": inp.info.scale }), "recorded scale differs")
    });
    let (c, tcc) = check_tree_cover(&dp, &tc)?;
    rep.check(c);
    let mut extra = Value::Null;
    if is_oracle && tc.n == dp.n() {
        match read_oracle(&mut Cursor::new(bytes)) {
            Ok(o) => {
                let (c, s) = check_sandwich(&dp, &o);
                rep.check(c);
                extra = serde_json::to_value(s)?;
            }
            Err(e) => rep.check(Check::fail("format", json!({ "message": e.to_string() }), "LCA section is corrupt")),
        }
    }
    rep.result(json!({ "artifact_kind": kind, "cover": summarize(&tc, tcc), "sandwich": extra }))?;
    Ok(rep)
}
