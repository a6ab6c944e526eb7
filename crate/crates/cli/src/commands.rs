use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use hwd::covers::{sparse_cover, sparse_partition_cover, SparseCover, SparsePartitionCover};
use hwd::decomp::{estimate_padding, verify_partition, DecompositionPlan, PaddedPartition, PaddingReport};
use hwd::generate;
use hwd::graph::to_dimacs;
use hwd::hierarchy::{build_hub_hierarchy, hierarchy_sparsity_report, HubHierarchy, LevelSparsity};
use hwd::oracle::{bench_oracle, build_oracle, read_oracle, write_oracle, BenchStats, OracleSize};
use hwd::spc::{
    epsnet_spc, local_search, local_sparsity, minimalize_spc, towns_and_sprawl, verify_hub_bounds,
    HubBoundsReport, LocalSearchTrace, ShortestPathCover, TownDecomposition,
};
use hwd::treecover::{build_tree_cover, write_tree_cover, TreeCover, TreeCoverCheck};
use hwd::tsp::{solve_subset_tsp, tsp_brute_force, DivideStep, TspConfig};
use hwd::tsp::solver::BRUTE_FORCE_CAP;
use hwd::{DistanceProvider, HwdError};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::input::{self, InputFormat};
use crate::report::{Check, Report, Timer};
use crate::verify;
use crate::{
    spc_builder, BuilderArg, Command, CoverArgs, DecomposeArgs, GenKind, GenerateArgs, HierarchyArgs, OracleBuildArgs,
    OracleCmd, SpcArgs, TreecoverArgs, TspArgs, TspCmd,
};

pub fn run(cmd: &Command, fmt: InputFormat) -> Result<Report> {
    match cmd {
        Command::Spc(a) => spc(a, fmt, false),
        Command::Towns(a) => spc(a, fmt, true),
        Command::Hierarchy(a) => hierarchy(a, fmt),
        Command::Decompose(a) => decompose(a, fmt),
        Command::Cover(a) => cover(a, fmt),
        Command::PartitionCover(a) => partition_cover(a, fmt),
        Command::Treecover(a) => treecover(a, fmt),
        Command::Oracle(OracleCmd::Build(a)) => oracle_build(a, fmt),
        Command::Oracle(OracleCmd::Query(a)) => oracle_query(&a.input, a.u, a.v),
        Command::Oracle(OracleCmd::Bench(a)) => oracle_bench(&a.input, a.queries, a.seed),
        Command::Tsp(TspCmd::Solve(a)) => tsp(a, fmt),
        Command::Verify(a) => verify::run(a, fmt),
        Command::Generate(a) => generate_cmd(a),
        Command::Schema(_) => bail!("schemas are printed directly, not as a report"),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct SpcResult {
    pub spc: ShortestPathCover,
    pub hub_count: usize,
    /// `max_v |ball(v,(2+4ε)r) ∩ hubs|` and the lowest vertex attaining it.
    pub local_sparsity: usize,
    pub sparsity_witness: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<LocalSearchTrace>,
    pub hub_bounds: HubBoundsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub towns: Option<TownDecomposition>,
}

fn spc(a: &SpcArgs, fmt: InputFormat, towns: bool) -> Result<Report> {
    if towns && a.no_minimalize {
        bail!(HwdError::param("towns are defined for minimal covers; drop --no-minimalize"));
    }
    let inp = input::load(&a.graph.input, fmt)?;
    let dp = inp.provider();
    let mut rep = Report::new(if towns { "towns" } else { "spc" }, Some(inp.info.clone()), a);
    let t = Timer::start();
    let (mut cover, trace) = match a.builder {
        BuilderArg::LocalSearch => {
            let (c, tr) = local_search(&dp, a.r, a.eps, 2.0 + a.eps, a.strategy.into())?;
            (c, Some(tr))
        }
        BuilderArg::EpsNet => (epsnet_spc(&dp, a.r, a.eps)?, None),
    };
    t.stop(&mut rep, "build");
    if !a.no_minimalize {
        let t = Timer::start();
        cover = minimalize_spc(&dp, &cover)?;
        t.stop(&mut rep, "minimalize");
    }
    let t = Timer::start();
    let td = if towns { Some(towns_and_sprawl(&dp, &cover)?) } else { None };
    let (s, witness) = local_sparsity(&dp, &cover);
    let hub_bounds = verify_hub_bounds(&dp, &cover);
    t.stop(&mut rep, "analyze");
    let t = Timer::start();
    rep.check(verify::check_spc(&dp, &cover));
    if let Some(td) = &td {
        rep.check(verify::check_towns(&dp, &cover, td));
    }
    t.stop(&mut rep, "verify");
    rep.result(SpcResult {
        hub_count: cover.hubs.len(),
        spc: cover,
        local_sparsity: s,
        sparsity_witness: witness,
        trace,
        hub_bounds,
        towns: td,
    })?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct HierarchyResult {
    pub hierarchy: HubHierarchy,
    pub sparsity: Vec<LevelSparsity>,
}

fn hierarchy(a: &HierarchyArgs, fmt: InputFormat) -> Result<Report> {
    let mut inp = input::load(&a.graph.input, fmt)?;
    let dp = inp.rescaled_provider()?;
    let mut rep = Report::new("hierarchy", Some(inp.info.clone()), a);
    let t = Timer::start();
    let hh = build_hub_hierarchy(&dp, a.eps, spc_builder(a.builder, a.strategy))?;
    t.stop(&mut rep, "build");
    let t = Timer::start();
    let sparsity = hierarchy_sparsity_report(&dp, &hh);
    t.stop(&mut rep, "analyze");
    let t = Timer::start();
    for c in verify::check_hierarchy(&dp, &hh) {
        rep.check(c);
    }
    t.stop(&mut rep, "verify");
    rep.result(HierarchyResult { hierarchy: hh, sparsity })?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct DecomposeResult {
    pub partition: PaddedPartition,
    pub r: f64,
    pub lambda: f64,
    /// Local sparsity of the cover behind the centers.
    pub sparsity: usize,
    pub hub_centers: usize,
    pub town_centers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<PaddingReport>,
}

fn decompose(a: &DecomposeArgs, fmt: InputFormat) -> Result<Report> {
    let inp = input::load(&a.graph.input, fmt)?;
    let dp = inp.provider();
    let mut rep = Report::new("decompose", Some(inp.info.clone()), a);
    let t = Timer::start();
    let plan = DecompositionPlan::new(&dp, a.delta, a.eps, a.lambda, a.strategy.into())?;
    let partition = plan.sample(&dp, a.seed, 0)?;
    t.stop(&mut rep, "build");
    let t = Timer::start();
    rep.check(verify::check_partition(&dp, &partition));
    t.stop(&mut rep, "verify");
    let padding = if a.trials > 0 {
        let t = Timer::start();
        let pr = estimate_padding(&dp, &plan, &a.gamma, a.trials, a.seed, |p| match verify_partition(&dp, p) {
            None => Ok(()),
            Some(v) => Err(HwdError::invariant(format!(
                "trial partition failed verification: {}",
                serde_json::to_string(&v).unwrap_or_default()
            ))),
        })?;
        t.stop(&mut rep, "padding");
        Some(pr)
    } else {
        None
    };
    let hubs = plan.spc.hubs.len();
    rep.result(DecomposeResult {
        partition,
        r: plan.r,
        lambda: plan.lambda,
        sparsity: plan.sparsity,
        hub_centers: hubs,
        town_centers: plan.centers.len() - hubs,
        padding,
    })?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct CoverResult {
    pub cover: SparseCover,
    /// Hub balls whose induced subgraph exceeds `Delta` (informational).
    pub induced_diameter_flags: Vec<(usize, f64)>,
}

fn cover(a: &CoverArgs, fmt: InputFormat) -> Result<Report> {
    let inp = input::load(&a.graph.input, fmt)?;
    let dp = inp.provider();
    let mut rep = Report::new("cover", Some(inp.info.clone()), a);
    let t = Timer::start();
    let c = sparse_cover(&dp, a.delta, a.eps)?;
    t.stop(&mut rep, "build");
    let t = Timer::start();
    rep.check(verify::check_cover(&dp, &c));
    let induced_diameter_flags = c.induced_diameter_flags(&dp);
    t.stop(&mut rep, "verify");
    rep.result(CoverResult { cover: c, induced_diameter_flags })?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct PartitionCoverResult {
    pub cover: SparsePartitionCover,
}

fn partition_cover(a: &CoverArgs, fmt: InputFormat) -> Result<Report> {
    let inp = input::load(&a.graph.input, fmt)?;
    let dp = inp.provider();
    let mut rep = Report::new("partition-cover", Some(inp.info.clone()), a);
    let t = Timer::start();
    let c = sparse_partition_cover(&dp, a.delta, a.eps)?;
    t.stop(&mut rep, "build");
    let t = Timer::start();
    rep.check(verify::check_partition_cover(&dp, &c));
    t.stop(&mut rep, "verify");
    rep.result(PartitionCoverResult { cover: c })?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct LevelSummary {
    pub i: usize,
    pub r: f64,
    pub hubs: usize,
    pub groups: usize,
}

/// Tree cover facts; distances are in rescaled units (`scale` × original).
#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct TreeCoverSummary {
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub stride: usize,
    pub phi: f64,
    pub scale: f64,
    pub trees: usize,
    pub total_nodes: usize,
    pub s_max: usize,
    pub levels: Vec<LevelSummary>,
    pub check: TreeCoverCheck,
}

pub fn summarize(tc: &TreeCover, check: TreeCoverCheck) -> TreeCoverSummary {
    TreeCoverSummary {
        n: tc.n,
        eps: tc.eps,
        delta: tc.delta,
        stride: tc.stride,
        phi: tc.phi,
        scale: tc.scale,
        trees: tc.trees.len(),
        total_nodes: tc.total_nodes(),
        s_max: tc.s_max(),
        levels: tc
            .levels
            .iter()
            .map(|l| LevelSummary { i: l.i, r: l.r, hubs: l.hubs.len(), groups: l.groups.len() })
            .collect(),
        check,
    }
}

fn build_cover(dp: &DistanceProvider, scale: f64, eps: f64, b: BuilderArg, s: crate::StrategyArg) -> Result<TreeCover> {
    let mut tc = build_tree_cover(dp, eps, spc_builder(b, s))?;
    tc.scale = scale;
    Ok(tc)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn treecover(a: &TreecoverArgs, fmt: InputFormat) -> Result<Report> {
    let mut inp = input::load(&a.graph.input, fmt)?;
    let dp = inp.rescaled_provider()?;
    let mut rep = Report::new("treecover", Some(inp.info.clone()), a);
    let t = Timer::start();
    let tc = build_cover(&dp, inp.info.scale, a.eps, a.builder, a.strategy)?;
    t.stop(&mut rep, "build");
    let t = Timer::start();
    let (check, tcc) = verify::check_tree_cover(&dp, &tc)?;
    rep.check(check);
    t.stop(&mut rep, "verify");
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        write_tree_cover(&mut w, &tc)?;
        w.flush()?;
    }
    rep.result(summarize(&tc, tcc))?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct OracleBuildResult {
    pub n: usize,
    pub eps: f64,
    /// Advertised stretch `1+2ε`.
    pub stretch_bound: f64,
    pub size: OracleSize,
    pub cover: TreeCoverSummary,
    pub sandwich: verify::SandwichStats,
}

fn oracle_build(a: &OracleBuildArgs, fmt: InputFormat) -> Result<Report> {
    let mut inp = input::load(&a.graph.input, fmt)?;
    let dp = inp.rescaled_provider()?;
    let mut rep = Report::new("oracle-build", Some(inp.info.clone()), a);
    let t = Timer::start();
    let tc = build_cover(&dp, inp.info.scale, a.eps, a.builder, a.strategy)?;
    let o = build_oracle(tc)?;
    t.stop(&mut rep, "build");
    let t = Timer::start();
    let (check, tcc) = verify::check_tree_cover(&dp, &o.cover)?;
    rep.check(check);
    let (check, sandwich) = verify::check_sandwich(&dp, &o);
    rep.check(check);
    t.stop(&mut rep, "verify");
    let mut w = create(&a.out)?;
    write_oracle(&mut w, &o)?;
    w.flush()?;
    rep.result(OracleBuildResult {
        n: o.n(),
        eps: o.eps(),
        stretch_bound: 1.0 + 2.0 * o.eps(),
        size: o.size(),
        cover: summarize(&o.cover, tcc),
        sandwich,
    })?;
    Ok(rep)
}

fn open_oracle(path: &Path) -> Result<hwd::oracle::DistanceOracle> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_oracle(&mut BufReader::new(f)).with_context(|| format!("reading oracle {}", path.display()))?)
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct QueryResult {
    pub u: usize,
    pub v: usize,
    /// Estimate in original units.
    pub estimate: f64,
    pub estimate_scaled: f64,
    pub scale: f64,
}

fn oracle_query(path: &Path, u: usize, v: usize) -> Result<Report> {
    let o = open_oracle(path)?;
    if u >= o.n() || v >= o.n() {
        bail!(HwdError::param(format!("vertices must lie in 0..{}, got {u} and {v}", o.n())));
    }
    let mut rep = Report::new("oracle-query", None, serde_json::json!({ "oracle": path, "u": u, "v": v }));
    rep.timings_ms = None;
    rep.result(QueryResult {
        u,
        v,
        estimate: o.query_original(u, v),
        estimate_scaled: o.query(u, v),
        scale: o.cover.scale,
    })?;
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct BenchResult {
    pub n: usize,
    pub trees: usize,
    #[serde(flatten)]
    pub stats: BenchStats,
}

fn oracle_bench(path: &Path, queries: usize, seed: u64) -> Result<Report> {
    let t = Timer::start();
    let o = open_oracle(path)?;
    let mut rep = Report::new(
        "oracle-bench",
        None,
        serde_json::json!({ "oracle": path, "queries": queries, "seed": seed }),
    );
    t.stop(&mut rep, "load");
    let stats = bench_oracle(&o, queries, seed);
    rep.result(BenchResult { n: o.n(), trees: o.cover.trees.len(), stats })?;
    Ok(rep)
}

/// Tour file contents; costs in original units.
#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct TourFile {
    pub cost: f64,
    pub walk: Vec<usize>,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_vs_bruteforce: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, JsonSchema)]
pub struct TspResult {
    #[serde(flatten)]
    pub tour: TourFile,
    pub terminals: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimum: Option<f64>,
    pub q: usize,
    pub divide_steps: usize,
    pub fallback_sizes: Vec<usize>,
    pub sub_solves: usize,
    pub inexact_sub_solves: usize,
    /// Per-step bookkeeping in rescaled units.
    pub steps: Vec<DivideStep>,
}

fn tsp(a: &TspArgs, fmt: InputFormat) -> Result<Report> {
    let mut inp = input::load(&a.graph.input, fmt)?;
    let terminals = input::load_terminals(&a.terminals, inp.graph.vertex_count())?;
    let orig = inp.provider();
    let dp = inp.rescaled_provider()?;
    let scale = inp.info.scale;
    let mut rep = Report::new("tsp", Some(inp.info.clone()), a);
    let cfg = TspConfig { eps: a.eps, q: a.q, solver: a.solver.into(), builder: spc_builder(a.builder, a.strategy) };
    let t = Timer::start();
    let sol = solve_subset_tsp(&dp, &terminals, &cfg)?;
    t.stop(&mut rep, "solve");
    let optimum = if !a.no_bruteforce && terminals.len() <= BRUTE_FORCE_CAP {
        let t = Timer::start();
        let (_, opt) = tsp_brute_force(&dp, &terminals)?;
        t.stop(&mut rep, "bruteforce");
        Some(opt)
    } else {
        None
    };
    let ratio = optimum.map(|opt| if opt > 0.0 { sol.cost / opt } else { 1.0 });
    let tour = TourFile { cost: sol.cost / scale, walk: sol.walk.0.clone(), certified: sol.certified, ratio_vs_bruteforce: ratio };
    let t = Timer::start();
    for c in verify::check_tour(&orig, &terminals, &tour) {
        rep.check(c);
    }
    if let Some(r) = ratio {
        rep.check(if r >= 1.0 - 1e-9 {
            Check::pass("not_below_optimum")
        } else {
            Check::fail("not_below_optimum", serde_json::json!({ "ratio": r }), "tour is cheaper than the exact optimum")
        });
    }
    t.stop(&mut rep, "verify");
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        serde_json::to_writer_pretty(&mut w, &tour)?;
        writeln!(w)?;
        w.flush()?;
    }
    rep.result(TspResult {
        tour,
        terminals,
        optimum: optimum.map(|o| o / scale),
        q: sol.q,
        divide_steps: sol.steps.len(),
        fallback_sizes: sol.fallback_sizes,
        sub_solves: sol.sub_solves,
        inexact_sub_solves: sol.inexact_sub_solves,
        steps: sol.steps,
    })?;
    Ok(rep)
}

fn generate_cmd(a: &GenerateArgs) -> Result<Report> {
    if a.terminals_out.is_some() && !matches!(a.kind, GenKind::ClusteredTowns) {
        bail!(HwdError::param("--terminals-out applies to clustered-towns only"));
    }
    let mut terminals = None;
    let g = match a.kind {
        GenKind::Star => generate::star(a.n)?,
        GenKind::Grid => generate::grid(a.n)?,
        GenKind::Duostar => generate::duostar(a.n, a.eps)?,
        GenKind::RandomGeometric => generate::random_geometric(a.n, a.radius, a.seed)?,
        GenKind::EuclideanComplete => generate::euclidean_complete(a.n, a.seed)?,
        GenKind::RandomConnected => generate::random_connected(a.n, a.extra, a.wmin, a.wmax, a.seed)?,
        GenKind::ClusteredTowns => {
            let (g, t) = generate::clustered_towns(a.n, a.cluster_size, a.spoke, a.seed)?;
            terminals = Some(t);
            g
        }
    };
    std::fs::write(&a.out, to_dimacs(&g)).with_context(|| format!("writing {}", a.out.display()))?;
    if let (Some(p), Some(t)) = (&a.terminals_out, &terminals) {
        let body: Vec<String> = t.iter().map(|v| v.to_string()).collect();
        std::fs::write(p, body.join("\n") + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    let mut rep = Report::new("generate", None, a);
    rep.timings_ms = None;
    rep.result(serde_json::json!({
        "path": a.out,
        "vertices": g.vertex_count(),
        "edges": g.edge_count(),
        "sha256": input::fingerprint(&g),
        "terminals": terminals.as_ref().map(Vec::len),
    }))?;
    Ok(rep)
}
