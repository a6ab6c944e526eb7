use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

struct Out {
    code: i32,
    json: Value,
    stdout: String,
    stderr: String,
}

fn hwd(args: &[&str]) -> Out {
    let o = Command::new(env!("CARGO_BIN_EXE_hwd")).args(args).env("HWD_THREADS", "1").output().unwrap();
    let stdout = String::from_utf8(o.stdout).unwrap();
    Out {
        code: o.status.code().unwrap_or(-1),
        json: serde_json::from_str(&stdout).unwrap_or(Value::Null),
        stdout,
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn ok(args: &[&str]) -> Value {
    let o = hwd(args);
    assert_eq!(o.code, 0, "{args:?} failed: {}", o.stderr);
    o.json
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = p(dir, name);
    let mut a = vec!["generate"];
    a.extend_from_slice(args);
    a.extend_from_slice(&["--out", s(&out)]);
    ok(&a);
    out
}

fn save(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let path = p(dir, name);
    std::fs::write(&path, serde_json::to_string(v).unwrap()).unwrap();
    path
}

fn verify(graph: &Path, artifact: &Path) -> Out {
    hwd(&["verify", "--in", s(graph), "--artifact", s(artifact)])
}

fn failed(o: &Out) -> Vec<String> {
    o.json["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["ok"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn star_cover_has_one_hub() {
    let d = TempDir::new().unwrap();
    let g = gen(&d, "star.gr", &["star", "--n", "12"]);
    let r = ok(&["spc", "--in", s(&g), "--r", "1", "--eps", "0"]);
    assert_eq!(r["kind"], "spc");
    assert_eq!(r["result"]["hub_count"], 1);
    assert_eq!(r["result"]["spc"]["hubs"], serde_json::json!([0]));
    assert_eq!(r["ok"], true);
    assert_eq!(r["input"]["vertices"], 13);
    assert_eq!(r["input"]["parallel_edges_collapsed"], 0);
}

#[test]
fn generator_sizes() {
    let d = TempDir::new().unwrap();
    let star = gen(&d, "s.gr", &["star", "--n", "5"]);
    let r = ok(&["spc", "--in", s(&star), "--r", "1"]);
    assert_eq!((r["input"]["vertices"].as_u64(), r["input"]["edges"].as_u64()), (Some(6), Some(5)));
    let grid = gen(&d, "g.gr", &["grid", "--n", "4"]);
    let r = ok(&["spc", "--in", s(&grid), "--r", "1"]);
    assert_eq!((r["input"]["vertices"].as_u64(), r["input"]["edges"].as_u64()), (Some(16), Some(24)));
    let duo = gen(&d, "d.gr", &["duostar", "--n", "3", "--eps", "0.1"]);
    let text = std::fs::read_to_string(duo).unwrap();
    let alpha = 1.0 / (7.0 + 16.0 * 0.1);
    let small: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("a "))
        .map(|l| l.split_whitespace().nth(3).unwrap().parse().unwrap())
        .filter(|&w: &f64| w < 1.0)
        .collect();
    assert_eq!(small.len(), 12);
    assert!(small.iter().all(|w| (w - alpha).abs() < 1e-15));
}

#[test]
fn reports_are_reproducible_without_timings() {
    let d = TempDir::new().unwrap();
    let g = gen(&d, "g.gr", &["random-geometric", "--n", "50", "--radius", "0.3", "--seed", "4"]);
    let args = ["--no-timings", "decompose", "--in", s(&g), "--delta", "0.6", "--trials", "20", "--seed", "9"];
    let a = hwd(&args);
    let b = hwd(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.json.get("timings_ms").is_none());
    let rows = &a.json["result"]["padding"]["rows"];
    assert_eq!(rows[0]["gamma"], 0.0625);
}

#[test]
fn every_kind_round_trips_through_verify() {
    let d = TempDir::new().unwrap();
    let g = gen(&d, "g.gr", &["random-geometric", "--n", "60", "--radius", "0.3", "--seed", "1"]);
    let gs = s(&g);
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("spc", vec!["spc", "--in", gs, "--r", "0.1", "--eps", "0.2"]),
        ("spc-net", vec!["spc", "--in", gs, "--r", "0.1", "--eps", "0.5", "--builder", "eps-net"]),
        ("towns", vec!["towns", "--in", gs, "--r", "0.05", "--eps", "0.2"]),
        ("hierarchy", vec!["hierarchy", "--in", gs]),
        ("decompose", vec!["decompose", "--in", gs, "--delta", "0.6"]),
        ("cover", vec!["cover", "--in", gs, "--delta", "0.6"]),
        ("pcover", vec!["partition-cover", "--in", gs, "--delta", "0.6", "--eps", "0.5"]),
    ];
    for (name, args) in runs {
        let rep = ok(&args);
        let f = save(&d, &format!("{name}.json"), &rep);
        let v = verify(&g, &f);
        assert_eq!(v.code, 0, "{name}: {}", v.stdout);
        assert_eq!(v.json["ok"], true);
    }
}

#[test]
fn tampered_cover_is_rejected_with_a_vertex() {
    let d = TempDir::new().unwrap();
    let g = gen(&d, "g.gr", &["random-geometric", "--n", "60", "--radius", "0.3", "--seed", "2"]);
    let mut rep = ok(&["cover", "--in", s(&g), "--delta", "0.6"]);
    let members = rep["result"]["cover"]["clusters"][0]["members"].as_array_mut().unwrap();
    members.pop().unwrap();
    let f = save(&d, "bad.json", &rep);
    let v = verify(&g, &f);
    assert_eq!(v.code, 1);
    assert_eq!(failed(&v), vec!["cover_valid"]);
    let w = &v.json["checks"][1]["witness"];
    assert!(w["vertex"].is_u64(), "{w}");
    // Either the padding ball or the recorded count breaks at some vertex.
    assert!(matches!(w["kind"].as_str(), Some("padding" | "sparsity")));
}

#[test]
fn tampered_spc_is_rejected_with_a_pair() {
    let d = TempDir::new().unwrap();
    let g = gen(&d, "star.gr", &["star", "--n", "8"]);
    let mut rep = ok(&["spc", "--in", s(&g), "--r", "1", "--eps", "0"]);
    rep["result"]["spc"]["hubs"] = serde_json::json!([]);
    let v = verify(&g, &save(&d, "bad.json", &rep));
    assert_eq!(v.code, 1);
    let w = &v.json["checks"][1]["witness"];
    assert!(w["u"].is_u64() && w["z"].is_u64());
}

#[test]
fn verify_detects_a_different_graph() {
    let d = TempDir::new().unwrap();
    let a = gen(&d, "a.gr", &["star", "--n", "8"]);
    let b = gen(&d, "b.gr", &["star", "--n", "9"]);
    let rep = ok(&["spc", "--in", s(&a), "--r", "1", "--eps", "0"]);
    let v = verify(&b, &save(&d, "r.json", &rep));
    assert_eq!(v.code, 1);
    assert!(failed(&v).contains(&"input_matches".to_string()));
}

#[test]
fn tsp_divide_path_and_tour_file() {
    let d = TempDir::new().unwrap();
    let g = p(&d, "ct.gr");
    let k = p(&d, "ct.txt");
    ok(&[
        "generate", "clustered-towns", "--n", "5", "--cluster-size", "2", "--spoke", "10", "--out", s(&g),
        "--terminals-out", s(&k),
    ]);
    let tour = p(&d, "tour.json");
    let rep = ok(&["tsp", "solve", "--in", s(&g), "--terminals", s(&k), "--q", "3", "--out", s(&tour)]);
    let r = &rep["result"];
    assert!(r["divide_steps"].as_u64().unwrap() >= 1);
    let ratio = r["ratio_vs_bruteforce"].as_f64().unwrap();
    assert!((1.0 - 1e-9..=1.0 + 1.0 / 6.0).contains(&ratio), "{ratio}");
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&tour).unwrap()).unwrap();
    for key in ["cost", "walk", "certified", "ratio_vs_bruteforce"] {
        assert!(t.get(key).is_some(), "{key}");
    }
    assert_eq!(verify(&g, &save(&d, "rep.json", &rep)).code, 0);
    let v = hwd(&["verify", "--in", s(&g), "--artifact", s(&tour), "--terminals", s(&k)]);
    assert_eq!(v.code, 0, "{}", v.stdout);

    let mut bad = t.clone();
    bad["cost"] = serde_json::json!(t["cost"].as_f64().unwrap() * 0.5);
    let b = save(&d, "bad.json", &bad);
    let v = hwd(&["verify", "--in", s(&g), "--artifact", s(&b), "--terminals", s(&k)]);
    assert_eq!(v.code, 1);
    assert_eq!(failed(&v), vec!["cost_matches"]);

    let mut bad = t;
    bad["walk"].as_array_mut().unwrap().retain(|x| x != &serde_json::json!(1));
    let b = save(&d, "bad2.json", &bad);
    let v = hwd(&["verify", "--in", s(&g), "--artifact", s(&b), "--terminals", s(&k)]);
    assert_eq!(v.code, 1);
    assert!(failed(&v).contains(&"visits_terminals".to_string()));
}

#[test]
fn tsp_reports_original_units() {
    let d = TempDir::new().unwrap();
    let g = p(&d, "half.txt");
    // Square with side 0.5: rescaled internally, reported back in input units.
    std::fs::write(&g, "0 1 0.5\n1 2 0.5\n2 3 0.5\n3 0 0.5\n").unwrap();
    let k = p(&d, "k.txt");
    std::fs::write(&k, "0 1 2 3\n").unwrap();
    let rep = ok(&["tsp", "solve", "--in", s(&g), "--terminals", s(&k)]);
    assert!((rep["result"]["cost"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(rep["result"]["ratio_vs_bruteforce"], 1.0);
    assert!(rep["input"]["scale"].as_f64().unwrap() > 1.0);
}

#[test]
fn oracle_build_query_bench_and_verify() {
    let d = TempDir::new().unwrap();
    let g = gen(&d, "g.gr", &["random-connected", "--n", "60", "--extra", "40", "--seed", "5"]);
    let o = p(&d, "o.bin");
    let rep = ok(&["oracle", "build", "--in", s(&g), "--eps", "0.5", "--out", s(&o)]);
    assert_eq!(rep["result"]["sandwich"]["exhaustive"], true);
    assert!(rep["result"]["sandwich"]["worst_ratio"].as_f64().unwrap() <= 2.0 + 1e-9);

    let q = ok(&["oracle", "query", "--in", s(&o), "3", "17"]);
    let est = q["result"]["estimate"].as_f64().unwrap();
    assert!(est > 0.0);
    assert_eq!(ok(&["oracle", "query", "--in", s(&o), "5", "5"])["result"]["estimate"], 0.0);
    assert_eq!(hwd(&["oracle", "query", "--in", s(&o), "3", "600"]).code, 2);

    let b1 = ok(&["oracle", "bench", "--in", s(&o), "--queries", "2000", "--seed", "3"]);
    let b2 = ok(&["oracle", "bench", "--in", s(&o), "--queries", "2000", "--seed", "3"]);
    assert_eq!(b1["result"]["checksum"], b2["result"]["checksum"]);

    assert_eq!(verify(&g, &o).code, 0);
    let bytes = std::fs::read(&o).unwrap();
    let cut = p(&d, "cut.bin");
    std::fs::write(&cut, &bytes[..bytes.len() - 9]).unwrap();
    let v = verify(&g, &cut);
    assert_eq!(v.code, 1);
    assert!(failed(&v).contains(&"format".to_string()));
}

#[test]
fn treecover_binary_verifies() {
    let d = TempDir::new().unwrap();
    let g = gen(&d, "g.gr", &["grid", "--n", "6"]);
    let t = p(&d, "t.bin");
    let rep = ok(&["treecover", "--in", s(&g), "--eps", "1", "--out", s(&t)]);
    assert_eq!(rep["result"]["check"]["stretch_ok"], true);
    let v = verify(&g, &t);
    assert_eq!(v.code, 0, "{}", v.stdout);
    assert_eq!(v.json["result"]["artifact_kind"], "treecover");
    let summary = save(&d, "tc.json", &rep);
    assert_eq!(verify(&g, &summary).code, 2);
}

#[test]
fn usage_and_parse_errors_exit_2() {
    let d = TempDir::new().unwrap();
    let g = gen(&d, "star.gr", &["star", "--n", "4"]);
    assert_eq!(hwd(&["spc", "--in", s(&g), "--r", "1", "--eps", "3"]).code, 2);
    assert_eq!(hwd(&["hierarchy", "--in", s(&g), "--eps", "0.5"]).code, 2);
    assert_eq!(hwd(&["spc", "--in", s(&g)]).code, 2);
    assert_eq!(hwd(&["frobnicate"]).code, 2);
    let junk = p(&d, "junk.gr");
    std::fs::write(&junk, "p sp 3 1\na 1 9 1.0\n").unwrap();
    let o = hwd(&["spc", "--in", s(&junk), "--r", "1"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("line 2"), "{}", o.stderr);
    let k = p(&d, "k.txt");
    std::fs::write(&k, "0 99\n").unwrap();
    assert_eq!(hwd(&["tsp", "solve", "--in", s(&g), "--terminals", s(&k)]).code, 2);
    assert_eq!(hwd(&["tsp", "solve", "--in", s(&g), "--terminals", s(&k), "--q", "1"]).code, 2);
}

#[test]
fn edge_list_input_is_detected() {
    let d = TempDir::new().unwrap();
    let g = p(&d, "path.txt");
    std::fs::write(&g, "# path\n0 1 1\n1 2 1\n2 3 1\n").unwrap();
    let r = ok(&["spc", "--in", s(&g), "--r", "1", "--eps", "0"]);
    assert_eq!(r["input"]["format"], "edges");
    assert_eq!(r["input"]["vertices"], 4);
}

#[test]
fn committed_schemas_are_current() {
    let docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas");
    let d = TempDir::new().unwrap();
    let o = hwd(&["schema", "--dir", s(d.path())]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let mut names: Vec<_> = std::fs::read_dir(d.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 13);
    for name in names {
        let fresh = std::fs::read_to_string(d.path().join(&name)).unwrap();
        let committed = std::fs::read_to_string(docs.join(&name)).unwrap_or_default();
        assert_eq!(fresh, committed, "docs/schemas/{} is stale; run `hwd schema --dir docs/schemas`", name.to_string_lossy());
    }
    assert_eq!(hwd(&["schema", "nope"]).code, 2);
}

#[test]
fn decompose_padding_table_against_floor() {
    let d = TempDir::new().unwrap();
    let g = gen(&d, "g.gr", &["random-geometric", "--n", "60", "--radius", "0.25", "--seed", "6"]);
    let r = ok(&["decompose", "--in", s(&g), "--delta", "0.5", "--trials", "1000", "--gamma", "0.0625"]);
    let res = &r["result"];
    let lambda = res["lambda"].as_f64().unwrap();
    let row = &res["padding"]["rows"][0];
    let floor = (-4.0 * 0.0625 * lambda).exp();
    assert!((row["floor"].as_f64().unwrap() - floor).abs() < 1e-12);
    assert_eq!(res["padding"]["trials"], 1000);
    assert_eq!(row["per_vertex"].as_array().unwrap().len(), 60);
    assert!(row["min"].as_f64().unwrap() >= 0.0);
}
