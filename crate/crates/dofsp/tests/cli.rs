use std::path::Path;

use dofsp::cli::main_with;
use dofsp::fixtures;
use dofsp::instance_file::InstanceFile;
use dofsp::peq::{self, Grid};
use dofsp_core::analysis::Setting;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("dofsp").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn fixtures_round_trip() {
    for (name, text) in fixtures::ALL {
        let a = InstanceFile::parse(text).unwrap();
        let b = InstanceFile::parse(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, b, "{name}");
        assert_eq!(a.instance().unwrap(), b.instance().unwrap(), "{name}");
        for s in &a.scenarios {
            a.scenario_instance(s).unwrap();
        }
        let c = InstanceFile::from_instance(&a.instance().unwrap(), a.seed);
        assert_eq!(c.instance().unwrap(), a.instance().unwrap(), "{name}");
    }
}

#[test]
fn verify_examples_passes() {
    let (code, out, err) = run(&["verify-examples"]);
    assert_eq!(code, 0, "{out}{err}");
    assert_eq!(out.lines().count(), 11);
    assert!(out.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn verify_examples_reports_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = InstanceFile::parse(fixtures::EXAMPLE2).unwrap();
    f.scenarios[0].expect.total = Some(53);
    let path = write(dir.path(), "bad.json", &f.to_json().unwrap());
    let (code, out, _) = run(&["verify-examples", "--instance", &path]);
    assert_eq!(code, 3);
    assert!(out.contains("FAIL example2/ring: total: expected 53, got 54"), "{out}");
}

#[test]
fn run_is_byte_identical_for_identical_config() {
    for args in [
        vec!["run", "--instance", "example1", "--scenario", "mapping-1-n3", "--seed", "9", "--transcript"],
        vec!["run", "--instance", "example2", "--topology", "ring", "--seed", "4", "--format", "csv"],
        vec!["run", "--instance", "example3.json", "--scenario", "star-n3", "--seed", "4"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.0, 0, "{}", a.2);
        assert_eq!(a.1, b.1);
    }
    let a = run(&["run", "--instance", "example1", "--scenario", "mapping-1-n2", "--seed", "1"]);
    let b = run(&["run", "--instance", "example1", "--scenario", "mapping-1-n2", "--seed", "2"]);
    assert_ne!(a.1, b.1, "different seeds draw different transcripts");
}

#[test]
fn run_reports_costs_and_formula() {
    let (code, out, _) = run(&["run", "--instance", "example1", "--scenario", "mapping-1-n2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["solution"], serde_json::json!(["C", "G"]));
    assert_eq!(v["download"], 6);
    assert_eq!(v["total"], 54);
    assert_eq!(v["formula"]["value"], 6);
    assert_eq!(v["leader_knowledge"], serde_json::json!(["A", "C", "G"]));
    assert_eq!(v["transcript_sha256"].as_str().unwrap().len(), 64);

    let (_, out, _) = run(&["run", "--instance", "example3", "--scenario", "star-n2", "--format", "csv"]);
    let mut rows = csv::Reader::from_reader(out.as_bytes());
    let header = rows.headers().unwrap().clone();
    let row = rows.records().next().unwrap().unwrap();
    let get = |k: &str| row.get(header.iter().position(|h| h == k).unwrap()).unwrap().to_string();
    assert_eq!(get("download"), "24");
    assert_eq!(get("total"), "264");
    assert_eq!(get("solution"), "G");
}

#[test]
fn run_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let p = path.to_str().unwrap();
    let (code, out, _) = run(&["run", "--instance", "example2", "--scenario", "ring", "--out", p]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["total"], 54);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Usage errors.
    assert_eq!(run(&["run"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["run", "--instance", "example1", "--topology", "hexagon", "--seed", "1"]).0, 1);
    assert_eq!(run(&["run", "--instance", "example1", "--scenario", "nope"]).0, 1);
    assert_eq!(run(&["run", "--instance", "/no/such/file.json", "--topology", "ring", "--seed", "1"]).0, 1);
    let garbage = write(dir.path(), "garbage.json", "{ not json");
    assert_eq!(run(&["run", "--instance", &garbage, "--topology", "ring", "--seed", "1"]).0, 1);
    // Seed is mandatory when the file has none.
    let mut f = InstanceFile::parse(fixtures::EXAMPLE2).unwrap();
    f.seed = None;
    let seedless = write(dir.path(), "seedless.json", &f.to_json().unwrap());
    let (code, _, err) = run(&["run", "--instance", &seedless, "--topology", "ring"]);
    assert_eq!(code, 1);
    assert!(err.contains("--seed"), "{err}");
    assert_eq!(run(&["run", "--instance", &seedless, "--topology", "ring", "--seed", "3"]).0, 0);
    assert_eq!(run(&["peq", "--trials", "10"]).0, 1);
    // Empty intersection.
    f.entities[1].set = vec!["B".into()];
    let disjoint = write(dir.path(), "disjoint.json", &f.to_json().unwrap());
    let (code, _, err) = run(&["run", "--instance", &disjoint, "--topology", "star"]);
    assert_eq!(code, 2, "{err}");
    // Help is not an error.
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn audit_with_mutation_fails_with_counterexample() {
    let (code, out, _) = run(&["audit", "--protocol", "two_party", "--mutate", "drop-mask", "--seed", "1"]);
    assert_eq!(code, 3);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], false);
    let cx = v["cases"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|c| c["report"]["verdicts"].as_array().unwrap().iter())
        .find(|verdict| verdict["passed"] == false)
        .unwrap();
    assert!(cx["counterexample"]["reason"].is_string());
}

#[test]
fn audit_passes_and_naive_leaks() {
    let (code, out, err) = run(&["audit", "--protocol", "star", "--seed", "1"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["downgraded"], false);
    assert!(v["prior"].as_str().unwrap().contains("uniform"));

    let (code, out, _) = run(&["audit", "--protocol", "naive-two-party", "--expect-leak", "--seed", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["leak_found"], true);
    // The naive leader learns about its whole set: never less than nominal,
    // strictly more in every two-party case of the suite.
    for case in v["cases"].as_array().unwrap() {
        let known = case["leader_knowledge"].as_array().unwrap();
        let nominal = case["nominal_index_set"].as_array().unwrap();
        assert!(nominal.iter().all(|x| known.contains(x)));
        assert!(known.len() > nominal.len(), "{case}");
    }
    // Expecting a leak from a private protocol fails.
    assert_eq!(run(&["audit", "--protocol", "star", "--expect-leak", "--seed", "1"]).0, 3);
}

#[test]
fn empty_grid_is_header_only() {
    let (code, out, _) = run(&["peq", "--topology", "two-party", "--grid", ""]);
    assert_eq!(code, 0);
    assert_eq!(out, "topology,K,P1,M,tau,N,exact,corrected,mc_estimate,halfwidth\n");
}

#[test]
fn peq_table_reproduces_published_cells() {
    let (code, out, _) = run(&["peq", "--topology", "ring", "--grid", "K=10;tau=2,10;M=4"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("ring,10,10,4,2,3,2.92969e-3,"), "{}", lines[1]);
    assert!(lines[2].starts_with("ring,10,10,4,10,3,9.67"), "{}", lines[2]);
}

#[test]
fn parallel_and_sequential_monte_carlo_agree() {
    let grid = Grid::parse("K=6;P1=4;tau=2,3;M=1,2", Setting::TwoParty).unwrap();
    let cells = grid.cells(Setting::TwoParty).unwrap();
    // 9000 trials span three chunks.
    let par = peq::table(&cells, 9000, 5, true).unwrap();
    let seq = peq::table(&cells, 9000, 5, false).unwrap();
    assert_eq!(par, seq);
    assert_eq!(peq::to_csv(&par).unwrap(), peq::to_csv(&seq).unwrap());

    let args = ["peq", "--topology", "star", "--grid", "K=5;tau=2;M=1,2", "--trials", "3000", "--seed", "8"];
    assert_eq!(run(&args).1, run(&args).1);
}

#[test]
fn monte_carlo_tracks_exact_value() {
    let grid = Grid::parse("K=5;P1=5;tau=3;M=1", Setting::TwoParty).unwrap();
    let rows = peq::table(&grid.cells(Setting::TwoParty).unwrap(), 100_000, 11, true).unwrap();
    let mc = rows[0].mc.unwrap();
    assert!(mc.contains(rows[0].corrected), "{mc:?} vs {}", rows[0].corrected);
}
