use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cyclesynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyclesynth"))
        .args(args)
        .env_remove("CYCLESYNTH_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synthesize(mdp: &str, dra: &str, pi: &str, extra: &[&str]) -> Output {
    let (mdp, dra) = (fixture(mdp), fixture(dra));
    let mut args = vec!["synthesize", "--mdp", mdp.to_str().unwrap(), "--dra", dra.to_str().unwrap(), "--pi", pi];
    args.extend_from_slice(extra);
    cyclesynth(&args)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn toy_b_synthesizes_lambda_two() {
    let out = synthesize("toy_b.mdp.json", "always.dra.json", "pi", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("lambda = 2\n"), "{text}");
    assert!(text.contains("status: optimal"), "{text}");
}

#[test]
fn sub_optimal_result_exits_two() {
    let out = synthesize("patrol.mdp.json", "dra/gf_ab.dra", "a", &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stdout(&out).contains("status: sub-optimal"));
}

#[test]
fn unreachable_k_is_reported() {
    let out = synthesize("toy_b.mdp.json", "unreachable_k.dra.json", "pi", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no reachable accepting maximal end component"), "{}", stderr(&out));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let out = synthesize("malformed.mdp.json", "always.dra.json", "pi", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 7, column 3"), "{}", stderr(&out));
}

#[test]
fn invalid_rows_are_reported() {
    let out = synthesize("row_sum.mdp.json", "always.dra.json", "pi", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("row sum 0.9"), "{}", stderr(&out));
}

#[test]
fn unknown_pi_is_rejected() {
    let out = synthesize("toy_a.mdp.json", "always.dra.json", "nope", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope"));
}

#[test]
fn output_is_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<PathBuf> = (0..3).map(|i| dir.path().join(format!("out{i}.json"))).collect();
    for (i, f) in files.iter().enumerate() {
        let jobs = (i + 1).to_string();
        let out = synthesize("two_amec.mdp.json", "always.dra.json", "pi", &["--out", path(f), "--jobs", &jobs]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let first = std::fs::read(&files[0]).unwrap();
    for f in &files[1..] {
        assert_eq!(std::fs::read(f).unwrap(), first);
    }
    let text = String::from_utf8(first).unwrap();
    assert!(text.contains("\"lambda\": 2.0"), "{text}");
    assert!(text.contains("\"amec\": 1"), "{text}");
}

fn synthesize_to(dir: &Path, mdp: &str, dra: &str, pi: &str) -> PathBuf {
    let policy = dir.join("policy.json");
    let out = synthesize(mdp, dra, pi, &["--out", path(&policy)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    policy
}

fn simulate(mdp: &str, dra: &str, policy: &Path, extra: &[&str]) -> Output {
    let (mdp, dra) = (fixture(mdp), fixture(dra));
    let mut args = vec!["simulate", "--mdp", path(&mdp), "--dra", path(&dra), "--policy", path(policy)];
    args.extend_from_slice(extra);
    cyclesynth(&args)
}

#[test]
fn zero_stages_report_one_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let policy = synthesize_to(dir.path(), "toy_a.mdp.json", "dra/gf_pi.dra", "pi");
    let out = simulate("toy_a.mdp.json", "dra/gf_pi.dra", &policy, &["--stages", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("cycles: 1\n"), "{}", stdout(&out));
}

#[test]
fn toy_a_ten_stages() {
    let dir = tempfile::tempdir().unwrap();
    let policy = synthesize_to(dir.path(), "toy_a.mdp.json", "always.dra.json", "pi");
    let report = dir.path().join("report.json");
    let out = simulate("toy_a.mdp.json", "always.dra.json", &policy, &["--stages", "10", "--out", path(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["totalCost"], 10.0);
    assert_eq!(json["cycles"], 6);
    assert_eq!(json["rng"], "ChaCha8");
}

#[test]
fn simulation_is_reproducible_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let policy = synthesize_to(dir.path(), "pickup_delivery.mdp.json", "dra/pickup.dra", "pickup");
    let reports: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    let csv = dir.path().join("cycles.csv");
    for r in &reports {
        let out = simulate(
            "pickup_delivery.mdp.json",
            "dra/pickup.dra",
            &policy,
            &["--stages", "5000", "--seed", "11", "--out", path(r), "--csv", path(&csv)],
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(stdout(&out).contains("L visits 0"), "{}", stdout(&out));
    }
    assert_eq!(std::fs::read(&reports[0]).unwrap(), std::fs::read(&reports[1]).unwrap());
    let csv = std::fs::read_to_string(csv).unwrap();
    assert!(csv.starts_with("cycle,cost\n1,"), "{csv}");
}

#[test]
fn foreign_policy_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let policy = synthesize_to(dir.path(), "toy_b.mdp.json", "always.dra.json", "pi");
    let out = simulate("pickup_delivery.mdp.json", "dra/pickup.dra", &policy, &["--stages", "10", "--pi", "pickup"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("policy does not match the model"), "{}", stderr(&out));
}

#[test]
fn oracle_on_toys() {
    for (name, lambda) in [("toy_a.mdp.json", "lambda = 2\n"), ("toy_b.mdp.json", "lambda = 2\n")] {
        let out = cyclesynth(&["oracle", "--mdp", path(&fixture(name)), "--pi", "pi"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(stdout(&out).contains(lambda), "{}", stdout(&out));
    }
    let out = cyclesynth(&["oracle", "--mdp", path(&fixture("toy_b.mdp.json")), "--pi", "pi", "--k", "1"]);
    assert!(stdout(&out).contains("lambda = 2\n"), "{}", stdout(&out));
}

#[test]
fn oracle_refuses_large_models() {
    // 10 states with 4 actions each: 4^10 policies
    let states: Vec<String> =
        (0..10).map(|s| format!("{{\"id\": {s}, \"label\": {}}}", if s == 0 { "[\"pi\"]" } else { "[]" })).collect();
    let mut available = Vec::new();
    let mut trans = Vec::new();
    let mut cost = Vec::new();
    for s in 0..10 {
        available.push(format!("\"{s}\": [\"a\", \"b\", \"c\", \"d\"]"));
        for (k, a) in ["a", "b", "c", "d"].iter().enumerate() {
            trans.push(format!("\"{s},{a}\": [[{}, 1.0]]", (s + k + 1) % 10));
            cost.push(format!("\"{s},{a}\": 1.0"));
        }
    }
    let text = format!(
        "{{\"states\": [{}], \"actions\": [\"a\", \"b\", \"c\", \"d\"], \"available\": {{{}}}, \"trans\": {{{}}}, \"cost\": {{{}}}, \"init\": 0}}",
        states.join(", "),
        available.join(", "),
        trans.join(", "),
        cost.join(", ")
    );
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("big.mdp.json");
    std::fs::write(&file, text).unwrap();
    let out = cyclesynth(&["oracle", "--mdp", path(&file), "--pi", "pi"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("too many stationary policies"), "{}", stderr(&out));
}

#[test]
fn product_export_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("product.json");
    let out = cyclesynth(&[
        "product",
        "--mdp",
        path(&fixture("pickup_delivery.mdp.json")),
        "--dra",
        path(&fixture("dra/pickup.dra")),
        "--pi",
        "pickup",
        "--out",
        path(&file),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let product = cyclesynth::format::mdp::parse_mdp(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(product.num_states(), 25);
    assert!(std::fs::read_to_string(&file).unwrap().contains("\"name\": \"0:0\""));
}

#[test]
fn tolerance_must_be_positive() {
    let out = synthesize("toy_b.mdp.json", "always.dra.json", "pi", &["--tol", "0"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("not a positive number"), "{}", stderr(&out));
}
