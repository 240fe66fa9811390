use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctrlsparse"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PAIRED_CSV: &str = "\
# eigenvalues 1, 2, 3 each twice
1.3333333333333333,0,0,-1.3333333333333333,0,0
0,1,0,0,0,0
0,0,3,0,0,0
-0.16666666666666666,0,0,1.6666666666666667,0,0
0,0,-3,0,2,0
0,1,0,0,0,3
";

#[test]
fn analyze_reports_multiplicities() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", PAIRED_CSV);
    let out = run(&["analyze", s(&a)]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["n"], 6);
    assert_eq!(v["k_max"], 2);
    let ks: Vec<u64> = v["modes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["multiplicity"].as_u64().unwrap())
        .collect();
    assert_eq!(ks, vec![2, 2, 2]);
}

#[test]
fn analyze_with_pattern_prints_dot() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        r#"{"n":6,"l":2,"support":[[1,1],[2,1],[2,2],[3,2]]}"#,
    );
    let out = run(&["analyze", "fixture:paired", "--pattern", s(&p)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("digraph"));
}

#[test]
fn check_pattern_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "good.json",
        r#"{"n":6,"l":2,"support":[[1,1],[2,1],[2,2],[3,2]]}"#,
    );
    let out = run(&["check", "fixture:paired", "--pattern", s(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["feasible"], true);

    // a single input cannot reach modes of multiplicity two
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"n":6,"l":1,"support":[[1,1],[2,1],[3,1]]}"#,
    );
    let out = run(&["check", "fixture:paired", "--pattern", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["feasible"], false);
    assert_eq!(v["failing_mode"]["required"], 2);
}

#[test]
fn check_concrete_b() {
    let dir = tempfile::tempdir().unwrap();
    let b = write(dir.path(), "b.csv", "0\n0\n1\n0\n");
    let out = run(&["check", "fixture:circuit", "--b", s(&b)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["kalman_rank"], 4);

    let b = write(dir.path(), "b2.csv", "0\n1\n");
    let out = run(&["check", "fixture:double", "--b", s(&b)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn construct_outputs_controllable_b() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        r#"{"n":6,"l":2,"support":[[1,1],[2,1],[2,2],[3,2]]}"#,
    );
    let out = run(&["construct", "fixture:paired", s(&p), "--format", "mm"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let b = ctrlsparse::io::parse_matrix(&text).unwrap();
    assert_eq!(b.shape(), (6, 2));
    for r in 0..6 {
        for c in 0..2 {
            let allowed = matches!((r, c), (0, 0) | (1, 0) | (1, 1) | (2, 1));
            assert!(
                allowed || b[(r, c)] == 0.0,
                "entry ({r},{c}) outside the pattern"
            );
        }
    }
    let a = ctrlsparse::fixtures::paired();
    assert_eq!(
        ctrlsparse::feasibility::kalman_rank(&a, &b, 1e-8).unwrap(),
        6
    );

    let out = run(&["construct", "fixture:paired", s(&p), "--trace"]);
    let v = json_of(&out);
    assert_eq!(v["controllable"], true);
    assert!(v["trace"].is_object());
}

#[test]
fn construct_rejects_infeasible_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        r#"{"n":6,"l":2,"support":[[1,1],[4,2]]}"#,
    );
    let out = run(&["construct", "fixture:paired", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn macp_greedy_and_forbidden() {
    let out = run(&["macp", "fixture:paired", "--trace"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["states"], serde_json::json!([1, 2, 3]));
    assert!(v["gains"].is_array());

    let out = run(&["macp", "fixture:paired", "--forbidden", "1"]);
    let v = json_of(&out);
    let states = v["states"].as_array().unwrap();
    assert!(states.iter().all(|x| x != 1));
    assert_eq!(v["b"].as_array().unwrap().len(), 6);
}

#[test]
fn macp_gramian_baseline() {
    let out = run(&["macp", "fixture:circuit", "--baseline", "gramian"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json_of(&out);
    assert_eq!(v["algorithm"], "gramian_greedy");
    assert!(v["size"].as_u64().unwrap() >= 1);
    // the Gramian needs a Hurwitz matrix
    let out = run(&["macp", "fixture:paired", "--baseline", "gramian"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mscp_algorithms_agree_with_oracle_bound() {
    let oracle = json_of(&run(&["oracle", "mscp", "fixture:paired", "--l", "2"]));
    let opt = oracle["sparsity"].as_u64().unwrap();
    for alg in ["simple", "two-stage"] {
        let out = run(&["mscp", "fixture:paired", "--l", "2", "--algorithm", alg]);
        assert!(out.status.success());
        let v = json_of(&out);
        assert!(v["sparsity"].as_u64().unwrap() >= opt);
        assert_eq!(v["pattern"]["l"], 2);
    }
    let out = run(&["mscp", "fixture:paired", "--l", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn micp_circuit() {
    let out = run(&["micp", "fixture:circuit", "--accessible", "1,3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["inputs"], 1);
    let b: Vec<f64> = v["b"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r[0].as_f64().unwrap())
        .collect();
    assert_eq!(b, vec![0.0, 0.0, 1.0, 0.0]);

    let out = run(&["micp", "fixture:paired", "--accessible", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["feasible"], false);
}

#[test]
fn gen_round_trips_through_every_format() {
    let dir = tempfile::tempdir().unwrap();
    for fmt in ["mm", "csv", "json"] {
        let out = run(&[
            "gen", "jordan", "--n", "7", "--k-max", "3", "--seed", "5", "--format", fmt,
        ]);
        assert!(out.status.success());
        let p = write(
            dir.path(),
            &format!("a.{fmt}"),
            &String::from_utf8(out.stdout).unwrap(),
        );
        let v = json_of(&run(&["analyze", s(&p)]));
        assert_eq!(v["n"], 7);
        assert!(v["k_max"].as_u64().unwrap() <= 3);
    }
    let a = run(&[
        "gen",
        "scale-free",
        "--n",
        "12",
        "--seed",
        "1",
        "--stabilize",
    ]);
    let b = run(&[
        "gen",
        "scale-free",
        "--n",
        "12",
        "--seed",
        "1",
        "--stabilize",
    ]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("bench.csv");
    let out = bin()
        .args([
            "bench",
            "--generator",
            "jordan",
            "--sizes",
            "6:8:2",
            "--trials",
            "2",
            "--algorithms",
            "simple_greedy,two_stage",
            "--out",
            s(&out_path),
        ])
        .env("CTRLSPARSE_THREADS", "2")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "generator,n,trial,algorithm,result,seconds,seed"
    );
    // eigenstructure row plus two algorithms, for 2 sizes x 2 trials
    assert_eq!(lines.count(), 12);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "1,2\n3\n");
    assert_eq!(run(&["analyze", s(&bad)]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "missing.mm"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "fixture:nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["check", "fixture:circuit", "--accessible", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["analyze", "fixture:circuit", "--tol", "rank"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["bench", "--sizes", "5:1"]).status.code(), Some(2));
}

#[test]
fn tolerance_overrides_are_accepted() {
    let out = run(&[
        "analyze",
        "fixture:paired",
        "--tol",
        "cluster=1e-6",
        "--tol",
        "det=1e-9",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
