use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn moo(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moo"))
        .args(args)
        .env("MOO_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn rows(path: &Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| header.iter().map(String::from).zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

#[test]
fn solve_homotopy_on_ex2() {
    let dir = tempfile::tempdir().unwrap();
    let o = moo(
        &["solve", "--problem", "ex2_5d", "--method", "homotopy", "--w", "0.4,0.6", "--x0", "1,2,0,1,1"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&dir.path().join("solve_ex2_5d_homotopy.csv"));
    assert_eq!(r.len(), 1);
    assert!((num(&r[0], "f1") - 2.7363).abs() <= 2e-2, "{:?}", r[0]);
    assert!((num(&r[0], "f2") + 0.4147).abs() <= 2e-2, "{:?}", r[0]);
    assert_eq!(r[0]["feasible"], "true");
    assert!(num(&r[0], "h_evals") > 0.0);
    assert!(dir.path().join("solve_ex2_5d_homotopy_path.csv").exists());
}

#[test]
fn solve_weighted_sum_on_ex1() {
    let dir = tempfile::tempdir().unwrap();
    let o = moo(&["solve", "--problem", "ex1_2d", "--method", "wsm", "--w", "0.5,0.5"], dir.path());
    assert_eq!(code(&o), 0);
    let r = rows(&dir.path().join("solve_ex1_2d_wsm.csv"));
    assert!((num(&r[0], "f1") - 0.75).abs() <= 5e-2 && (num(&r[0], "f2") - 0.85).abs() <= 5e-2);
}

#[test]
fn json_report_and_out_flag() {
    let env_dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = moo(
        &["solve", "--problem", "ex1_2d", "--method", "ecm", "--format", "json", "--out", out.path().to_str().unwrap()],
        env_dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_dir(env_dir.path()).unwrap().next().is_none());
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("solve_ex1_2d_ecm.json")).unwrap()).unwrap();
    assert_eq!(v["method"], "ecm");
    assert_eq!(v["success"], true);
    assert_eq!(v["f"].as_array().unwrap().len(), 2);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 8] = [
        &["solve", "--method", "simplex"],
        &["solve", "--problem", "nope", "--method", "wsm"],
        &["solve", "--method", "wsm", "--w", "0,0"],
        &["solve", "--method", "wsm", "--x0", "1,2"],
        &["front", "--method", "wsm", "--weights-count", "0"],
        &["front", "--method", "lex"],
        &["sample", "--count", "0"],
        &["bogus"],
    ];
    for args in cases {
        let o = moo(args, dir.path());
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn solver_failure_exits_one_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    // g(x0) > 0 rejects the homotopy anchor
    let o = moo(
        &["solve", "--method", "homotopy", "--x0", "-1.3074,-2.8605,-1.0470,0.4103,0.4475"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solve_ex2_5d_homotopy_error.json")).unwrap())
            .unwrap();
    assert_eq!(v["success"], false);
    assert!(v["message"].as_str().unwrap().contains("g"));
}

#[test]
fn ex1_homotopy_front_has_one_distinct_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = moo(&["front", "--problem", "ex1_2d", "--method", "homotopy", "--weights-count", "50"], dir.path());
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("50 runs, 50 kept, 1 distinct"), "{stdout}");
    assert_eq!(rows(&dir.path().join("front_ex1_2d_homotopy.csv")).len(), 50);
    assert_eq!(rows(&dir.path().join("front_ex1_2d_homotopy_runs.csv")).len(), 50);
}

#[test]
fn ecm_front_from_cloud_levels() {
    let dir = tempfile::tempdir().unwrap();
    let o = moo(
        &["front", "--problem", "ex2_5d", "--method", "ecm", "--eps-grid", "6", "--cloud-size", "200"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&dir.path().join("front_ex2_5d_ecm_runs.csv")).len(), 6);
    let front = rows(&dir.path().join("front_ex2_5d_ecm.csv"));
    assert!(!front.is_empty());
    assert!(front.iter().all(|r| r["feasible"] == "true"));
}

#[test]
fn scan_sweep_counts_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let o = moo(&["sample", "--problem", "ex2_5d", "--kind", "scan", "--count", "20000", "--eps", "0.01,0.1,1.0"], dir.path());
    assert_eq!(code(&o), 0);
    let counts: Vec<usize> = ["0.01", "0.1", "1"]
        .iter()
        .map(|e| rows(&dir.path().join(format!("sample_ex2_5d_scan_eps{e}.csv"))).len())
        .collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}

#[test]
fn seeded_outputs_repeat() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["sample", "--problem", "ex1_2d", "--kind", "projection", "--count", "100", "--seed", "3"];
    assert_eq!(code(&moo(&args, a.path())), 0);
    assert_eq!(code(&moo(&[&args[..], &["--parallel"]].concat(), b.path())), 0);
    let file = "sample_ex1_2d_projected.csv";
    assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
}

#[test]
fn bench_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = moo(&["bench", "--problem", "ex2_5d"], dir.path());
    assert_eq!(code(&o), 0);
    let metrics = rows(&dir.path().join("bench_ex2_5d_metrics.csv"));
    let methods: Vec<&str> = metrics.iter().map(|r| r["method"].as_str()).collect();
    assert_eq!(methods, ["homotopy", "wsm", "ecm", "gcm", "lex", "nsga2"]);
    let solutions = rows(&dir.path().join("bench_ex2_5d_solutions.csv"));
    let wsm = solutions.iter().find(|r| r["method"] == "wsm").unwrap();
    assert!((num(wsm, "f1") - 2.7308).abs() <= 2e-2 && (num(wsm, "f2") + 0.4110).abs() <= 2e-2);
}

#[test]
fn check_passes_at_table_precision() {
    let dir = tempfile::tempdir().unwrap();
    let o = moo(&["check"], dir.path());
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 18);
    assert!(!stdout.contains("FAIL"));
    let tight = moo(&["check", "--tol", "1e-9"], dir.path());
    assert_eq!(code(&tight), 1);
    assert!(String::from_utf8_lossy(&tight.stdout).contains("FAIL"));
}

#[test]
fn csv_headers_match_golden() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 7] = [
        &["solve", "--method", "homotopy"],
        &["solve", "--method", "nsga2", "--population", "10", "--generations", "2"],
        &["front", "--method", "wsm", "--weights-count", "3"],
        &["sample", "--count", "10", "--eps", "0.01"],
        &["sample", "--kind", "projection", "--count", "10"],
        &["bench"],
        &["front", "--problem", "ex1_2d", "--method", "homotopy", "--weights-count", "1"],
    ];
    for args in runs {
        let o = moo(args, dir.path());
        // a two-generation GA may end infeasible, which still writes its files
        let ok = if args.contains(&"nsga2") { [0, 1].contains(&code(&o)) } else { code(&o) == 0 };
        assert!(ok, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/ex2_5d_headers.tsv")).unwrap();
    for line in golden.lines().filter(|l| !l.is_empty()) {
        let (file, header) = line.split_once('\t').unwrap();
        assert_eq!(first_line(&dir.path().join(file)), header, "{file}");
    }
    assert_eq!(first_line(&dir.path().join("front_ex1_2d_homotopy.csv")), "method,params,x1,x2,f1,f2,g1,h1,kkt_residual,feasible");
}
