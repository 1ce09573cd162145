use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str = "lambda,sup_norm,h1_norm,lq_norm_eu,mu1,converged,monotone_iters";

fn gradquad(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradquad"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn slab_config(lambda: f64, branch: &str) -> String {
    format!(
        r#"{{
  "problem": {{"domain": "interval", "dimension": 1, "coefficient": {{"kind": "constant", "b": 0}},
              "nonlinearity": {{"id": "exp", "params": {{"beta": 1}}}}, "lambda": {lambda}}},
  "grid": {{"M": 1024, "R": 0.5}}{branch}
}}"#
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn zero_lambda_gives_zero_solution() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &slab_config(0.0, ""));
    let o = gradquad(&["solve", "--config", &cfg, "--out", "out", "--grid-m", "64"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/solve.json")).unwrap()).unwrap();
    assert_eq!(doc["solution"]["status"], "converged");
    let values = doc["solution"]["values"].as_array().unwrap();
    assert_eq!(values.len(), 65);
    assert!(values.iter().all(|v| v.as_f64() == Some(0.0)));
}

#[test]
fn above_the_fold_diverges() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &slab_config(4.0, ""));
    let o = gradquad(&["solve", "--config", &cfg], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("status=diverged"));
}

#[test]
fn newton_failure_exit_code() {
    let dir = TempDir::new().unwrap();
    // One Newton iteration without damping cannot meet the tolerance for the
    // nonlinear inner problem with b = 5.
    let cfg = r#"{
  "problem": {"domain": "ball", "dimension": 2, "coefficient": {"kind": "constant", "b": 5},
              "nonlinearity": {"id": "exp", "params": {"beta": 1}}, "lambda": 0.5},
  "grid": {"M": 64, "R": 1},
  "solve": {"newton_max": 1, "damping": {"kind": "none"}}
}"#;
    let cfg = write(dir.path(), "c.json", cfg);
    let o = gradquad(&["solve", "--config", &cfg], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn config_errors_exit_64() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("malformed.json", "{\"problem\": {".to_string()),
        ("unknown.json", slab_config(1.0, ",\n  \"extra\": 1")),
        (
            "typo.json",
            slab_config(1.0, "").replace("\"beta\": 1", "\"bta\": 1"),
        ),
        ("coarse.json", slab_config(1.0, "").replace("\"M\": 1024", "\"M\": 4")),
        ("empty_list.json", slab_config(1.0, ",\n  \"branch\": {\"lambda_list\": []}")),
    ];
    for (name, text) in cases {
        let cfg = write(dir.path(), name, &text);
        let cmd = if name == "empty_list.json" { "branch" } else { "solve" };
        let o = gradquad(&[cmd, "--config", &cfg], dir.path());
        assert_eq!(code(&o), 64, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("configuration error"), "{name}");
    }
    let o = gradquad(&["solve", "--config", "missing.json"], dir.path());
    assert_eq!(code(&o), 64);
    let o = gradquad(&["solve"], dir.path());
    assert_eq!(code(&o), 64);
}

#[test]
fn unknown_key_message_names_the_path() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &slab_config(1.0, "").replace("\"R\"", "\"radius\""));
    let o = gradquad(&["solve", "--config", &cfg], dir.path());
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.radius"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gradquad"))
        .arg("thresholds")
        .env("GRADQUAD_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
}

#[test]
fn slab_branch_dataset() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &slab_config(0.0, ",\n  \"branch\": {\"auto\": true, \"lambda_star_tol\": 1e-3}"),
    );
    let o = gradquad(&["branch", "--config", &cfg, "--out", "a"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("a/branch.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(HEADER));
    assert!(!csv.contains('\r'));
    assert!(csv.lines().count() > 10);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/branch.json")).unwrap()).unwrap();
    let lo = doc["bracket"]["lambda_lo"].as_f64().unwrap();
    let hi = doc["bracket"]["lambda_hi"].as_f64().unwrap();
    assert!(hi - lo <= 1e-3 && lo <= 3.5138 && 3.5138 <= hi, "[{lo}, {hi}]");

    // A second run, with a different worker count, is byte-identical.
    let o = Command::new(env!("CARGO_BIN_EXE_gradquad"))
        .args(["branch", "--config", &cfg, "--out", "b"])
        .env("GRADQUAD_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    for file in ["branch.csv", "branch.json"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
}

#[test]
fn cold_branch_with_explicit_list() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &slab_config(
            0.0,
            ",\n  \"branch\": {\"lambda_list\": [0.5, 1.0, 3.0, 3.6], \"warm_start\": false},\n  \"outputs\": {\"csv_path\": \"x/data.csv\", \"precision\": 4}",
        ),
    );
    let o = gradquad(&["branch", "--config", &cfg, "--grid-m", "256"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("x/data.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("5.0000e-1,"));
    assert!(rows[2].contains(",true,"));
    assert!(rows[3].contains(",false,"));
}

#[test]
fn thresholds_table() {
    let dir = TempDir::new().unwrap();
    let o = gradquad(&["thresholds", "--out", "t"], dir.path());
    assert_eq!(code(&o), 0);
    let table = String::from_utf8_lossy(&o.stdout);
    let pos = table.lines().find(|l| l.contains("b=1 beta=1")).unwrap();
    assert!(pos.split_whitespace().any(|w| w == "15"), "{pos}");
    let neg = table.lines().find(|l| l.contains("b=-1 beta=1")).unwrap();
    assert!(neg.contains("not applicable"));
    assert!(table.lines().any(|l| l.starts_with("constant_limit") && l.contains("OK")));
    assert!(dir.path().join("t/thresholds.json").exists());

    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"thresholds": [{"regime": "general_b", "b_lo": 0.5, "b_hi": 1.0, "delta": 0.44721, "eta": 0.89442}]}"#,
    );
    let o = gradquad(&["thresholds", "--config", &cfg], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("oscillation_condition_violated"));
    let cfg = write(dir.path(), "d.json", r#"{"thresholds": [{"regime": "constant_b_pos", "b": 1}]}"#);
    assert_eq!(code(&gradquad(&["thresholds", "--config", &cfg], dir.path())), 64);
}

#[test]
fn stability_certificate() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.json", &slab_config(1.0, ""));
    let o = gradquad(&["stability", "--config", &cfg, "--grid-m", "128"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict=stable"));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stability.json")).unwrap()).unwrap();
    assert!(doc["stability"]["certificate"]["mu1"].as_f64().unwrap() > 0.0);
}

#[test]
fn transform_check() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{
  "problem": {"domain": "ball", "dimension": 2, "coefficient": {"kind": "constant", "b": 1},
              "nonlinearity": {"id": "exp", "params": {"beta": 1}}, "lambda": 0.5},
  "grid": {"M": 256, "R": 1}
}"#;
    let cfg = write(dir.path(), "c.json", cfg);
    let o = gradquad(&["check-transform", "--config", &cfg], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("transform.json")).unwrap()).unwrap();
    assert!(doc["sup_diff"].as_f64().unwrap() < 1e-6);

    let zero_b = std::fs::read_to_string(dir.path().join(&cfg)).unwrap().replace("\"b\": 1", "\"b\": 0");
    let cfg = write(dir.path(), "z.json", &zero_b);
    assert_eq!(code(&gradquad(&["check-transform", "--config", &cfg], dir.path())), 64);
}
