use std::path::Path;
use std::process::{Command, Output};

fn cxhyp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cxhyp"))
        .args(args)
        .env("CXHYP_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn normal_form_reports_length() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("g.json");
    // lambda = 2: a = 5/4, b = 3/4
    std::fs::write(&m, r#"{"n": 1, "entries": [[1.25, 0.75], [0.75, 1.25]]}"#).unwrap();
    let out = dir.path().join("dec.json");
    let r = cxhyp(&["normal-form", m.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let doc = json(&out);
    let length = doc["result"]["length"].as_f64().unwrap();
    assert!((length - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(doc["version"], cxhyp::VERSION);
}

#[test]
fn normal_form_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("id.json");
    std::fs::write(&id, r#"{"entries": [[1, 0], [0, 1]]}"#).unwrap();
    let r = cxhyp(&["normal-form", id.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("not hyperbolic"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(cxhyp(&["normal-form", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn random_hyperbolic_element_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("g.json");
    let r = cxhyp(&["random-element", "--n", "2", "--seed", "9", "--lambda", "3", "--out", m.to_str().unwrap()]);
    assert!(r.status.success());
    let r = cxhyp(&["normal-form", m.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!((doc["result"]["lambda"].as_f64().unwrap() - 3.0).abs() < 1e-8);
}

#[test]
fn sweep_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "sweep".to_string(),
            "--n=1".into(),
            "--lambda=2".into(),
            "--k-min=50".into(),
            "--k-max=400".into(),
            "--geometric=2".into(),
            format!("--out={}", p.display()),
        ]
    };
    for p in [&a, &b] {
        let owned = args(p);
        let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
        assert!(cxhyp(&refs).status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(!text.contains('\r'));
    assert!(text.starts_with(&format!("# cxhyp {}\n", cxhyp::VERSION)));

    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,k,lambda,j2,asymptote,theorem_value,ratio,residual");
    let ks: Vec<&str> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(ks, ["50", "100", "200", "400"]);
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[6] - 1.0).abs() < 0.02, "ratio {}", last[6]);
}

#[test]
fn sweep_rejects_empty_range() {
    let r = cxhyp(&["sweep", "--n", "1", "--lambda", "2", "--k-min", "10", "--k-max", "5"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn sweep_json_embeds_config() {
    let r = cxhyp(&["sweep", "--n", "2", "--lambda", "1.5", "--k-min", "10", "--k-max", "12", "--format", "json"]);
    assert!(r.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(doc["config"]["k_max"], 12);
    assert_eq!(doc["result"].as_array().unwrap().len(), 3);
}

#[test]
fn series_cyclic_converges() {
    let r = cxhyp(&["series", "--n", "1", "--k", "40", "--lambda", "2", "--trunc", "6", "--z", "0.1,-0.2"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(doc["result"]["converged"], true);
}

#[test]
fn series_identity_only() {
    let r = cxhyp(&["series", "--n", "1", "--k", "3", "--trunc", "0"]);
    assert!(r.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(doc["result"]["terms"], 1);
    // c(1,3) K(0,0)^3 = 5 / pi^3
    let re = doc["result"]["value"][0].as_f64().unwrap();
    assert!((re - 5.0 / std::f64::consts::PI.powi(3)).abs() < 1e-14);
}

#[test]
fn series_rejects_k_one() {
    let r = cxhyp(&["series", "--n", "1", "--k", "1"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("k >= 2 required"));
}

#[test]
fn series_flags_non_convergence() {
    // a word ball of radius 1 leaves a large tail at small k
    let dir = tempfile::tempdir().unwrap();
    let gens = dir.path().join("oct.json");
    assert!(cxhyp(&["octagon", "--out", gens.to_str().unwrap()]).status.success());
    let r = cxhyp(&["series", "--n", "1", "--k", "2", "--gens", gens.to_str().unwrap(), "--L", "1"]);
    assert_eq!(r.status.code(), Some(3));
    let doc: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(doc["result"]["converged"], false);
}

#[test]
fn enum_writes_words() {
    let dir = tempfile::tempdir().unwrap();
    let gens = dir.path().join("oct.json");
    let ball = dir.path().join("ball.json");
    assert!(cxhyp(&["octagon", "--out", gens.to_str().unwrap()]).status.success());
    let r = cxhyp(&["enum", "--gens", gens.to_str().unwrap(), "--L", "2", "--out", ball.to_str().unwrap()]);
    assert!(r.status.success());
    let doc = json(&ball);
    let elements = doc["result"]["elements"].as_array().unwrap();
    // free reduction of 8 letters: 1 + 8 + 8 * 7, no relations of length <= 2
    assert_eq!(elements.len(), 65);
    assert_eq!(elements[0]["word"].as_array().unwrap().len(), 0);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let r = Command::new(env!("CARGO_BIN_EXE_cxhyp"))
        .args(["octagon"])
        .env("CXHYP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));
}
