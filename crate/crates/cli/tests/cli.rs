use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsequad")).args(args).current_dir(dir).env("RUST_BACKTRACE", "0").output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = run(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn datagen(dir: &Path) {
    ok(&["datagen", "--n", "30", "--p", "40", "--rho", "0.5", "--s", "6", "--seed", "3", "--out", "d"], dir);
}

#[test]
fn datagen_writes_dataset_directory() {
    let tmp = tempfile::tempdir().unwrap();
    datagen(tmp.path());
    for f in ["train.csv", "test.csv", "beta_star.csv", "meta.json"] {
        assert!(tmp.path().join("d").join(f).exists(), "{f}");
    }
    let train = std::fs::read_to_string(tmp.path().join("d/train.csv")).unwrap();
    assert_eq!(train.lines().count(), 31);
    assert!(train.starts_with("y,x1,"));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("d/meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 3);
}

#[test]
fn datagen_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    datagen(a.path());
    datagen(b.path());
    let read = |d: &Path| std::fs::read(d.join("d/train.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn solve_reports_converged_solution_with_certificates() {
    let tmp = tempfile::tempdir().unwrap();
    datagen(tmp.path());
    ok(
        &["solve", "--input", "d/train.csv", "--lambda1", "5", "--lambda2", "1", "--tau", "1e-10", "--certify", "final", "--output", "s.json"],
        tmp.path(),
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(v["status"], "converged");
    assert_eq!(v["beta"].as_array().unwrap().len(), 40);
    assert!(v["kkt_residual"].as_f64().unwrap() <= 1e-10);
    let user = v["objective"]["user"].as_f64().unwrap();
    let minimax = v["objective"]["minimax"].as_f64().unwrap();
    // minimax = 2·user + λη²p with λ = 1, η = 5
    assert!((minimax - (2.0 * user + 25.0 * 40.0)).abs() <= 1e-9 * minimax);
    let certs = v["certificates"].as_array().unwrap();
    let methods: Vec<_> = certs.iter().map(|c| c["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["wcq-main", "wcq-tight", "fenchel"]);
    for c in certs {
        assert!(c["lower_bound"].as_f64().unwrap() <= minimax * (1.0 + 1e-12));
    }
}

#[test]
fn solve_with_baseline_matches_quadratic() {
    let tmp = tempfile::tempdir().unwrap();
    datagen(tmp.path());
    let beta = |method: &str| -> Vec<f64> {
        let out = ok(&["solve", "--input", "d/train.csv", "--lambda1", "5", "--lambda2", "1", "--tau", "1e-9", "--method", method], tmp.path());
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        v["beta"].as_array().unwrap().iter().map(|b| b.as_f64().unwrap()).collect()
    };
    let q = beta("quadratic");
    let c = beta("coordinate");
    let max = q.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(max < 1e-6, "max difference {max}");
}

#[test]
fn group_solve_needs_groups() {
    let tmp = tempfile::tempdir().unwrap();
    datagen(tmp.path());
    let out = run(&["solve", "--input", "d/train.csv", "--lambda1", "5", "--lambda2", "1", "--penalty", "grpinf"], tmp.path());
    assert!(!out.status.success());
    let groups: Vec<Vec<usize>> = (0..10).map(|k| (4 * k + 1..=4 * k + 4).collect()).collect();
    std::fs::write(tmp.path().join("g.json"), serde_json::to_string(&groups).unwrap()).unwrap();
    let out = ok(
        &["solve", "--input", "d/train.csv", "--lambda1", "5", "--lambda2", "1", "--penalty", "grpinf", "--groups", "g.json", "--tau", "1e-10"],
        tmp.path(),
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["status"], "converged");
}

#[test]
fn path_writes_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    datagen(tmp.path());
    ok(&["path", "--input", "d/train.csv", "--lambda1-grid", "auto:4", "--lambda2-grid", "0.5,2", "--output-csv", "p.csv"], tmp.path());
    let text = std::fs::read_to_string(tmp.path().join("p.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda1,lambda2,objective,n_active,kkt_residual,n_outer,wall_time_s");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    // the first lambda1 of each row is lambda1_max, where the solution is null
    assert_eq!(rows[0][3], "0");
    assert_eq!(rows[4][3], "0");
}

#[test]
fn bench_custom_writes_records() {
    let tmp = tempfile::tempdir().unwrap();
    ok(
        &[
            "bench", "--scenario", "custom", "--n", "20", "--p", "30", "--s", "6", "--reps", "2", "--methods", "quadratic,proximal",
            "--lambda1-grid", "auto:3", "--lambda2-grid", "1", "--out", "r.csv",
        ],
        tmp.path(),
    );
    let text = std::fs::read_to_string(tmp.path().join("r.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("method,lambda1,lambda2"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 3);
}

#[test]
fn bad_certify_value_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    datagen(tmp.path());
    let out = run(&["solve", "--input", "d/train.csv", "--lambda1", "5", "--lambda2", "1", "--certify", "every-k:0"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("every-k"));
}
