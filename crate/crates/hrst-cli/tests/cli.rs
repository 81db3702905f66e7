//! End-to-end tests of the `hrst` binary: file outputs, determinism, and the
//! exit-code contract (0 success, 2 usage, 3 resource cap, 4 verification).

use std::path::Path;
use std::process::{Command, Output};

fn hrst(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrst"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn simulate_writes_cloud_and_tree_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--dim",
        "1",
        "--lambda",
        "1",
        "--radius",
        "6",
        "--seed",
        "7",
        "--out",
        "cloud.json",
        "--build",
        "tree.json",
    ];
    let out = hrst(&args, dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cloud1 = std::fs::read(dir.path().join("cloud.json")).unwrap();
    let tree1 = std::fs::read(dir.path().join("tree.json")).unwrap();
    let out = hrst(&args, dir.path());
    assert!(out.status.success());
    assert_eq!(
        cloud1,
        std::fs::read(dir.path().join("cloud.json")).unwrap()
    );
    assert_eq!(tree1, std::fs::read(dir.path().join("tree.json")).unwrap());

    // point count lies in the Poisson 99% interval around cosh 6 − 1
    let parsed: serde_json::Value = serde_json::from_slice(&cloud1).unwrap();
    let n = parsed["points"].as_array().unwrap().len() as f64;
    let mean = 6.0f64.cosh() - 1.0;
    let half = 2.576 * mean.sqrt();
    assert!(
        (mean - half..=mean + half).contains(&n),
        "count {n} outside 99% interval around {mean}"
    );
}

#[test]
fn simulate_lambda_zero_gives_valid_empty_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let out = hrst(
        &[
            "simulate",
            "--lambda",
            "0",
            "--radius",
            "3",
            "--out",
            "empty.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let parsed: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("empty.json")).unwrap()).unwrap();
    assert_eq!(parsed["points"].as_array().unwrap().len(), 0);
}

#[test]
fn render_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    hrst(
        &[
            "simulate", "--dim", "1", "--lambda", "2", "--radius", "5", "--seed", "3", "--out",
            "c.json", "--build", "t.json",
        ],
        dir.path(),
    );
    let args = ["render", "--tree", "t.json", "--out", "r.svg"];
    assert!(hrst(&args, dir.path()).status.success());
    let svg1 = std::fs::read(dir.path().join("r.svg")).unwrap();
    assert!(hrst(&args, dir.path()).status.success());
    assert_eq!(svg1, std::fs::read(dir.path().join("r.svg")).unwrap());
    let text = String::from_utf8(svg1).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.contains("<polyline"));

    // arc style differs from geodesic style
    let out = hrst(
        &[
            "render", "--tree", "t.json", "--out", "r2.svg", "--style", "arc",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert_ne!(
        std::fs::read(dir.path().join("r.svg")).unwrap(),
        std::fs::read(dir.path().join("r2.svg")).unwrap()
    );
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    // unknown experiment kind → 2
    let out = hrst(&["experiment", "nonsense", "--reps", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // usage error from clap → 2
    let out = hrst(&["simulate", "--radius"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // sampling cap → 3
    let out = hrst(
        &[
            "simulate", "--lambda", "1", "--radius", "25", "--out", "x.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    // rendering a d=2 tree → 2 (unsupported input)
    hrst(
        &[
            "simulate", "--dim", "2", "--lambda", "0.5", "--radius", "3", "--seed", "1", "--out",
            "c2.json", "--build", "t2.json",
        ],
        dir.path(),
    );
    let out = hrst(
        &["render", "--tree", "t2.json", "--out", "r.svg"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_writes_identical_reports_for_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "experiment",
        "levelcount",
        "--reps",
        "5",
        "--seed",
        "11",
        "--horizon",
        "6.5",
        "--margin",
        "1.5",
        "--levels",
        "2,3",
        "--out",
        "rep.json",
        "--csv",
        "rep.csv",
    ];
    assert!(hrst(&args, dir.path()).status.success());
    let json1 = std::fs::read(dir.path().join("rep.json")).unwrap();
    let csv1 = std::fs::read(dir.path().join("rep.csv")).unwrap();
    assert!(hrst(&args, dir.path()).status.success());
    assert_eq!(json1, std::fs::read(dir.path().join("rep.json")).unwrap());
    assert_eq!(csv1, std::fs::read(dir.path().join("rep.csv")).unwrap());
    let text = String::from_utf8(csv1).unwrap();
    assert!(text.starts_with("kind,d,lambda,horizon,margin,replications,master_seed,level"));
    assert_eq!(text.lines().count(), 3, "header + one row per level");
}

#[test]
fn sweep_merges_config_distinguished_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = hrst(
        &[
            "sweep",
            "levelcount",
            "--lambdas",
            "0.5,1",
            "--horizons",
            "6.5",
            "--margin",
            "1.5",
            "--levels",
            "2,3",
            "--reps",
            "3",
            "--seed",
            "5",
            "--out",
            "sweep.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5, "header + 2 lambdas x 2 levels");
    assert!(lines[1].starts_with("levelcount,1,0.5,"));
    assert!(lines[3].starts_with("levelcount,1,1,"));
}

#[test]
fn dense_rendering_at_lambda_30() {
    // visual-density parity run: λ=30 inside B(6) is a few thousand points
    let dir = tempfile::tempdir().unwrap();
    let out = hrst(
        &[
            "simulate",
            "--dim",
            "1",
            "--lambda",
            "30",
            "--radius",
            "6",
            "--seed",
            "30",
            "--out",
            "dense.json",
            "--build",
            "dense_tree.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = hrst(
        &[
            "render",
            "--tree",
            "dense_tree.json",
            "--out",
            "dense.svg",
            "--stroke-width",
            "0.4",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("dense.svg")).unwrap();
    let edges = svg.matches("<polyline").count();
    assert!(
        (4000..9000).contains(&edges),
        "expected a dense Fig-1-scale tree, got {edges} edges"
    );
    assert!(svg.contains("hsl("), "subtree coloring present");
}

#[test]
fn hrst_jobs_env_controls_the_pool_without_changing_output() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "experiment",
        "levelcount",
        "--reps",
        "4",
        "--seed",
        "2",
        "--horizon",
        "6.5",
        "--margin",
        "1.5",
        "--levels",
        "2,3",
        "--out",
        "r.json",
    ];
    let out = Command::new(env!("CARGO_BIN_EXE_hrst"))
        .args(args)
        .env("HRST_JOBS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let single = std::fs::read(dir.path().join("r.json")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hrst"))
        .args(args)
        .env("HRST_JOBS", "4")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(single, std::fs::read(dir.path().join("r.json")).unwrap());
}
