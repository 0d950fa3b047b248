use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tugwar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tugwar"))
        .args(args)
        .env_remove("TUGWAR_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path3(dir: &Path) -> String {
    write(dir, "path3_loops.txt", "vertices 3 loops 1\n0 1\n1 2\n")
        .display()
        .to_string()
}

#[test]
fn solve_linear_graph() {
    let dir = TempDir::new().unwrap();
    let g = path3(dir.path());
    let out = tugwar(&["solve", "--graph", &g, "--f", "-1,2,-1", "--tol", "1e-9"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert!((v["c"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!(v["residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["u"].as_array().unwrap().len(), 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("\"tol\":1e-9"),
        "config is logged: {stderr}"
    );
}

#[test]
fn cf_complete_graph() {
    let dir = TempDir::new().unwrap();
    let g = write(
        dir.path(),
        "k3_loops.txt",
        "vertices 3 loops 1\n0 1\n0 2\n1 2\n",
    );
    let out = tugwar(&[
        "cf",
        "--graph",
        g.to_str().unwrap(),
        "--f",
        "0,1,2",
        "--n",
        "10000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["lower"].as_f64().unwrap() <= 1.0 && 1.0 <= v["upper"].as_f64().unwrap());
    assert_eq!(v["n"], 10000);
}

#[test]
fn function_from_csv_file() {
    let dir = TempDir::new().unwrap();
    let g = path3(dir.path());
    let f = write(dir.path(), "f.csv", "vertex_index,value\n0,-1\n1,2\n2,-1\n");
    let out = tugwar(&[
        "solve",
        "--graph",
        &g,
        "--f",
        f.to_str().unwrap(),
        "--method",
        "fixed-point",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["c"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn malformed_graph_exits_one_with_position() {
    let dir = TempDir::new().unwrap();
    let g = write(dir.path(), "bad.txt", "vertices 3 loops 1\n0 1\n1 two\n");
    let out = tugwar(&["solve", "--graph", g.to_str().unwrap(), "--f", "1,2,3"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":3:3:"), "{stderr}");
}

#[test]
fn dimension_mismatch_and_unknown_method_exit_one() {
    let dir = TempDir::new().unwrap();
    let g = path3(dir.path());
    assert_eq!(
        tugwar(&["solve", "--graph", &g, "--f", "1,2"])
            .status
            .code(),
        Some(1)
    );
    let out = tugwar(&["solve", "--graph", &g, "--f", "1,2,3", "--method", "newton"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown solver 'newton'"));
}

#[test]
fn unmet_residual_exits_two_with_artifact() {
    let dir = TempDir::new().unwrap();
    let g = write(
        dir.path(),
        "p5.txt",
        "vertices 5 loops 1\n0 1\n1 2\n2 3\n3 4\n",
    );
    let out_path = dir.path().join("best.json");
    let out = tugwar(&[
        "solve",
        "--graph",
        g.to_str().unwrap(),
        "--f",
        "0,3,-1,2,5",
        "--method",
        "fixed-point",
        "--tol",
        "1e-14",
        "--n-max",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(v["residual"].as_f64().unwrap() > 1e-14);
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let g = path3(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_tugwar"))
        .args([
            "iterate", "--graph", &g, "--f", "-1,2,-1", "--n", "3", "--format", "csv",
        ])
        .env("TUGWAR_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = fs::read_to_string(dir.path().join("iterate.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "n,max_u,min_u,M_n,m_n");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[3], "2,2.5,-0.5,0.5,0.5");
}

#[test]
fn reruns_are_identical() {
    let dir = TempDir::new().unwrap();
    let g = path3(dir.path());
    let args = [
        "simulate",
        "--graph",
        &g,
        "--f",
        "-1,2,-1",
        "--horizon",
        "4",
        "--start",
        "1",
        "--max",
        "uniform-random",
        "--min",
        "greedy",
        "--trials",
        "500",
        "--seed",
        "11",
    ];
    let a = tugwar(&args);
    let b = tugwar(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["trials"], 500);
    assert_eq!(v["seed"], 11);
}

#[test]
fn transcripts_are_dumped() {
    let dir = TempDir::new().unwrap();
    let g = path3(dir.path());
    let t = dir.path().join("t.csv");
    let out = tugwar(&[
        "simulate",
        "--graph",
        &g,
        "--f",
        "-1,2,-1",
        "--horizon",
        "2",
        "--start",
        "1",
        "--trials",
        "3",
        "--transcripts",
        t.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(&t).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "trial,step,position,flip");
    assert_eq!(lines.len(), 1 + 3 * 3);
    assert!(lines[1].starts_with("0,0,1,"));
    assert!(lines[3].ends_with(','));
}

#[test]
fn hitting_time_run() {
    let dir = TempDir::new().unwrap();
    let g = write(
        dir.path(),
        "c6.txt",
        "vertices 6 loops 0\n0 1\n1 2\n2 3\n3 4\n4 5\n5 0\n",
    );
    let out = tugwar(&[
        "simulate",
        "--graph",
        g.to_str().unwrap(),
        "--hitting",
        "--target",
        "0",
        "--start",
        "3",
        "--max",
        "uniform-random",
        "--trials",
        "2000",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["diam_squared"], 9.0);
    assert_eq!(v["cap_hits"], 0);
}

#[test]
fn point_cloud_input() {
    let dir = TempDir::new().unwrap();
    let c = write(dir.path(), "cloud.csv", "epsilon,1.0\n0\n0.5\n1\n");
    let out = tugwar(&[
        "cf",
        "--cloud",
        c.to_str().unwrap(),
        "--f",
        "1,1,-1",
        "--tol",
        "1e-3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["lower"].as_f64().unwrap() <= 0.0 && 0.0 <= v["upper"].as_f64().unwrap());
}

#[test]
fn continuum_solve_writes_plot_data() {
    let dir = TempDir::new().unwrap();
    let d = write(
        dir.path(),
        "domain.json",
        r#"{"shape":"interval","params":{"a":0,"b":1},"mesh":0.05,"sampler":{"kind":"uniform-grid"}}"#,
    );
    let out = tugwar(&[
        "continuum",
        "--domain",
        d.to_str().unwrap(),
        "--payoff",
        "x",
        "--eps",
        "0.1",
        "--solve",
        "--format",
        "csv",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "x,u");
    assert_eq!(lines.len(), 22);
    assert!(lines[1].starts_with("0,0"));
}

#[test]
fn ladder_csv() {
    let dir = TempDir::new().unwrap();
    let d = write(
        dir.path(),
        "domain.json",
        r#"{"shape":"interval","params":{"a":0,"b":1},"mesh":0.025,"sampler":{"kind":"uniform-grid"}}"#,
    );
    let out = tugwar(&[
        "ladder",
        "--domain",
        d.to_str().unwrap(),
        "--payoff",
        "x",
        "--base-eps",
        "0.2",
        "--depth",
        "2",
        "--width",
        "0.01",
        "--format",
        "csv",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("eps,cf_lower,cf_upper,certificate\n"));
    assert_eq!(text.lines().count(), 4);
    let too_deep = tugwar(&[
        "ladder",
        "--domain",
        d.to_str().unwrap(),
        "--payoff",
        "x",
        "--base-eps",
        "0.2",
        "--depth",
        "5",
    ]);
    assert_eq!(too_deep.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&too_deep.stderr).contains("deepest feasible depth is Some(2)"));
}

#[test]
fn single_example_row() {
    let out = tugwar(&["examples", "--name", "bowties-residuals", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bowties-residuals,0,0,"));
    assert_eq!(
        tugwar(&["examples", "--name", "no-such-example"])
            .status
            .code(),
        Some(1)
    );
}
