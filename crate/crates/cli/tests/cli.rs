use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dpcolor::{DpCover, Graph};

fn dpcolor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpcolor")).args(args).output().unwrap()
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generated_girth5_graph_has_girth_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "g.txt");
    let o = dpcolor(&["generate", "--kind", "girth5-regular", "--n", "10", "--d", "3", "--seed", "7", "--out", s(&out)]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("sha256:"));
    let g = Graph::parse_edge_list(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(g.is_regular(3));
    assert!(g.girth().is_none_or(|x| x >= 5));
}

#[test]
fn rho_zero_gives_no_cover_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "c.json");
    let o = dpcolor(&["generate", "--kind", "dp-cover", "--n", "12", "--d", "3", "--ell", "4", "--rho", "0", "--seed", "1", "--out", s(&out)]);
    assert!(o.status.success());
    let c = DpCover::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(c.cover().edge_count(), 0);
    assert_eq!(c.vertex_count(), 12);
}

#[test]
fn spec_file_and_flags_agree() {
    let dir = tempfile::tempdir().unwrap();
    let spec = path(dir.path(), "spec.json");
    std::fs::write(&spec, r#"{"kind": "regular", "n": 20, "d": 4, "seed": 3}"#).unwrap();
    let (a, b) = (path(dir.path(), "a.txt"), path(dir.path(), "b.txt"));
    assert!(dpcolor(&["generate", "--spec", s(&spec), "--out", s(&a)]).status.success());
    assert!(dpcolor(&["generate", "--kind", "regular", "--n", "20", "--d", "4", "--seed", "3", "--out", s(&b)]).status.success());
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dpcolor(&["generate", "--kind", "regular", "--n", "8", "--d", "3", "--out", s(&path(dir.path(), "x"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schedule_ends_with_i_star_line() {
    let o = dpcolor(&["schedule", "--d", "1000000", "--epsilon", "0.1", "--t", "2"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("i,ell,d,keep,"));
    assert!(text.lines().last().unwrap().starts_with("# i_star="));
    assert_eq!(dpcolor(&["schedule", "--d", "1000000", "--epsilon", "0.1", "--t", "2"]).stdout, text.as_bytes());
}

#[test]
fn epsilon_out_of_range_exits_2() {
    let o = dpcolor(&["schedule", "--d", "1000", "--epsilon", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn edgeless_cover_colors() {
    let dir = tempfile::tempdir().unwrap();
    let cover = path(dir.path(), "c.json");
    let c = DpCover::from_list_assignment(&Graph::empty(4), &vec![vec![0, 1]; 4]).unwrap();
    std::fs::write(&cover, c.to_json()).unwrap();
    let out = path(dir.path(), "r.json");
    let o = dpcolor(&["color", s(&cover), "--seed", "1", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["status"], "proper");
    assert_eq!(r["result"]["coloring"].as_array().unwrap().len(), 4);
}

#[test]
fn infeasible_instance_fails_with_telemetry_file() {
    let dir = tempfile::tempdir().unwrap();
    let cover = path(dir.path(), "c.json");
    let c = DpCover::new(Graph::from_edges(2, [(0, 1)]).unwrap(), Graph::from_edges(2, [(0, 1)]).unwrap(), vec![vec![0], vec![1]])
        .unwrap();
    std::fs::write(&cover, c.to_json()).unwrap();
    let out = path(dir.path(), "r.json");
    let o = dpcolor(&[
        "color", s(&cover), "--seed", "1", "--max-retries", "0", "--max-resamples", "0", "--out", s(&out),
    ]);
    assert_ne!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["status"], "failed");
    assert!(r["error"].is_string());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cover = path(dir.path(), "c.json");
    assert!(dpcolor(&["generate", "--kind", "dp-cover", "--n", "30", "--d", "3", "--ell", "30", "--seed", "2", "--out", s(&cover)])
        .status
        .success());
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, format!(r#"{{"seed": 5, "eta": 0.3, "cover": {:?}}}"#, s(&cover))).unwrap();
    let out = path(dir.path(), "r.json");
    let o = dpcolor(&["--config", s(&cfg), "color", "--eta", "0.4", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["seed"], 5);
    assert_eq!(r["config"]["eta"]["fixed"], 0.4);
}

fn stats_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn stats_single_trial_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cover = path(dir.path(), "c.json");
    assert!(dpcolor(&["generate", "--kind", "dp-cover", "--n", "10", "--d", "3", "--ell", "4", "--seed", "4", "--out", s(&cover)])
        .status
        .success());
    let o = dpcolor(&["stats", s(&cover), "--seed", "1", "--trials", "1"]);
    assert!(o.status.success());
    let rows = stats_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 10 + 40 + 1);
    assert!(rows.iter().all(|r| r[2] == "1"));
}

#[test]
fn stats_on_regular_instance_and_anchor_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cover = path(dir.path(), "c.json");
    assert!(dpcolor(&["generate", "--kind", "dp-cover", "--n", "40", "--d", "5", "--ell", "6", "--seed", "8", "--out", s(&cover)])
        .status
        .success());
    let (csv, summary) = (path(dir.path(), "s.csv"), path(dir.path(), "s.json"));
    let o = dpcolor(&[
        "stats", s(&cover), "--seed", "2", "--trials", "4000", "--eta", "0.3", "--anchor", "all", "--out", s(&csv),
        "--summary", s(&summary),
    ]);
    assert!(o.status.success());
    let rows = stats_rows(&std::fs::read_to_string(csv).unwrap());
    let summary_row = rows.iter().find(|r| r[0] == "summary").unwrap();
    assert_eq!(summary_row[7], "pass");
    let anchors: Vec<&Vec<String>> = rows.iter().filter(|r| r[0] == "anchor").collect();
    assert_eq!(anchors.len(), 240);
    for r in anchors {
        let f = |i: usize| r[i].parse::<f64>().unwrap();
        assert!((f(3) - (f(8) - f(9))).abs() < 1e-9, "{r:?}");
        assert_eq!(r[10], "0");
    }
    let sj: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert_eq!(sj["kept_within_3se"], true);
}
