use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn orthant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthant")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_lines(s: &str) -> Vec<Value> {
    s.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn diagonal_direction_is_exact_without_sampling() {
    let o = orthant(&["estimate-gamma", "--u", "2,2", "--p", "0.7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = json_lines(&stdout(&o));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["gamma_exact"], "-2");
    assert_eq!(rows[0]["trials_consumed"], 0);
}

#[test]
fn all_plus_environment_matches_the_closed_form() {
    let o = orthant(&["estimate-gamma", "--p", "1", "--u", "3,-1", "--u", "-2,5", "--n-ladder", "4,8", "--trials", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = json_lines(&stdout(&o));
    let exact: Vec<&str> = rows.iter().map(|r| r["gamma_exact"].as_str().unwrap()).collect();
    assert_eq!(exact, ["1", "2"]);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let args = ["estimate-gamma", "--p", "0.9", "--u", "1,-1", "--n-ladder", "8,16", "--trials", "40", "--seed-base", "7"];
    let a = orthant(&[&args[..], &["--threads", "1"]].concat());
    let b = orthant(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(a.status.code(), b.status.code());
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

fn shape_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn all_plus_shape_has_the_simplex_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let csv2 = dir.path().join("d2.csv");
    let svg2 = dir.path().join("d2.svg");
    let o = orthant(&["shape", "--p", "1", "--d", "2", "--csv", csv2.to_str().unwrap(), "--svg", svg2.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let exact: BTreeSet<(String, String)> = shape_rows(&fs::read_to_string(&csv2).unwrap()).iter().map(|r| (r[3].clone(), r[4].clone())).collect();
    assert!(exact.contains(&("1".into(), "0".into())) && exact.contains(&("0".into(), "1".into())), "{exact:?}");
    let svg = fs::read_to_string(&svg2).unwrap();
    assert!(svg.contains("version=\"1.1\"") && svg.contains("<title>"));

    let csv3 = dir.path().join("d3.csv");
    let o = orthant(&["shape", "--p", "1", "--d", "3", "--csv", csv3.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rows = shape_rows(&fs::read_to_string(&csv3).unwrap());
    for v in [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]] {
        assert!(rows.iter().any(|r| r[4..7] == v), "vertex {v:?} missing");
    }
}

#[test]
fn permuting_axes_permutes_the_sample() {
    let run = |axes: Option<&str>| {
        let mut args = vec!["estimate-gamma", "--model", "orthant", "--p", "0.9", "--u", "1,-1", "--n-ladder", "8", "--trials", "30"];
        if let Some(a) = axes {
            args.extend(["--axes", a]);
        }
        let o = orthant(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        json_lines(&stdout(&o))[0]["gamma_hat"].as_f64().unwrap()
    };
    // Swapping axes and swapping the direction's coordinates is a relabelling.
    let swapped = orthant(&["estimate-gamma", "--model", "orthant", "--p", "0.9", "--u", "-1,1", "--n-ladder", "8", "--trials", "30", "--axes", "1,0"]);
    let swapped = json_lines(&stdout(&swapped))[0]["gamma_hat"].as_f64().unwrap();
    assert_eq!(run(None), swapped);
    assert!(run(Some("0,1")) == run(None));
}

#[test]
fn oracle_suite_covers_every_small_environment() {
    let o = orthant(&["verify", "--suite", "oracle"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &json_lines(&stdout(&o))[0];
    assert_eq!(r["pass"], true);
    assert_eq!(r["cases"], 1024);
}

#[test]
fn theorem_l_suite_runs_its_negative_control() {
    let o = orthant(&["verify", "--suite", "theorem-l", "--seeds", "2", "--radius", "24", "--margin", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &json_lines(&stdout(&o))[0];
    assert_eq!(r["pass"], true);
    assert!(r["metrics"]["control_mismatches"].as_f64().unwrap() > 0.0);
}

#[test]
fn soft_suite_does_not_set_the_exit_code() {
    let o = orthant(&["verify", "--suite", "mutual-growth", "--p", "0.9"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json_lines(&stdout(&o))[0]["notes"][0].as_str().unwrap().contains("exploratory"));
}

#[test]
fn empty_suite_list_is_a_usage_error() {
    assert_eq!(orthant(&["verify"]).status.code(), Some(2));
}

fn assert_rejected(args: &[&str], out: &Path) {
    let o = orthant(args);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn invalid_configuration_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    let o = out.to_str().unwrap();
    assert_rejected(&["estimate-gamma", "--u", "1,0", "--p", "1.5", "--out", o], &out);
    assert_rejected(&["estimate-gamma", "--u", "1,0,0", "--out", o], &out);
    assert_rejected(&["estimate-gamma", "--u", "1,0", "--axes", "0,0", "--out", o], &out);
    assert_rejected(&["shape", "--d", "4", "--svg", o], &out);
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "p = \"0.9\"\nbogus = 1\n").unwrap();
    assert_rejected(&["estimate-gamma", "--u", "1,0", "--config", cfg.to_str().unwrap(), "--out", o], &out);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "p = \"1\"\nu = [\"4,-1\"]\ntrials = 4\nn_ladder = [4]\n").unwrap();
    let o = orthant(&["estimate-gamma", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json_lines(&stdout(&o))[0]["gamma_exact"], "1");
    let o = orthant(&["estimate-gamma", "--config", cfg.to_str().unwrap(), "--u", "0,3"]);
    assert_eq!(json_lines(&stdout(&o))[0]["gamma_exact"], "0");
}

#[test]
fn scan_writes_one_row_per_probability() {
    let o = orthant(&["scan", "--p-grid", "0.9,1", "--trials", "20", "--n-ladder", "8,16", "--radius", "16", "--base", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# exploratory"));
    assert_eq!(lines.len(), 4);
    let last: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(last[0], "1");
    assert_eq!(last[1], "0");
    assert_eq!(last[3], "0");
}
