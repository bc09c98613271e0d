use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use etdelay::{builtin, load_config, ConfigError};

fn etdelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etdelay"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn example1_json() -> serde_json::Value {
    serde_json::from_str(&builtin("example1").unwrap().to_json()).unwrap()
}

#[test]
fn scenario_list_and_dump() {
    let o = etdelay(&["scenario", "list"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "example1\nexample2-fig2\nexample2-fig3\n");

    let o = etdelay(&["scenario", "dump", "example2-fig3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.12*cos(pi*s)"));

    let o = etdelay(&["scenario", "dump", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dumped_config_runs_through_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dump = stdout(&etdelay(&["scenario", "dump", "example2-fig2"]));
    let path = write_config(tmp.path(), "ex2.json", &dump);
    assert_eq!(
        load_config(Path::new(&path)).unwrap(),
        builtin("example2-fig2").unwrap()
    );

    let out = tmp.path().join("out");
    let o = etdelay(&["report", "--config", &path, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("K: -2.30566 -4.17346"));
    assert!(text.contains("valid: true"));
    assert!(text.contains("verdict: pass"));
    assert_eq!(fs::read_to_string(out.join("report.txt")).unwrap(), text);
}

#[test]
fn simulate_writes_documented_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let o = etdelay(&["simulate", "--scenario", "example1", "--out", dir]);
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let events = fs::read_to_string(tmp.path().join("events.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("t,x1,V,u1"));
    assert_eq!(lines.next(), Some("0.0,1.0,1.0,-0.2"));
    let mut ev = events.lines();
    assert_eq!(ev.next(), Some("k,t_k,gap_from_previous"));
    assert_eq!(ev.next(), Some("0,0.0,"));
    let first: Vec<&str> = ev.next().unwrap().split(',').collect();
    assert_eq!(first[0], "1");
    assert!(first[1].parse::<f64>().unwrap() > 3.0);
    assert_eq!(first[1], first[2]);

    let o = etdelay(&["simulate", "--scenario", "example2-fig2", "--out", dir]);
    assert!(o.status.success());
    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x1,x2,V,u1\n"));
}

#[test]
fn overrides_change_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let o = etdelay(&[
        "simulate",
        "--scenario",
        "example1",
        "--out",
        dir,
        "--step",
        "0.5",
        "--horizon",
        "10",
    ]);
    assert!(o.status.success());
    let traj = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let last = traj.lines().last().unwrap();
    assert!(last.starts_with("10.0,"), "{last}");
    assert!(traj.lines().count() < 40);
}

#[test]
fn dimension_mismatch_names_both_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = example1_json();
    v["system"]["A1"] = serde_json::json!([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    v["system"]["A2"] = v["system"]["A1"].clone();
    v["system"]["B"] = serde_json::json!([[1.0], [1.0]]);
    let path = write_config(tmp.path(), "bad.json", &v.to_string());
    match load_config(Path::new(&path)) {
        Err(ConfigError::Dimension { first, second, .. }) => {
            assert_eq!((first.as_str(), second.as_str()), ("A1", "B"));
        }
        other => panic!("{other:?}"),
    }
    let o = etdelay(&["design", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("A1") && err.contains("B"), "{err}");
}

#[test]
fn schema_errors_carry_the_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = example1_json();
    v["trigger"]["gamma"] = serde_json::json!(1.0);
    let path = write_config(tmp.path(), "extra.json", &v.to_string());
    let o = etdelay(&["design", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trigger"), "{}", stderr(&o));

    let mut v = example1_json();
    v["synthesis"]["h"] = serde_json::json!("big");
    let path = write_config(tmp.path(), "type.json", &v.to_string());
    let o = etdelay(&["design", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("synthesis.h"), "{}", stderr(&o));
}

#[test]
fn expression_errors_report_position() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = example1_json();
    v["delay"]["tau"] = serde_json::json!("2 + * t");
    let path = write_config(tmp.path(), "expr.json", &v.to_string());
    match load_config(Path::new(&path)) {
        Err(ConfigError::Expr { field, source }) => {
            assert_eq!(field, "delay.tau");
            assert_eq!(source.position(), Some(4));
        }
        other => panic!("{other:?}"),
    }
    let o = etdelay(&["design", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn violated_hypothesis_is_reported_with_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = example1_json();
    v["trigger"]["alpha"] = serde_json::json!(0.15);
    let path = write_config(tmp.path(), "alpha.json", &v.to_string());
    let o = etdelay(&["design", "--config", &path]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("h_gt_alpha_plus_sigma: FAIL"), "{text}");
    assert!(text.contains("valid: false"));
}

#[test]
fn numeric_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = example1_json();
    v["controller"]["P"] = serde_json::json!([[-1.0]]);
    let path = write_config(tmp.path(), "p.json", &v.to_string());
    let o = etdelay(&["design", "--config", &path]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: numeric failure"));
}

#[test]
fn verify_mode_accepts_q_and_r() {
    let mut cfg = builtin("example2-fig2").unwrap();
    let p = cfg.controller.p.take().unwrap();
    let q = etdelay_core::Matrix::from_rows(&p)
        .unwrap()
        .spd_inverse()
        .unwrap();
    cfg.controller.q = Some(q.to_rows());
    let sc = cfg.build().unwrap();
    match sc.mode {
        etdelay_core::ControllerMode::Verify { p: p2, k } => {
            assert!((p2[(0, 1)] - 1.4575).abs() < 1e-12);
            assert!((k[(0, 0)] + 2.3056).abs() < 1e-3);
        }
        _ => panic!("expected verify mode"),
    }

    cfg.controller.k = Some(vec![vec![-2.3, -4.2]]);
    assert!(matches!(cfg.build(), Err(ConfigError::Value { .. })));
}
