//! End-to-end runs of the `kinscape` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use kinscape::landscape::{Chart, Landscape};
use kinscape::quantum::Level;
use kinscape::su2rep::Convention;

fn kinscape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinscape")).args(args).output().expect("binary runs")
}

fn kinscape_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinscape"))
        .args(args)
        .env("KINSCAPE_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn degenerate_grid_has_header_and_two_rows_that_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = kinscape(&[
        "grid",
        "--landscape",
        "conv=zyz,zyz identity=1 measured=1 target=2",
        "--axis",
        "a2=0:0:1",
        "--axis",
        "b2=0.3:1.1:2",
        "--axis",
        "g2=pi/2:pi/2:1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["a2", "b2", "g2", "value"]);
    assert_eq!(rows.len(), 2);
    let chart = Chart::new(Convention::Zyz, Convention::Zyz, Level::One, Level::Two).unwrap().identity_factor(0).unwrap();
    for r in &rows {
        assert_eq!(chart.value(&r[..3]).unwrap().to_bits(), r[3].to_bits());
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("g.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "grid");
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["config"]["landscape"], "conv=zyz,zyz identity=1 measured=1 target=2");
}

#[test]
fn reduced_grid_maximum_on_zero_phase_slice() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("l1.csv");
    let o = kinscape(&[
        "grid", "--landscape", "l1", "--axis", "omega=0:0:1", "--axis", "b1=0:pi:200", "--axis", "b2=0:pi:200",
        "--centered", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let (_, rows) = read_csv(&out);
    assert_eq!(rows.len(), 40_000);
    let best = rows.iter().max_by(|a, b| a[3].total_cmp(&b[3])).unwrap();
    assert!((best[3] - 0.686969).abs() < 1e-4, "{best:?}");
    assert!((best[1] - 1.865).abs() < 0.02 && (best[2] - 2.503).abs() < 0.02, "{best:?}");
}

#[test]
fn two_angle_landscape_grid_never_exceeds_half() {
    let o = kinscape(&["grid", "--landscape", "m", "--axis", "b1=0:pi:200", "--axis", "b2=0:pi:200"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let max = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(max <= 0.5 && max > 0.4999, "{max}");
}

#[test]
fn invalid_grid_range_exits_two_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.csv");
    let o = kinscape(&[
        "grid", "--landscape", "m", "--axis", "b1=0:5:3", "--axis", "b2=0:1:3", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    let o = kinscape(&["grid", "--landscape", "m", "--axis", "b1=1:0:3", "--axis", "b2=0:1:3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = kinscape(&["grid", "--landscape", "m", "--axis", "b2=0:1:3", "--axis", "b1=0:1:3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn critical_report_lists_eight_reduced_points_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let args = |p: &Path| vec!["critical".to_string(), "--landscape".into(), "l1".into(), "--starts".into(), "500".into(), "--out".into(), p.to_str().unwrap().into()];
    let run = |p: &Path, threads: &str| {
        let v = args(p);
        let v: Vec<&str> = v.iter().map(String::as_str).collect();
        assert!(kinscape_env(&v, threads).status.success());
    };
    run(&a, "1");
    run(&b, "3");
    let body = fs::read_to_string(&a).unwrap();
    assert_eq!(body, fs::read_to_string(&b).unwrap());
    assert!(body.starts_with("REPORT v1\n"));
    assert!(body.contains("records 8\n"));
    assert_eq!(body.matches("\nclass GlobalMax\n").count(), 2);
    assert_eq!(body.matches("\nclass Saddle\n").count(), 6);
    for field in ["chart ", "coords ", "value ", "grad_norm ", "eigs ", "class "] {
        assert_eq!(body.lines().filter(|l| l.starts_with(field)).count(), 8, "{field}");
    }
    let first_value: f64 = body.lines().find(|l| l.starts_with("value ")).unwrap()[6..].parse().unwrap();
    assert!((first_value - 0.06 * (9.0 + 6f64.sqrt())).abs() < 1e-9);
    assert!(dir.path().join("a.txt.manifest.json").exists());
}

#[test]
fn surface_without_critical_points_gives_empty_report() {
    let o = kinscape(&["critical", "--landscape", "conv=zyz,yzy freeze=g1:0 pin=a2:0,g2:0", "--starts", "300"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("records 0\n"));
}

#[test]
fn bad_chart_exits_two() {
    for d in ["conv=zyz,abc", "conv=zyz,zyz target=1", "l2", "conv=zyz,zyz pin=b9:0"] {
        let o = kinscape(&["critical", "--landscape", d, "--starts", "5"]);
        assert_eq!(o.status.code(), Some(2), "{d}");
    }
}

#[test]
fn verify_single_row_passes_and_corrupted_tolerance_fails() {
    let o = kinscape(&["verify", "--tables", "T1.7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("status PASS"));
    let o = kinscape(&["verify", "--tables", "T1.7", "--grad-tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("status FAIL") && text.contains("diagnostic sample 1"));
    assert_eq!(kinscape(&["verify", "--tables", "T3"]).status.code(), Some(2));
}

#[test]
fn full_verification_fails_only_on_identity_y_stratum_rows() {
    let o = kinscape(&["verify"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    let failing: Vec<&str> = text
        .split("\nrow ")
        .skip(1)
        .filter(|block| block.contains("status FAIL"))
        .map(|block| block.lines().next().unwrap())
        .collect();
    assert_eq!(failing, ["T6.1", "TT.10", "TT.12"]);
}

#[test]
fn dynamics_checks_report_and_exit() {
    let o = kinscape(&["dynamics", "conserve", "--samples", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("command dynamics conserve"));
    let o = kinscape(&["dynamics", "crosscheck", "--samples", "40", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let o = kinscape(&["dynamics", "bound", "--budget", "400", "--at-least", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let o = kinscape(&["dynamics", "bound", "--budget", "400", "--at-least", "0.6"]);
    assert_eq!(o.status.code(), Some(1), "coherent fields cannot exceed one half");
    let o = kinscape(&["dynamics", "bound", "--budget", "400", "--measured", "7"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn antizeno_rows() {
    let o = kinscape(&["antizeno", "--n-max", "5", "--delta-phi", "pi/2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(text.lines().next(), Some("n,pmax"));
    assert_eq!(values[0], 0.75);
    assert!(values.windows(2).all(|w| w[1] > w[0]) && values.iter().all(|&v| v < 1.0));

    let o = kinscape(&["antizeno", "--n-max", "3", "--delta-phi", "0"]);
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",1.0000000000000000e0")));
    let o = kinscape(&["antizeno", "--n-max", "1", "--delta-phi", "pi"]);
    assert!(stdout(&o).contains("1,5.0000000000000000e-1"));

    for bad in ["4", "-0.5", "nope"] {
        assert_eq!(kinscape(&["antizeno", "--n-max", "3", "--delta-phi", bad]).status.code(), Some(2), "{bad}");
    }
}

#[test]
fn invalid_thread_count_exits_two() {
    let o = kinscape_env(&["antizeno", "--n-max", "1", "--delta-phi", "1"], "zero");
    assert_eq!(o.status.code(), Some(2));
}
