use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use discflow::formats::{parse_particles, ReportDoc};
use discflow::spacetime::parse_scene;
use serde_json::Value;

fn discflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> ReportDoc {
    let text = ReportDoc::parse_text(&fs::read_to_string(dir.join("report.txt")).unwrap()).unwrap();
    let json =
        ReportDoc::parse_json(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(text, json);
    json
}

#[test]
fn verify_lattice_flow_passes_with_unit_minimum() {
    let tmp = tempfile::tempdir().unwrap();
    let out = discflow(
        tmp.path(),
        &["--command", "verify", "--window", "2", "--out", "v"],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = report(&tmp.path().join("v"));
    let min = doc.get("min_alltime_distance").unwrap().as_f64().unwrap();
    assert!((min - 1.0).abs() < 1e-9);
    assert_eq!(doc.get("verdict").unwrap(), "pass");
    assert_eq!(doc.get("flow.injective").unwrap(), &Value::Bool(true));
}

#[test]
fn verify_head_on_pair_fails_at_time_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("p.txt"),
        "particles v1\n0,0,1,0\n4,0,-1,0\n",
    )
    .unwrap();
    let out = discflow(
        tmp.path(),
        &["--command", "verify", "--input", "p.txt", "--out", "h"],
    );
    assert_eq!(out.status.code(), Some(1));
    let doc = report(&tmp.path().join("h"));
    assert_eq!(doc.get("witness_time").unwrap().as_f64(), Some(2.0));
    assert_eq!(doc.get("min_alltime_distance").unwrap().as_f64(), Some(0.0));
}

#[test]
fn falsify_constant_field_reports_zero_difference() {
    let tmp = tempfile::tempdir().unwrap();
    let out = discflow(
        tmp.path(),
        &[
            "--command",
            "falsify",
            "--field",
            "constant",
            "--c",
            "0.1",
            "--out",
            "f",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = report(&tmp.path().join("f"));
    assert_eq!(doc.get("outcome").unwrap(), "violation");
    assert_eq!(doc.get("dw_zero").unwrap(), &Value::Bool(true));
}

#[test]
fn falsify_with_tiny_budget_exhausts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = discflow(
        tmp.path(),
        &[
            "--command",
            "falsify",
            "--field",
            "saturated-radial",
            "--c",
            "0.05",
            "--budget",
            "3",
            "--out",
            "f",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        report(&tmp.path().join("f")).get("outcome").unwrap(),
        "exhausted"
    );
}

#[test]
fn assign_output_feeds_verify_and_cylinders() {
    let tmp = tempfile::tempdir().unwrap();
    let out = discflow(
        tmp.path(),
        &[
            "--command",
            "assign",
            "--window",
            "-1..2,0..3",
            "--profile",
            "rational",
            "--out",
            "a",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let particles =
        parse_particles(&fs::read_to_string(tmp.path().join("a/particles.txt")).unwrap()).unwrap();
    assert_eq!(particles.len(), 16);

    let out = discflow(
        tmp.path(),
        &[
            "--command",
            "verify",
            "--input",
            "a/particles.txt",
            "--out",
            "v",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );

    let out = discflow(
        tmp.path(),
        &[
            "--command",
            "cylinders",
            "--input",
            "a/particles.txt",
            "--out",
            "c",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let scene = parse_scene(&fs::read_to_string(tmp.path().join("c/scene.txt")).unwrap()).unwrap();
    assert_eq!(scene.cylinders.len(), 16);
    let doc = report(&tmp.path().join("c"));
    assert_eq!(doc.get("nonparallel").unwrap(), &Value::Bool(true));
}

#[test]
fn cylinders_reject_oversized_radius() {
    let tmp = tempfile::tempdir().unwrap();
    let out = discflow(
        tmp.path(),
        &["--command", "cylinders", "--radius", "0.4", "--out", "c"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

#[test]
fn evolve_writes_csv_and_numbered_svgs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = discflow(
        tmp.path(),
        &[
            "--command",
            "evolve",
            "--window",
            "1",
            "--t0",
            "-1",
            "--t1",
            "1",
            "--frames",
            "5",
            "--svg",
            "--out",
            "e",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let dir = tmp.path().join("e");
    let csv = fs::read_to_string(dir.join("frames.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5 * 9);
    for k in 0..5 {
        let svg = fs::read_to_string(dir.join(format!("frame_{k:04}.svg"))).unwrap();
        assert_eq!(svg.matches("<circle").count(), 9);
    }
    assert!(!dir.join("frame_0005.svg").exists());
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.conf"),
        "# falsifier run\ncommand = falsify\nfield = clamped-linear\nfield-matrix = 1, 0.5, -0.3, 2\nc = 0.5\nout = cfg\n",
    )
    .unwrap();
    let out = discflow(tmp.path(), &["--config", "run.conf", "--c", "0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = report(&tmp.path().join("cfg"));
    assert_eq!(doc.get("c").unwrap().as_f64(), Some(0.05));
    assert_eq!(doc.get("field").unwrap(), "clamped-linear");
}

#[test]
fn input_errors_exit_two_with_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("bad.conf"),
        "command = verify\nthreshold = -\n",
    )
    .unwrap();
    let out = discflow(tmp.path(), &["--config", "bad.conf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = discflow(tmp.path(), &["--window", "3"]);
    assert_eq!(out.status.code(), Some(2));

    let out = discflow(
        tmp.path(),
        &["--command", "evolve", "--t0", "3", "--t1", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t1"));

    fs::write(
        tmp.path().join("close.txt"),
        "particles v1\n0,0,0,0\n0.5,0,1,0\n",
    )
    .unwrap();
    let out = discflow(tmp.path(), &["--command", "verify", "--input", "close.txt"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(tmp.path().join("trunc.txt"), "particles v1\n0,0,0\n").unwrap();
    let out = discflow(tmp.path(), &["--command", "verify", "--input", "trunc.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn table_profile_and_grid_field_load_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("phi.txt"),
        "# n,phi\n-1,-0.5\n0,0\n1,0.25\n2,0.3\n",
    )
    .unwrap();
    let out = discflow(
        tmp.path(),
        &[
            "--command",
            "verify",
            "--window",
            "-1..2",
            "--profile",
            "table:phi.txt",
            "--out",
            "t",
        ],
    );
    assert_eq!(out.status.code(), Some(0));

    let out = discflow(
        tmp.path(),
        &[
            "--command",
            "verify",
            "--window",
            "-2..2",
            "--profile",
            "table:phi.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(2));

    let mut grid = String::from("particles v1\n");
    for i in -2..=2 {
        for j in -2..=2 {
            grid.push_str(&format!("{i},{j},{},{}\n", 0.1 * i as f64, -0.1 * j as f64));
        }
    }
    fs::write(tmp.path().join("grid.txt"), grid).unwrap();
    let out = discflow(
        tmp.path(),
        &[
            "--command",
            "falsify",
            "--field",
            "grid:grid.txt",
            "--out",
            "g",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&tmp.path().join("g")).get("field").unwrap(), "grid");
}
