//! End-to-end runs of the `toricsol` binary on the bundled data files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SMALL: &[&str] = &["--R", "4", "--resolution", "41", "--no-r-sensitivity"];

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toricsol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(command: &str, input: &str, out: &Path, extra: &[&str]) -> Output {
    let input = data(input);
    let mut args = vec![
        command,
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        stdout(&o),
        String::from_utf8_lossy(&o.stderr)
    );
    stdout(&o)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn check_summaries() {
    let dir = TempDir::new().unwrap();
    for (file, line) in [
        ("example_4_1.json", "Fano: yes, Gorenstein: yes, Futaki vanishes: no"),
        (
            "example_4_2.json",
            "Fano: yes, Gorenstein: no (index 2), Futaki vanishes: yes",
        ),
        ("cp2_simplex.json", "Fano: yes, Gorenstein: yes, Futaki vanishes: yes"),
    ] {
        let text = ok(run_on("check", file, dir.path(), &[]));
        assert_eq!(text.lines().next(), Some(line), "{file}");
    }
}

#[test]
fn dual_prints_exact_data_and_records_it() {
    let dir = TempDir::new().unwrap();
    let text = ok(run_on("dual", "example_4_1.json", dir.path(), &[]));
    for v in ["(-1, -1)", "(-1, 3)", "(1, -1)", "volume: 4", "barycenter: (-1/3, 1/3)"] {
        assert!(text.contains(v), "missing {v} in\n{text}");
    }
    let r = report(dir.path());
    let mut verts: Vec<Vec<String>> = serde_json::from_value(r["combinatorics"]["dual_vertices"].clone()).unwrap();
    verts.sort();
    assert_eq!(verts, [["-1", "-1"], ["-1", "3"], ["1", "-1"]]);
    assert_eq!(r["combinatorics"]["futaki_vanishes"], false);
    assert_eq!(r["config"]["command"], "dual");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(
        run(&["check", "--input", missing.to_str().unwrap()]).status.code(),
        Some(1)
    );

    for (name, body) in [
        ("bad.json", "{\"dim\": 2, \"vertices\": "),
        ("degenerate.json", "{\"dim\": 2, \"vertices\": [[1, 0], [-1, 0]]}"),
        (
            "unknown.json",
            "{\"dim\": 2, \"vertices\": [[1, 0], [0, 1], [-1, -1]], \"extra\": 1}",
        ),
    ] {
        let path = dir.path().join(name);
        fs::write(&path, body).unwrap();
        let o = run(&[
            "check",
            "--input",
            path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(2), "{name}");
    }

    let o = run_on("soliton-vector", "example_4_1.json", dir.path(), &["--tol", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run_on("solve", "example_4_2.json", dir.path(), &["--resolution", "160"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run_on(
        "solve",
        "example_4_2.json",
        dir.path(),
        &["--R", "4", "--resolution", "41", "--oracle"],
    );
    assert_eq!(o.status.code(), Some(2), "--oracle needs the CP^2 polytope");
}

#[test]
fn soliton_vectors() {
    let dir = TempDir::new().unwrap();
    ok(run_on("soliton-vector", "example_4_1.json", dir.path(), &[]));
    let s = &report(dir.path())["soliton"];
    let c: Vec<f64> = serde_json::from_value(s["c"].clone()).unwrap();
    assert!((c[0] - 1.3439996727497457).abs() < 1e-9 && c[1].abs() < 1e-9, "{c:?}");
    assert!(s["relative_residual"].as_f64().unwrap() < 1e-10);

    let dir = TempDir::new().unwrap();
    ok(run_on("soliton-vector", "example_4_2.json", dir.path(), &[]));
    let c: Vec<f64> = serde_json::from_value(report(dir.path())["soliton"]["c"].clone()).unwrap();
    assert_eq!(c, [0.0, 0.0]);
}

#[test]
fn guillemin_scan_saturates_on_example_4_2() {
    let dir = TempDir::new().unwrap();
    ok(run_on(
        "guillemin",
        "example_4_2.json",
        dir.path(),
        &["--samples", "128", "--seed", "3"],
    ));
    let scan = &report(dir.path())["scan"];
    assert_eq!(scan["rows"].as_array().unwrap().len(), 4);
    assert_eq!(scan["seed"], 3);
    for k in 0..2 {
        assert!(scan["saturation"][k].as_f64().unwrap() >= 0.99);
    }
    assert!(scan["cauchy_binet_max_rel"].as_f64().unwrap() < 1e-12);
    assert!(scan["round_trip_max"].as_f64().unwrap() < 1e-9);
    assert!(scan["legendre_identity_max"].as_f64().unwrap() < 1e-9);
    let csv = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn solve_writes_fields_path_and_report() {
    let dir = TempDir::new().unwrap();
    ok(run_on("solve", "example_4_1.json", dir.path(), SMALL));
    let path = fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert_eq!(
        path.lines().next(),
        Some("t,m_t,x_t1,x_t2,sup_phi_minus_phi0,inf_phi_minus_phi0,newton_iters,residual_norm")
    );
    assert_eq!(path.lines().count(), 16);
    let fields = fs::read_to_string(dir.path().join("fields_t1.0000.csv")).unwrap();
    assert_eq!(fields.lines().next(), Some("x1,x2,phi,phi0,phi_minus_phi0,residual"));
    assert_eq!(fields.lines().count(), 41 * 41 + 1);
    let count = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("fields_t")
        })
        .count();
    assert_eq!(count, 15);

    let r = report(dir.path());
    let s = &r["solve"];
    assert_eq!(s["completed"], true);
    assert_eq!(s["resolution"], 41);
    let v = &s["verification"];
    assert_eq!(v["residual_ok"], true);
    assert_eq!(v["convex"], true);
    assert!(v["containment_margin"].as_f64().unwrap() > 0.0);
    assert_eq!(r["config"]["command"], "solve");
    assert_eq!(r["config"]["args"]["resolution"], 41);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert!(chrono_like(r["timestamp"].as_str().unwrap()));
}

/// RFC 3339 shape: `YYYY-MM-DDTHH:MM:SS...`.
fn chrono_like(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 20 && b[4] == b'-' && b[7] == b'-' && b[10] == b'T' && b[13] == b':' && b[16] == b':'
}

#[test]
fn cp2_oracle_on_a_small_grid() {
    let dir = TempDir::new().unwrap();
    let text = ok(run_on(
        "solve",
        "cp2_simplex.json",
        dir.path(),
        &["--R", "4", "--resolution", "81", "--oracle", "--fields", "final"],
    ));
    assert!(text.contains("oracle:"));
    let s = &report(dir.path())["solve"];
    // the solution is φ* shifted by the normalization constant log 3
    assert!((s["c"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-9);
    let o = &s["oracle"];
    assert!(o["path_sup_error"].as_f64().unwrap() < 0.01, "{o}");
    assert!(o["gold_sup_error"].as_f64().unwrap() < 0.01, "{o}");
    assert!(s["r_sensitivity"]["sup_difference"].as_f64().unwrap() < 0.01);
    let fields: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("fields_t"))
        .collect();
    assert_eq!(fields, ["fields_t1.0000.csv"]);
}

#[test]
fn runs_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for dir in [&a, &b] {
        ok(run_on("solve", "example_4_2.json", dir.path(), SMALL));
        ok(run_on(
            "guillemin",
            "example_4_2.json",
            dir.path(),
            &["--seed", "11", "--samples", "64"],
        ));
    }
    for name in ["path.csv", "scan.csv", "fields_t0.3000.csv", "fields_t1.0000.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let (whole, split) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    ok(run_on("solve", "example_4_2.json", whole.path(), SMALL));

    let mut partial = SMALL.to_vec();
    partial.extend(["--max-steps", "6"]);
    let text = ok(run_on("solve", "example_4_2.json", split.path(), &partial));
    assert!(text.contains("--resume"));
    assert_eq!(report(split.path())["solve"]["completed"], false);
    assert!(!split.path().join("fields_t1.0000.csv").exists());

    let mut resumed = SMALL.to_vec();
    resumed.push("--resume");
    ok(run_on("solve", "example_4_2.json", split.path(), &resumed));
    assert_eq!(report(split.path())["solve"]["completed"], true);
    for entry in fs::read_dir(whole.path()).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            assert_eq!(
                fs::read(whole.path().join(&name)).unwrap(),
                fs::read(split.path().join(&name)).unwrap(),
                "{name:?}"
            );
        }
    }

    // settings that differ from the checkpoint are refused
    let o = run_on(
        "solve",
        "example_4_2.json",
        split.path(),
        &["--R", "4", "--resolution", "43", "--resume"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_fills_missing_sections_and_keeps_existing_ones() {
    let dir = TempDir::new().unwrap();
    ok(run_on("solve", "cp2_simplex.json", dir.path(), SMALL));
    let before = report(dir.path())["solve"].clone();
    let text = ok(run_on("report", "cp2_simplex.json", dir.path(), &["--samples", "64"]));
    assert!(text.starts_with("Fano: yes, Gorenstein: yes, Futaki vanishes: yes"));
    let r = report(dir.path());
    for key in ["combinatorics", "soliton", "scan", "solve"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["solve"], before);
    assert_eq!(r["config"]["command"], "report");

    // a different input starts a fresh report
    ok(run_on("check", "example_4_2.json", dir.path(), &[]));
    assert!(report(dir.path()).get("solve").is_none());
}
