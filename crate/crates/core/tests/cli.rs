//! End-to-end tests of the command-line binary: exit codes, report text,
//! CSV output and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn algmech(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_algmech"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn temp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("algmech-test-{}-{name}", std::process::id()));
    path
}

#[test]
fn validate_passes_on_catalog_models() {
    for name in ["rigid-body", "tangent-r1", "tangent-r2", "harmonic-pair"] {
        let out = algmech(&["validate", name]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stdout(&out));
        assert!(stdout(&out).contains("result: pass"));
    }
}

#[test]
fn validate_fails_on_broken_model_with_jacobi_residual() {
    let out = algmech(&["validate", "rigid-body-broken"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("jacobi"), "{text}");
    assert!(text.contains("FAIL"), "{text}");
}

#[test]
fn unknown_model_is_a_usage_error() {
    let out = algmech(&["validate", "no-such-model"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_flags_are_usage_errors() {
    let out = algmech(&[
        "simulate",
        "rigid-body",
        "--lagrangian",
        "L",
        "--y0",
        "1,2,3",
    ]);
    // missing --t-end / --dt
    assert_eq!(out.status.code(), Some(2));

    let out = algmech(&[
        "simulate",
        "rigid-body",
        "--lagrangian",
        "L",
        "--y0",
        "1,2",
        "--t-end",
        "1",
        "--dt",
        "0.001",
    ]);
    // wrong fiber dimension
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_deterministic_csv_and_passes_drift() {
    let csv_a = temp_path("sim-a.csv");
    let csv_b = temp_path("sim-b.csv");
    for path in [&csv_a, &csv_b] {
        let out = algmech(&[
            "simulate",
            "rigid-body",
            "--lagrangian",
            "L",
            "--y0",
            "1,0.5,-0.7",
            "--t-end",
            "2",
            "--dt",
            "0.001",
            "--monitor",
            "expr:I1*y1",
            "--monitor",
            "energy",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
        assert!(stdout(&out).contains("drift report"));
    }
    let a = std::fs::read(&csv_a).unwrap();
    let b = std::fs::read(&csv_b).unwrap();
    assert_eq!(a, b, "CSV output must be byte-identical across runs");

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,y1,y2,y3,I1*y1,energy");
    assert_eq!(lines.count(), 2001);

    std::fs::remove_file(csv_a).ok();
    std::fs::remove_file(csv_b).ok();
}

#[test]
fn noether_prints_the_momentum_and_exit_codes_split() {
    let out = algmech(&[
        "noether",
        "rigid-body",
        "--lagrangian",
        "L",
        "--section",
        "xi1",
        "--h",
        "zero",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("symmetry: pass"));
    assert!(text.contains("f = 3*y1"), "{text}");

    let out = algmech(&[
        "noether",
        "rigid-body",
        "--param",
        "I3=2.5",
        "--lagrangian",
        "L",
        "--section",
        "xi1",
        "--h",
        "zero",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("symmetry: FAIL"));
}

#[test]
fn noether_with_simulation_reports_drift() {
    let out = algmech(&[
        "noether",
        "rigid-body",
        "--lagrangian",
        "L",
        "--section",
        "xi1",
        "--h",
        "zero",
        "--simulate",
        "--y0",
        "1,0.5,-0.7",
        "--t-end",
        "2",
        "--dt",
        "0.001",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("drift report"));
}

#[test]
fn equivalence_reports_all_three_verdicts() {
    let out = algmech(&[
        "equivalence",
        "tangent-r1",
        "--left",
        "free",
        "--right",
        "shifted",
        "--alpha",
        "unit",
        "--v",
        "zero",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("geometric: pass"));
    assert!(text.contains("dynamical: pass"));
    assert!(text.contains("gauge: pass"));

    // harmonic pair: dynamically but not geometrically equivalent
    let out = algmech(&[
        "equivalence",
        "harmonic-pair",
        "--left",
        "L",
        "--right",
        "Lprime",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("geometric: FAIL"));
    assert!(text.contains("dynamical: pass"));
}

#[test]
fn nonnoether_emits_invariant_columns() {
    let csv = temp_path("nn.csv");
    let out = algmech(&[
        "nonnoether",
        "harmonic-pair",
        "--left",
        "L",
        "--right",
        "Lprime",
        "--x0",
        "0.3,0.2",
        "--y0",
        "1,0.5",
        "--t-end",
        "2",
        "--dt",
        "0.001",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,c0,c1,c2,t1,t2\n"));
    std::fs::remove_file(csv).ok();

    // a pair that is not dynamically equivalent is rejected
    let out = algmech(&[
        "nonnoether",
        "tangent-r1",
        "--left",
        "free",
        "--right",
        "forced",
        "--x0",
        "0",
        "--y0",
        "1",
        "--t-end",
        "1",
        "--dt",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("dynamical equivalence: FAIL"));
}

#[test]
fn family_passes_on_the_symmetric_rigid_body() {
    let out = algmech(&[
        "family",
        "rigid-body",
        "--lagrangian",
        "L",
        "--section",
        "xi1",
        "--times",
        "0.25,0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("result: pass"));
}

#[test]
fn numeric_abort_exits_3_and_keeps_partial_csv() {
    // a model whose Hessian is singular everywhere
    let model_path = temp_path("singular.toml");
    std::fs::write(
        &model_path,
        r#"
name = "singular"
anchor = [["1", "0"], ["0", "1"]]

[base]
dim = 2
coords = ["x1", "x2"]

[fiber]
rank = 2
coords = ["y1", "y2"]

[lagrangians]
L = "(y1^2 + y2^2)/2 + y1*y2"
"#,
    )
    .unwrap();
    let csv = temp_path("partial.csv");
    let out = algmech(&[
        "simulate",
        model_path.to_str().unwrap(),
        "--lagrangian",
        "L",
        "--x0",
        "0,0",
        "--y0",
        "1,0",
        "--t-end",
        "1",
        "--dt",
        "0.01",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    // the initial sample is retained
    assert_eq!(text.lines().count(), 2);
    std::fs::remove_file(model_path).ok();
    std::fs::remove_file(csv).ok();
}

#[test]
fn model_files_round_trip_through_the_cli() {
    // validate a model loaded from a printed file rather than the catalog
    let model = algmech_lib_print("tangent-r2");
    let path = temp_path("roundtrip.toml");
    std::fs::write(&path, model).unwrap();
    let out = algmech(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    std::fs::remove_file(path).ok();
}

fn algmech_lib_print(name: &str) -> String {
    algmech::model::load(name, &[], false).unwrap().print()
}
