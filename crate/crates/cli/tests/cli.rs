//! End-to-end tests of the `iode` binary: report shapes, file outputs,
//! exit codes, and byte determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn iode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iode"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("iode-test-{}-{}", std::process::id(), name));
    p
}

#[test]
fn classify_folded_saddle() {
    let out = iode(&["classify", "--equation", "p^2 - y - x^2", "--at", "0,0,0"]);
    let json = stdout_json(&out);
    assert_eq!(json["kind"], "FoldedNonresonanceSaddle");
    let lambda = json["lambda"].as_f64().unwrap();
    assert!((lambda - (-1.6404)).abs() < 1e-3, "lambda = {}", lambda);
    assert!(json["resonance"].is_null());
    // all schema keys present
    for key in [
        "input",
        "point",
        "kind",
        "lambda",
        "k",
        "resonance",
        "eigenvalues",
        "invariants",
        "residuals",
        "config_digest",
    ] {
        assert!(json.get(key).is_some(), "missing key {}", key);
    }
}

#[test]
fn classify_umbrella_chart() {
    let out = iode(&["classify", "--parametric", "v^2,u,v*(u-v^2)", "--at", "0,0"]);
    let json = stdout_json(&out);
    assert_eq!(json["kind"], "WhitneyUmbrellaPoint");
    let inv = &json["invariants"];
    assert!(inv["a0"].as_f64().unwrap().abs() < 1e-10);
    assert!((inv["a0_prime"].as_f64().unwrap() + 2.0 / 3.0).abs() < 1e-10);
    assert!((inv["b0"].as_f64().unwrap() - 0.4).abs() < 1e-10);
}

#[test]
fn classify_plane_field_resonance() {
    let out = iode(&["classify", "--field", "x,-2*y", "--at", "0,0"]);
    let json = stdout_json(&out);
    assert_eq!(json["kind"], "ResonanceSaddle");
    assert_eq!(json["resonance"]["p"], 2);
    assert_eq!(json["resonance"]["q"], 1);
}

#[test]
fn classify_scan_finds_the_node() {
    let out = iode(&[
        "classify",
        "--equation",
        "p^2 - y + x^2/20",
        "--scan",
        "--box",
        "-1,1,-1,1,-1,1",
    ]);
    let json = stdout_json(&out);
    let list = json.as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["kind"], "FoldedNode");
}

#[test]
fn field_scan_lists_every_equilibrium() {
    let out = iode(&[
        "classify",
        "--field",
        "x^2 - 0.25,y",
        "--scan",
        "--box",
        "-1,1,-1,1",
    ]);
    let json = stdout_json(&out);
    let list = json.as_array().unwrap();
    assert_eq!(list.len(), 2);
    // ordered by position: the saddle at (-1/2, 0), then the degenerate
    // node at (1/2, 0) where both eigenvalues equal one
    assert!((list[0]["point"][0].as_f64().unwrap() + 0.5).abs() < 1e-9);
    assert_eq!(list[0]["kind"], "ResonanceSaddle");
    assert!((list[1]["point"][0].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert_eq!(list[1]["kind"], "NonGeneric(resonance node)");
}

#[test]
fn report_file_output_matches_stdout() {
    let path = temp_path("report.json");
    let out = iode(&[
        "classify",
        "--equation",
        "p^2 - y + x^2",
        "--at",
        "0,0,0",
        "-o",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let file = std::fs::read_to_string(&path).unwrap();
    assert_eq!(file.as_bytes(), out.stdout.as_slice());
    let json: Value = serde_json::from_str(&file).unwrap();
    assert_eq!(json["kind"], "FoldedFocus");
    std::fs::remove_file(&path).ok();
}

#[test]
fn clairaut_equation_and_family() {
    let out = iode(&[
        "clairaut",
        "--equation",
        "y - 2*p^3",
        "--box",
        "-1,1,-1,1,-1,1",
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["clairaut_type"], true);
    assert_eq!(json["reduced"], false);
    assert_eq!(json["dara"]["holds"], false);
    assert_eq!(json["dara"]["order"], 4);

    let out = iode(&["clairaut", "--equation", "y - x*p - p^2"]);
    let json = stdout_json(&out);
    assert_eq!(json["dara"]["holds"], true);

    let out = iode(&["clairaut", "--family", "t^3 + t*x"]);
    let json = stdout_json(&out);
    assert_eq!(json["kind"], "ClairautCusp");
    assert_eq!(json["diagram"], 3);
}

#[test]
fn trace_writes_csv_with_crossing() {
    let csv_path = temp_path("fold.csv");
    let out = iode(&[
        "trace",
        "--equation",
        "p^2 - x",
        "--seed",
        "1,0,1",
        "--dir",
        "-1",
        "-o",
        csv_path.to_str().unwrap(),
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["events"]["CriminantCrossing"], 1);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x,y,p,event");
    let crossing: Vec<&str> = csv
        .lines()
        .filter(|l| l.contains("CriminantCrossing"))
        .collect();
    assert_eq!(crossing.len(), 1);
    let x: f64 = crossing[0].split(',').nth(1).unwrap().parse().unwrap();
    assert!(x.abs() <= 1e-8, "crossing at x = {}", x);
    std::fs::remove_file(&csv_path).ok();
}

#[test]
fn portrait_writes_deterministic_svg() {
    let svg_a = temp_path("node-a.svg");
    let svg_b = temp_path("node-b.svg");
    for path in [&svg_a, &svg_b] {
        let out = iode(&[
            "portrait",
            "--equation",
            "p^2 - y + x^2/20",
            "--box",
            "-1,1,-0.2,1,-1,1",
            "-o",
            path.to_str().unwrap(),
        ]);
        let json = stdout_json(&out);
        assert_eq!(json["singular_points"][0]["kind"], "FoldedNode");
        assert!(json["curve_count"].as_u64().unwrap() > 0);
    }
    let a = std::fs::read(&svg_a).unwrap();
    let b = std::fs::read(&svg_b).unwrap();
    assert_eq!(a, b, "portrait output must be byte-identical");
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("data-kind=\"FoldedNode\""));
    assert!(text.contains("data-lambda=\"2.618034\""));
    std::fs::remove_file(&svg_a).ok();
    std::fs::remove_file(&svg_b).ok();
}

#[test]
fn portrait_of_empty_surface() {
    let svg = temp_path("empty.svg");
    let out = iode(&[
        "portrait",
        "--equation",
        "p^2 + 1",
        "--box",
        "-1,1,-1,1,-1,1",
        "-o",
        svg.to_str().unwrap(),
    ]);
    let json = stdout_json(&out);
    assert_eq!(json["curve_count"], 0);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("class=\"axis\""));
    assert!(!text.contains("data-kind"));
    std::fs::remove_file(&svg).ok();
}

#[test]
fn validate_is_byte_deterministic_and_green() {
    let a = iode(&["validate"]);
    let b = iode(&["validate"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let json: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(json["failed"], 0);
    assert!(json["passed"].as_u64().unwrap() >= 12);
}

#[test]
fn exit_codes() {
    // parse error in the expression: usage class (2)
    let out = iode(&["classify", "--equation", "x +* y", "--at", "0,0,0"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("offset 3"), "stderr: {}", msg);

    // two inputs at once: usage (2)
    let out = iode(&[
        "classify",
        "--equation",
        "p^2 - y",
        "--field",
        "x,y",
        "--at",
        "0,0,0",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // point not on the surface: numeric failure (3)
    let out = iode(&["classify", "--equation", "p^2 - y", "--at", "0,0.5,0"]);
    assert_eq!(out.status.code(), Some(3));

    // unknown flag: clap usage error (2)
    let out = iode(&["classify", "--nonsense"]);
    assert_eq!(out.status.code(), Some(2));

    // no real surface near the seed: numeric failure (3)
    let csv = temp_path("nosurface.csv");
    let out = iode(&[
        "trace",
        "--equation",
        "p^2 + 1",
        "--seed",
        "0,0,0",
        "-o",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!csv.exists(), "no partial output on failure");

    // germ base point off the surface: validation error (2)
    let out = iode(&["clairaut", "--equation", "p^2 - y + 1"]);
    assert_eq!(out.status.code(), Some(2));

    // regular family has no envelope to draw: validation error (2)
    let svg = temp_path("regular.svg");
    let out = iode(&[
        "portrait",
        "--family",
        "t + x",
        "--box",
        "-1,1,-1,1",
        "-o",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides_change_the_digest() {
    let cfg_path = temp_path("config.txt");
    std::fs::write(
        &cfg_path,
        "tol_zero = 1e-8\n# comment line\nseed_grid = 4\n",
    )
    .unwrap();
    let base = iode(&["classify", "--field", "x,y", "--at", "1,1"]);
    let with_file = iode(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "classify",
        "--field",
        "x,y",
        "--at",
        "1,1",
    ]);
    let with_set = iode(&[
        "--set",
        "tol_zero=1e-8",
        "--set",
        "seed_grid=4",
        "classify",
        "--field",
        "x,y",
        "--at",
        "1,1",
    ]);
    let d0 = stdout_json(&base)["config_digest"].clone();
    let d1 = stdout_json(&with_file)["config_digest"].clone();
    let d2 = stdout_json(&with_set)["config_digest"].clone();
    assert_ne!(d0, d1);
    assert_eq!(d1, d2, "file and flag configuration must agree");

    // invalid configuration: jet_order below the umbrella floor
    let out = iode(&["--set", "jet_order=5", "validate"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(&cfg_path).ok();
}

#[test]
fn family_portrait_draws_the_envelope() {
    let svg = temp_path("family.svg");
    let out = iode(&[
        "portrait",
        "--family",
        "t^2 + t*x",
        "--t-range",
        "-0.8,0.8",
        "--box",
        "-1,1,-0.6,1",
        "-o",
        svg.to_str().unwrap(),
    ]);
    let json = stdout_json(&out);
    assert!(json["curve_count"].as_u64().unwrap() >= 2);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("class=\"envelope\""));
    assert!(text.contains("data-kind=\"ClairautFold\""));
    std::fs::remove_file(&svg).ok();
}
