//! End-to-end runs of the `cpkit` binary against the files in `tests/data`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpkit::completion::{minimal_cp_completion_choi, PartialCpMap};
use cpkit::{sample, CMatrix, CpMap, Tolerance, C64};
use serde_json::{json, Value};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cpkit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn cpkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn run(args: &[&str]) -> (Value, i32) {
    let out = cpkit(args);
    let code = out.status.code().expect("exit code");
    let text = String::from_utf8(out.stdout).unwrap();
    let report = serde_json::from_str(&text)
        .unwrap_or_else(|e| panic!("{args:?}: stdout is not JSON ({e}): {text}"));
    (report, code)
}

fn matrix(m: &CMatrix) -> Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect();
    json!(rows)
}

fn write_map(name: &str, phi: &CpMap) -> PathBuf {
    write(
        name,
        &json!({ "d_in": phi.d_in(), "d_out": phi.d_out(), "choi": matrix(phi.choi()) }),
    )
}

fn write(name: &str, v: &Value) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

#[test]
fn analyze_special_map() {
    let (r, code) = run(&["analyze", path(&data("special.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["class"]["is_cp"], true);
    assert_eq!(r["class"]["choi_rank"], 2);
    assert_eq!(r["class"]["is_pure"], false);
    let spectrum: Vec<f64> = serde_json::from_value(r["choi_spectrum"].clone()).unwrap();
    for (got, want) in spectrum.iter().zip([0.0, 0.0, 2.0, 2.0]) {
        assert!((got - want).abs() < 1e-12, "{spectrum:?}");
    }
}

#[test]
fn analyze_identity_is_pure() {
    let (r, code) = run(&["analyze", path(&data("identity.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["class"]["is_pure"], true);
    assert_eq!(r["class"]["is_unital"], true);
}

#[test]
fn analyze_transpose_succeeds_but_is_not_cp() {
    let (r, code) = run(&["analyze", path(&data("transpose.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["class"]["is_cp"], false);
    assert!(r["choi_spectrum"][0].as_f64().unwrap() < -0.5);
}

#[test]
fn malformed_input_exits_two() {
    for cmd in ["analyze", "quasipure"] {
        let out = cpkit(&[cmd, path(&data("malformed.json"))]);
        assert_eq!(out.status.code(), Some(2), "{cmd}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let out = cpkit(&["analyze", path(&data("does-not-exist.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quasipure_first_example() {
    let (r, code) = run(&["quasipure", path(&data("first-example.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"]["status"], "QuasiPure");
    assert_eq!(r["verdict"]["proof_grade"], true);
}

#[test]
fn quasipure_special_has_diagonal_witness() {
    let (r, code) = run(&["quasipure", path(&data("special.json"))]);
    assert_eq!(code, 1);
    assert_eq!(r["verdict"]["status"], "NotQuasiPure");
    let w: Vec<[f64; 2]> = serde_json::from_value(r["verdict"]["witness"].clone()).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for [re, im] in w {
        assert!((re - s).abs() < 1e-6 && im.abs() < 1e-6);
    }
}

#[test]
fn quasipure_choi_rank_above_input_dimension() {
    let (r, code) = run(&["quasipure", path(&data("choi-rank-three.json"))]);
    assert_eq!(code, 1);
    assert_eq!(r["verdict"]["status"], "NotQuasiPure");
}

#[test]
fn quasipure_rejects_non_cp_with_exit_one() {
    let out = cpkit(&["quasipure", path(&data("transpose.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not completely positive"));
}

#[test]
fn complete_recovers_quasipure_map() {
    let (r, code) = run(&[
        "complete",
        path(&data("special.json")),
        path(&data("r-mixed.json")),
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["feasible"], true);
    let (r, code) = run(&[
        "complete",
        path(&data("first-example.json")),
        path(&data("r-mixed.json")),
    ]);
    assert_eq!(code, 0);
    assert!(r["distance_to_input_map"].as_f64().unwrap() <= 1e-8);
    assert!(r["route_discrepancy"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn complete_infeasible_block_reports_certificate() {
    let (r, code) = run(&[
        "complete",
        path(&data("infeasible-beta.json")),
        path(&data("r-e11.json")),
    ]);
    assert_eq!(code, 1);
    assert_eq!(r["feasible"], false);
    assert!(r["certificate"]["min_eigenvalue"].as_f64().unwrap() < 0.0);
}

#[test]
fn complete_routes_agree_on_random_maps() {
    let mut rng = sample::rng(11);
    for t in 0..5 {
        let phi = sample::cp_map(&mut rng, 2, 3, 1 + t % 3);
        let r = sample::gaussian_matrix(&mut rng, 3, 2) * sample::gaussian_matrix(&mut rng, 2, 3);
        let map = write_map(&format!("route-map-{t}.json"), &phi);
        let op = write(
            &format!("route-r-{t}.json"),
            &json!({ "matrix": matrix(&r) }),
        );
        let (rep, code) = run(&["complete", path(&map), path(&op), "--route", "both"]);
        assert_eq!(code, 0);
        assert!(rep["route_discrepancy"].as_f64().unwrap() <= 1e-8, "{rep}");
        for route in ["choi", "stinespring"] {
            let (single, code) = run(&["complete", path(&map), path(&op), "--route", route]);
            assert_eq!(code, 0);
            assert_eq!(single["route_discrepancy"], Value::Null);
        }
    }
}

#[test]
fn aeq_identical_files() {
    let f = data("special.json");
    let (r, code) = run(&["aeq", path(&f), path(&f), "--r", path(&data("r-e11.json"))]);
    assert_eq!(code, 0);
    assert_eq!(r["equivalent"], true);
    assert_eq!(r["maps_equal"], true);
}

#[test]
fn aeq_counterexample_from_demo() {
    let (report, code) = run(&["demo", "--export", "non-quasi-pure", "--seed", "3"]);
    assert_eq!(code, 0);
    let d = &report["detail"];
    let phi = write("cx-phi.json", &d["map"]);
    let psi = write("cx-psi.json", &d["psi"]);
    let r = write("cx-r.json", &json!({ "matrix": d["r"] }));
    let (rep, code) = run(&["aeq", path(&phi), path(&psi), "--r", path(&r)]);
    assert_eq!(code, 0);
    assert_eq!(rep["equivalent"], true);
    assert_eq!(rep["maps_equal"], false);
    assert_eq!(rep["rigidity"]["verdict"], "NotApplicable");
}

#[test]
fn aeq_rigidity_for_quasipure_map() {
    let tol = Tolerance::default();
    let mut rng = sample::rng(5);
    let phi = sample::eb_quasipure(&mut rng, 2, 3, 2);
    let r = sample::gaussian_matrix(&mut rng, 3, 3);
    let alpha =
        minimal_cp_completion_choi(&PartialCpMap::from_map(&phi, &r, &tol).unwrap(), &tol).unwrap();
    let rest = phi.apply_identity() - alpha.apply_identity();
    let filler = CpMap::from_action(2, 3, |i, j| {
        &rest * C64::from(if i == j { 0.5 } else { 0.0 })
    })
    .unwrap();
    let psi = alpha.add(&filler).unwrap();
    let phi_file = write_map("rig-phi.json", &phi);
    let psi_file = write_map("rig-psi.json", &psi);
    let r_file = write("rig-r.json", &json!({ "matrix": matrix(&r) }));
    let (rep, code) = run(&[
        "aeq",
        path(&phi_file),
        path(&psi_file),
        "--r",
        path(&r_file),
    ]);
    assert_eq!(code, 0);
    assert_eq!(rep["rigidity"]["verdict"], "TheoremHolds");
    assert_eq!(rep["maps_equal"], true);
}

#[test]
fn aeq_reference_map() {
    let id = data("identity.json");
    let xi = write(
        "xi-state.json",
        &json!({ "d_in": 2, "d_out": 1, "kraus": [[[[0.5f64.sqrt(), 0.0]], [[0.0, 0.0]]], [[[0.0, 0.0]], [[0.5f64.sqrt(), 0.0]]]] }),
    );
    let (rep, code) = run(&["aeq", path(&id), path(&id), "--xi", path(&xi)]);
    assert_eq!(code, 0);
    assert_eq!(rep["context"], "reference");
    assert_eq!(rep["rigidity"]["verdict"], "TheoremHolds");
    let (rep, code) = run(&[
        "aeq",
        path(&id),
        path(&data("special.json")),
        "--xi",
        path(&xi),
    ]);
    assert_eq!(code, 1);
    assert_eq!(rep["equivalent"], false);
}

#[test]
fn demo_list_and_tampered_tolerance() {
    let out = cpkit(&["demo", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "first-example",
        "special",
        "non-quasi-pure",
        "decomposition",
        "rigidity",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
    assert!(!text.contains("PASS"));
    for bad in [
        ["--tol-psd", "0"],
        ["--tol-eq", "NaN"],
        ["--tol-rank", "0.5"],
    ] {
        let out = cpkit(&[bad[0], bad[1], "demo"]);
        assert_ne!(out.status.code(), Some(0), "{bad:?}");
    }
    assert_eq!(
        cpkit(&["demo", "--export", "no-such-example"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn reports_are_stable_and_reserialize_identically() {
    let map = data("first-example.json");
    let args = ["quasipure", path(&map), "--seed", "4"];
    let a = cpkit(&args);
    let b = cpkit(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", text);
    assert_eq!(v["seed"], 4);
    assert!(v.get("wall_time_s").is_none());
    let (timed, _) = run(&["quasipure", path(&map), "--timing"]);
    assert!(timed["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn randomized_search_is_inconclusive_unless_permissive() {
    let map = data("three-factors.json");
    for args in [
        vec!["quasipure", path(&map)],
        vec!["quasipure", path(&map), "--strict"],
    ] {
        let (r, code) = run(&args);
        assert_eq!(code, 3);
        assert_eq!(r["verdict"]["status"], "Inconclusive");
        assert_eq!(r["verdict"]["method"], "RandomizedNoCounterexample");
    }
    let (r, code) = run(&["quasipure", path(&map), "--strict=false"]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"]["status"], "QuasiPure");
    assert_eq!(r["verdict"]["proof_grade"], false);
}
