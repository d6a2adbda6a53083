use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_avgrestrict"))
}

fn run_with(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sphere_measure_rows_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), r#"{"measure": {"kind": "sphere", "n": 100}, "seed": 1}"#, &["measure"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("out/measure.csv"));
    assert_eq!(rows.len(), 100);
    for r in &rows {
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.01);
        // 17 significant digits.
        assert_eq!(r[0].split('e').next().unwrap().trim_start_matches('-').len(), 18);
    }
    let side = read_json(&dir.path().join("out/measure.json"));
    assert_eq!(side["count"], 100);
    assert_eq!(side["meta"]["builder"], "sphere");
}

#[test]
fn fractal_stage_one_has_27_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        r#"{"measure": {"kind": "fractal", "s": 2, "stage": 1}, "seed": 1}"#,
        &["measure"],
    );
    assert!(out.status.success());
    assert_eq!(read_csv(&dir.path().join("out/measure.csv")).len(), 27);
}

#[test]
fn invalid_kind_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), r#"{"measure": {"kind": "torus", "n": 10}, "seed": 1}"#, &["measure"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config.json"));
}

#[test]
fn builder_failure_is_reported_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        r#"{"measure": {"kind": "fractal", "s": 4, "stage": 1}, "seed": 1}"#,
        &["measure"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("building fractal measure"));
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), "{}", &["verify"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    let out = run_with(dir.path(), r#"{"measure": {"kind": "sphere", "n": 20}}"#, &["measure"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_2() {
    let out = bin().args(["measure", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        r#"{"measure": {"kind": "sphere", "n": 20}, "seed": 1}"#,
        &["--seed", "77", "measure"],
    );
    assert!(out.status.success());
    let m = read_json(&dir.path().join("out/measure.manifest.json"));
    assert_eq!(m["seed"], 77);
    assert_eq!(m["config"]["seed"], 77);
}

#[test]
fn paraboloid_slope_near_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "measure": {"kind": "graph", "profile": "paraboloid", "n": 300},
        "annulus": {"t_min": 1, "t_max": 1, "t_count": 1,
                    "eps": [0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625]},
        "seed": 5
    }"#;
    let out = run_with(dir.path(), cfg, &["annulus"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = read_json(&dir.path().join("out/scaling_fit.json"));
    let slope = fit["fits"][0]["fit"]["slope"].as_f64().unwrap();
    assert!((0.85..=1.15).contains(&slope), "{slope}");
    assert_eq!(read_csv(&dir.path().join("out/annulus.csv")).len(), 5);
}

#[test]
fn two_atoms_have_flat_annulus_mass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "measure": {"kind": "atoms", "atoms": [[0, 0, 0, 0.5], [1, 0, 0, 0.5]]},
        "annulus": {"t_min": 1, "t_max": 1, "eps": [0.0625, 0.015625, 0.00390625]},
        "seed": 5
    }"#;
    let out = run_with(dir.path(), cfg, &["annulus"]);
    assert!(out.status.success());
    let fit = read_json(&dir.path().join("out/scaling_fit.json"));
    assert!(fit["fits"][0]["fit"]["slope"].as_f64().unwrap().abs() < 0.1);
    for row in read_csv(&dir.path().join("out/annulus.csv")) {
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.5);
    }
}

#[test]
fn rows_below_floor_are_flagged_and_excluded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "measure": {"kind": "sphere", "n": 4000},
        "annulus": {"t_min": 1, "t_max": 1, "eps": [0.5, 0.3, 0.01]},
        "seed": 5
    }"#;
    let out = run_with(dir.path(), cfg, &["annulus"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("discretization floor"));
    let rows = read_csv(&dir.path().join("out/annulus.csv"));
    assert_eq!(rows[2][4], "true");
    assert_eq!(rows[0][4], "false");
    let fit = read_json(&dir.path().join("out/scaling_fit.json"));
    assert_eq!(fit["fits"][0]["excluded"], 1);
    assert_eq!(fit["fits"][0]["used"], 2);
}

#[test]
fn single_atom_mixed_norm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "measure": {"kind": "atoms", "atoms": [[0.2, 0.1, 0, 1]]},
        "grid": {"R": 2, "n": 8}, "rotations": 16, "seed": 3
    }"#;
    let out = run_with(dir.path(), cfg, &["mixed-norm"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("out/mixed_norm.json"));
    assert!((r["lhs"].as_f64().unwrap() - 4f64.powf(0.75)).abs() < 1e-12);
    assert_eq!(r["grid"]["R"], 2.0);
    assert_eq!(read_csv(&dir.path().join("out/mixed_norm_nodes.csv")).len(), 512);
}

#[test]
fn energy_rows_and_threshold_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        r#"{"measure": {"kind": "atoms", "atoms": [[0, 0, 0, 1], [0, 0, 1, 1]]}, "energy": {"s_exp": [1, 2]}, "seed": 1}"#,
        &["energy"],
    );
    assert!(out.status.success());
    for row in read_csv(&dir.path().join("out/energy.csv")) {
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.5);
    }

    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"measure": {"kind": "fractal", "s": 2, "stage": 2, "fill": 1500}, "energy": {"s_exp": [2]}, "seed": 1}"#;
    let out = run_with(dir.path(), cfg, &["energy"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_csv(&dir.path().join("out/energy_threshold.csv"));
    assert_eq!(rows.len(), 3);
    let growth = |s: &str| -> f64 { rows.iter().find(|r| r[0].parse::<f64>().unwrap() == s.parse::<f64>().unwrap()).unwrap()[2].parse().unwrap() };
    assert!(growth("2.5") < growth("1.5"));
}

#[test]
fn identity_check_writes_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "measure": {"kind": "sphere", "n": 200},
        "identity": {"t": 1, "delta": 0.1, "freq_cutoff": 50, "mc_samples": 20000},
        "seed": 9
    }"#;
    let out = run_with(dir.path(), cfg, &["identity-check"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("out/identity.json"));
    let (p, f) = (r["physical"].as_f64().unwrap(), r["frequency"].as_f64().unwrap());
    assert!((p - f).abs() < 0.15 * p, "{p} {f}");
}

#[test]
fn identical_runs_give_identical_outputs() {
    let cfg = r#"{
        "measure": {"kind": "fractal", "s": 2, "stage": 2, "fill": 300},
        "density": "random-sign", "grid": {"R": 2, "n": 8}, "rotations": 16, "seed": 11
    }"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        assert!(run_with(d, cfg, &["measure"]).status.success());
        assert!(run_with(d, cfg, &["--threads", "2", "mixed-norm"]).status.success());
    }
    for f in ["measure.csv", "measure.json", "mixed_norm.json", "mixed_norm_nodes.csv"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn manifest_lists_outputs_and_hash_ignores_key_order() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out_a = run_with(a.path(), r#"{"seed": 4, "measure": {"kind": "sphere", "n": 30}}"#, &["measure"]);
    let out_b = run_with(b.path(), r#"{"measure": {"n": 30, "kind": "sphere"}, "seed": 4}"#, &["measure"]);
    assert!(out_a.status.success() && out_b.status.success());
    let ma = read_json(&a.path().join("out/measure.manifest.json"));
    let mb = read_json(&b.path().join("out/measure.manifest.json"));
    let outputs: Vec<&str> = ma["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(outputs.iter().any(|p| p.ends_with("measure.csv")));
    assert!(outputs.iter().any(|p| p.ends_with("measure.json")));
    for p in outputs {
        assert!(Path::new(p).exists());
    }
    // The output directory differs between the two runs, so compare hashes
    // with it pinned.
    let c = tempfile::tempdir().unwrap();
    let pinned = |text: &str| {
        assert!(run_with(c.path(), text, &["measure"]).status.success());
        read_json(&c.path().join("out/measure.manifest.json"))["config_hash"].clone()
    };
    let h1 = pinned(r#"{"seed": 4, "measure": {"kind": "sphere", "n": 30}}"#);
    let h2 = pinned(r#"{"measure": {"n": 30, "kind": "sphere"}, "seed": 4}"#);
    assert_eq!(h1, h2);
    assert_ne!(ma["config_hash"], mb["config_hash"]);
    assert!(ma["version"].is_string() && ma["started_at"].as_u64().unwrap() > 0);
}
