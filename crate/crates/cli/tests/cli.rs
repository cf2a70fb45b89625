use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_magnon-ghz"))
}

fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--output-dir").arg(out).args(extra).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fig3_system(n: usize) -> Value {
    json!({"squeezed_frame": {
        "n_spins": n,
        "delta_q": {"value": 60, "unit": "natural"},
        "omega_m_tilde": {"value": 10, "unit": "natural"},
        "big_g": {"value": 1, "unit": "natural"},
        "r": 3.0,
        "gamma_m": {"value": 0.005, "unit": "natural"},
        "gamma_q": {"value": 1.5e-4, "unit": "natural"},
        "fock_cutoff": 6
    }})
}

fn bistability_config() -> Value {
    json!({"bistability": {
        "gamma_m": 1.0,
        "kerr_k": 1.56e-12,
        "drive_ratios": [0.5, 1.0, 1.5],
        "delta_m": {"start": 0.0, "stop": 3.0, "points": 601}
    }})
}

/// (δ_m, stable) rows of a sweep CSV.
fn stability_rows(path: &Path) -> Vec<(f64, bool)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "delta_m,kappa,stable,r,branch_id");
    lines
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            (cols[0].parse().unwrap(), cols[2] == "true")
        })
        .collect()
}

#[test]
fn two_study_blocks_exit_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = bistability_config();
    config["ghz"] = json!({});
    let path = write_config(dir.path(), "bad.json", &config);
    let out = dir.path().join("out");
    let o = run(&path, &out, &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("exactly one study"));
    assert!(!out.exists());
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = bistability_config();
    config["bistability"]["drive_ratios"] = json!("many");
    let path = write_config(dir.path(), "bad.json", &config);
    let o = run(&path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bistability.drive_ratios"), "{}", stderr(&o));

    let missing = run(&dir.path().join("nope.json"), &dir.path().join("out"), &[]);
    assert_eq!(missing.status.code(), Some(2));

    let o = run(&path, &dir.path().join("out"), &["--override", "bistability.drive_ratios=[1.5, 1.2]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("increasing"), "{}", stderr(&o));
}

#[test]
fn bistability_writes_one_csv_per_regime() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "b.json", &bistability_config());
    let out = dir.path().join("out");
    let o = run(&path, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));

    let below = stability_rows(&out.join("bistability_drive_0.5.csv"));
    assert_eq!(below.len(), 601);
    assert!(below.iter().all(|r| r.1));

    let above = stability_rows(&out.join("bistability_drive_1.5.csv"));
    let unstable: Vec<f64> = above.iter().filter(|r| !r.1).map(|r| r.0).collect();
    assert!(!unstable.is_empty());
    let meta: Value = serde_json::from_str(&fs::read_to_string(out.join("bistability.json")).unwrap()).unwrap();
    let window = &meta["regimes"][2]["window"];
    let (lo, hi) = (window[0]["delta_m"].as_f64().unwrap(), window[1]["delta_m"].as_f64().unwrap());
    // Unstable roots exist only inside the bistable window, where there are three roots per δ.
    assert!(unstable.iter().all(|d| *d > lo && *d < hi));
    let inside = above.iter().filter(|r| r.0 > lo && r.0 < hi).count();
    assert_eq!(inside, 3 * unstable.len());

    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["files"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn identical_configs_give_identical_data() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({"squeezing": {
        "gamma_m": 1.0, "kerr_k": 1.56e-12, "drive_ratio": 1.5,
        "delta_m": {"start": 0.0, "stop": 3.0, "points": 401}
    }});
    let path = write_config(dir.path(), "s.json", &config);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&path, &a, &[]).status.success());
    assert!(run(&path, &b, &["--threads", "1"]).status.success());
    for name in ["squeezing.csv", "squeezing.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn ghz_closed_two_spins() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({"system": fig3_system(2), "ghz": {"points": 1201}});
    let path = write_config(dir.path(), "g.json", &config);
    let out = dir.path().join("out");
    let o = run(&path, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("ghz_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["N"], 2);
    assert!(summary["first_peak_fidelity"].as_f64().unwrap() >= 0.98);
    let trace = fs::read_to_string(out.join("ghz_trace.csv")).unwrap();
    assert!(trace.starts_with("t,chi_t,fidelity\n"));
    assert_eq!(trace.lines().count(), 1202);
}

#[test]
fn overrides_reach_nested_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({"system": fig3_system(2), "ghz": {"points": 601}});
    let path = write_config(dir.path(), "g.json", &config);
    let out = dir.path().join("out");
    let o = run(&path, &out, &["--override", "system.squeezed_frame.n_spins=3", "--override", "ghz.points=801"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("ghz_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["N"], 3);
    assert_eq!(fs::read_to_string(out.join("ghz_trace.csv")).unwrap().lines().count(), 802);
}

#[test]
fn integrator_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({
        "system": fig3_system(2),
        "tolerances": {"max_steps": 5},
        "ghz": {"dissipative": true, "points": 51}
    });
    let path = write_config(dir.path(), "g.json", &config);
    let out = dir.path().join("out");
    let o = run(&path, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("fidelity trace"));
    assert!(!out.exists());
}

#[test]
fn effective_check_flags_the_regime() {
    let dir = tempfile::tempdir().unwrap();
    let report = |big_g: f64| {
        let mut system = fig3_system(2);
        system["squeezed_frame"]["big_g"]["value"] = json!(big_g);
        system["squeezed_frame"]["fock_cutoff"] = json!(10);
        let path = write_config(dir.path(), "e.json", &json!({"system": system, "effective_check": {"samples": 300}}));
        let out = dir.path().join(format!("out_{big_g}"));
        let o = run(&path, &out, &[]);
        assert!(o.status.success(), "{}", stderr(&o));
        serde_json::from_str::<Value>(&fs::read_to_string(out.join("effective_check.json")).unwrap()).unwrap()
    };
    let caption = report(1.0);
    let caption_gap = caption["max_fidelity_gap"].as_f64().unwrap();
    assert!(caption_gap < 0.01);
    assert!(caption["regime_warning"].is_null());
    assert!(caption["chi_fitted"].is_number());

    let violated = report(25.0);
    assert!(violated["regime_warning"].as_str().unwrap().contains("dispersive"));
    assert!(violated["max_fidelity_gap"].as_f64().unwrap() > 10.0 * caption_gap);
}

#[test]
fn broadening_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({"broadening": {
        "r_values": [3.0, 3.5],
        "delta_omega": {"values": [0.0, 1.82]},
        "fock_cutoff": 6
    }});
    let path = write_config(dir.path(), "t.json", &config);
    let out = dir.path().join("out");
    let o = run(&path, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("broadening_table.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], vec!["delta_omega_MHz", "r3", "r3_5"]);
    assert_eq!(rows[2][0], "1.82");
    let f = |i: usize, k: usize| rows[i][k].parse::<f64>().unwrap();
    assert!(f(2, 1) < f(1, 1) && f(2, 2) > f(2, 1));
}

#[test]
fn studies_lists_the_registry() {
    let o = bin().arg("studies").output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["bistability", "squeezing", "ghz", "ghz_sweep", "broadening", "effective_check"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn ghz_sweep_rows_follow_the_product_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = json!({"system": fig3_system(2), "ghz_sweep": {
        "n_values": [2, 3], "r_values": [3.0], "cutoffs": [4, 6], "points": 601
    }});
    let path = write_config(dir.path(), "s.json", &config);
    let out = dir.path().join("out");
    let o = run(&path, &out, &["--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("ghz_sweep.csv")).unwrap();
    let keys: Vec<(String, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].to_string(), c[2].to_string())
        })
        .collect();
    let expected = [("2", "4"), ("2", "6"), ("3", "4"), ("3", "6")];
    assert_eq!(keys, expected.map(|(a, b)| (a.to_string(), b.to_string())));
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(5).unwrap().parse::<f64>().unwrap() > 0.99));
}
