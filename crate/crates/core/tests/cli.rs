//! End-to-end checks of the command-line surface.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uavsim"))
}

fn short_config(dir: &std::path::Path) -> std::path::PathBuf {
    // a trimmed mission keeps these tests quick
    let mut cfg = uavsim::scenario::default_scenario();
    cfg.mission_cap_slots = 4;
    cfg.horizon_slots = 3;
    cfg.ao_max_iters = 2;
    let path = dir.join("short.cfg");
    std::fs::write(&path, uavsim::scenario::save_scenario(&cfg)).unwrap();
    path
}

#[test]
fn run_subcommand_emits_trace_and_summary() {
    let dir = std::env::temp_dir().join("uavsim-cli-run");
    let _ = std::fs::remove_dir_all(&dir);
    let cfg = short_config(&std::env::temp_dir());
    let out = bin()
        .args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "4",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("mission.csv")).unwrap();
    assert!(csv.starts_with("# schema=uavsim-trace-v1"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("mission_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["schema_version"], "uavsim-trace-v1");
    assert_eq!(summary["seed"], 4);
}

#[test]
fn sweep_subcommand_single_point() {
    let dir = std::env::temp_dir().join("uavsim-cli-sweep");
    let _ = std::fs::remove_dir_all(&dir);
    let cfg = short_config(&std::env::temp_dir());
    let out = bin()
        .args([
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--param",
            "disturbance_m",
            "--values",
            "0",
            "--schemes",
            "online",
            "--seeds",
            "2",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("# schema="));
    let rows = uavsim::experiments::read_csv(&csv).unwrap();
    assert!(rows.iter().any(|r| r.metric == "terminal_distance_m"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], "uavsim-sweep-v1");
    // aggregates must match the raw rows
    let td_row = rows.iter().find(|r| r.metric == "terminal_distance_m").unwrap();
    let agg = json["aggregates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["metric"] == "terminal_distance_m")
        .unwrap();
    assert!((agg["mean"].as_f64().unwrap() - td_row.metric_value).abs() < 1e-12);
}

#[test]
fn unknown_scheme_is_a_machine_readable_error() {
    let out = bin().args(["baseline", "--scheme", "nonsense"]).output().unwrap();
    assert!(!out.status.success());
    let err: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert!(err["error"].as_str().unwrap().contains("nonsense"));
}

#[test]
fn invalid_config_is_rejected_with_field_name() {
    let dir = std::env::temp_dir();
    let path = dir.join("bad.cfg");
    std::fs::write(&path, "error_prob = 0.9\n").unwrap();
    let out = bin().args(["run", "--config", path.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error_prob"), "stderr: {err}");
}

#[test]
fn shipped_default_config_loads() {
    let text = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.cfg"),
    )
    .unwrap();
    let cfg = uavsim::scenario::load_scenario(&text).unwrap();
    assert_eq!(cfg.num_users, 3);
    assert_eq!(cfg.p_max_w, 230.0);
}
