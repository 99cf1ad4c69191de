use std::path::PathBuf;
use std::process::{Command, Output};

use opendecay::harness::ResultTable;

fn opendecay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opendecay"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("opendecay-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn flags_win_over_the_config_file() {
    let cfg = scratch("eta.cfg");
    std::fs::write(&cfg, "scenario = spin_master\neta = 1\ntau_points = 5\n").unwrap();
    let out = opendecay(&["spin_master", "--config", cfg.to_str().unwrap(), "--eta", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = ResultTable::from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(table.metadata["eta"], "2.0");
    assert_eq!(table.metadata["tol"], "1e-10");
    assert_eq!(table.rows(), 5);
}

#[test]
fn exit_codes() {
    assert_eq!(opendecay(&["spin_master", "--etaa", "1"]).status.code(), Some(1));
    assert_eq!(opendecay(&["qbm_sweep"]).status.code(), Some(1));
    assert_eq!(opendecay(&["no_such_scenario"]).status.code(), Some(1));
    assert_eq!(
        opendecay(&["spin_master", "--tau_points", "many"]).status.code(),
        Some(1)
    );
    let degenerate = opendecay(&["spin_master", "--epsilon", "0", "--delta", "0"]);
    assert_eq!(degenerate.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&degenerate.stderr).contains("spin_master"));
}

#[test]
fn files_round_trip_and_runs_are_reproducible() {
    let data = |path: &PathBuf, format: &str| {
        let out = opendecay(&[
            "bridge_check",
            "--tau_points",
            "30",
            "--output",
            path.to_str().unwrap(),
            "--format",
            format,
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(path).unwrap()
    };
    let csv = data(&scratch("a.csv"), "csv");
    assert!(csv.starts_with("# scenario=bridge_check\n"));
    let again = data(&scratch("b.csv"), "csv");
    let body = |s: &str| s.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&csv), body(&again));

    let json = ResultTable::from_json(&data(&scratch("a.json"), "json")).unwrap();
    let from_csv = ResultTable::from_csv(&csv).unwrap();
    assert_eq!(json.columns, from_csv.columns);
    assert!(json.column("discrepancy").unwrap().iter().all(|d| *d < 1e-8));
}

#[test]
fn weak_compare_ratio_is_two() {
    let out = opendecay(&["weak_compare", "--temperature_list", "0.2,1,3"]);
    let table = ResultTable::from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(table.rows(), 3);
    assert!(table.column("ratio").unwrap().iter().all(|r| (r - 2.0).abs() < 1e-12));
}

#[test]
fn qbm_sweep_errors_shrink_with_coupling() {
    let out = opendecay(&["qbm_sweep", "--lambda_list", "0.4,0.2", "--tau_max", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = ResultTable::from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    for name in ["err_d_xx", "err_d_xp", "err_gamma_xp"] {
        let e = table.column(name).unwrap();
        assert!(e[1] < e[0], "{name}: {e:?}");
    }
}
