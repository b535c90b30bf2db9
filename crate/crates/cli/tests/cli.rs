use std::path::Path;
use std::process::{Command, Output};

fn ledgerlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ledgerlink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rates_writes_its_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = ledgerlink(&["rates", "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ethereum"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn case2_honours_config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# small run\ncase2.n = 50\ncase2.periods = 4\nseeds = 3\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = ledgerlink(&[
        "case2",
        "--config",
        path(&conf),
        "--set",
        "case2.methods=a,b",
        "--out",
        path(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("case2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
}

#[test]
fn case1_runs_one_dlt() {
    let dir = tempfile::tempdir().unwrap();
    let out = ledgerlink(&[
        "case1",
        "--set",
        "dlt=fabric",
        "--set",
        "seeds=1",
        "--set",
        "case1.horizon_weeks=2",
        "--out",
        path(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("case1_fabric.csv").exists());
    assert!(!dir.path().join("case1_bitcoin.csv").exists());
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ledgerlink(&["toa", "--set", "lorawan.bogus=1", "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lorawan.bogus"));
    assert!(!dir.path().join("toa.csv").exists());
}

#[test]
fn invalid_value_and_missing_file_exit_with_config_error() {
    let out = ledgerlink(&["case2", "--set", "case2.p=1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ledgerlink(&["case2", "--config", "/nonexistent/run.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn show_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = ledgerlink(&["show-config", "--set", "case2.p=0.25"]);
    assert!(out.status.success());
    let conf = dir.path().join("echo.conf");
    std::fs::write(&conf, &out.stdout).unwrap();
    let again = ledgerlink(&["show-config", "--config", path(&conf)]);
    assert!(again.status.success());
    assert_eq!(out.stdout, again.stdout);
}
