use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cfmimo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfmimo"))
        .args(args)
        .output()
        .unwrap()
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("cfg.json");
    fs::write(
        &path,
        r#"{"n_aps": 10, "n_gues": 4, "n_uavs": 2, "n_ap_antennas": 2, "tau_p": 4,
            "association_mode": {"mode": "uc", "serving_aps": 5}, "dl_policy": "wfpc"}"#,
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

fn error_line(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr line");
    serde_json::from_str(line).expect("JSON error line")
}

#[test]
fn run_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = cfmimo(&[
        "run",
        "--config",
        &cfg,
        "--drops",
        "3",
        "--fading-trials",
        "4",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cdf = fs::read_to_string(out.join("cdf_gue_dl_lb.csv")).unwrap();
    assert!(cdf.starts_with("rate_bps,cdf\n"));
    assert_eq!(cdf.lines().count(), 1 + 12);
    assert!(out.join("summary.csv").exists());

    let s = cfmimo(&["summarize", "--in", out.to_str().unwrap()]);
    assert!(s.status.success());
    let table = String::from_utf8_lossy(&s.stdout);
    assert!(table.lines().next().unwrap().contains("median_Mbps"));
    assert_eq!(table.lines().count(), 9);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = cfmimo(&[
            "run",
            "--config",
            &cfg,
            "--drops",
            "2",
            "--fading-trials",
            "3",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    for f in fs::read_dir(dir.path().join("a")).unwrap() {
        let name = f.unwrap().file_name();
        assert_eq!(
            fs::read(dir.path().join("a").join(&name)).unwrap(),
            fs::read(dir.path().join("b").join(&name)).unwrap()
        );
    }
}

#[test]
fn missing_config_fails_with_io_error() {
    let o = cfmimo(&[
        "run",
        "--config",
        "/nonexistent/cfg.json",
        "--out",
        "/tmp/x",
    ]);
    assert!(!o.status.success());
    assert_eq!(error_line(&o)["error"]["kind"], "io");
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"tau_p": 300}"#).unwrap();
    let o = cfmimo(&[
        "run",
        "--config",
        bad.to_str().unwrap(),
        "--drops",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert_eq!(error_line(&o)["error"]["kind"], "config");

    fs::write(&bad, r#"{"n_apps": 3}"#).unwrap();
    let o = cfmimo(&[
        "run",
        "--config",
        bad.to_str().unwrap(),
        "--drops",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(error_line(&o)["error"]["kind"], "parse");
}

#[test]
fn bad_arguments_give_usage_error() {
    let o = cfmimo(&["run", "--drops", "many"]);
    assert!(!o.status.success());
    assert_eq!(error_line(&o)["error"]["kind"], "usage");
    assert!(cfmimo(&["--help"]).status.success());
}

#[test]
fn summarize_missing_dir_fails() {
    let o = cfmimo(&["summarize", "--in", "/nonexistent/dir"]);
    assert!(!o.status.success());
    assert!(error_line(&o)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("not a directory"));
}

#[test]
fn shipped_configs_parse() {
    use cfmimo_core::SystemConfig;
    let reference = SystemConfig::from_json(include_str!("../../../configs/reference.json")).unwrap();
    assert_eq!(reference, SystemConfig::default());
    for text in [
        include_str!("../../../configs/cf_wfpc.json"),
        include_str!("../../../configs/uc10_ppa.json"),
    ] {
        SystemConfig::from_json(text).unwrap();
    }
}
