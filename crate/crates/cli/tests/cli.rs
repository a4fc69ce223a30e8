use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treeweyl"))
}

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV artifact as floats keyed by column name.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = csv_rows(text);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn write_config(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn msweep_free_measure() {
    let out = stdout(&run(&["msweep"], &sample("msweep_free.json")));
    let m = column(&out, "re_m_riccati");
    let mk = column(&out, "re_m_krein");
    assert_eq!(m, vec![-1.0, -2.0, -4.0]);
    assert_eq!(mk, vec![-1.0, -2.0, -4.0]);
    assert!(column(&out, "disagreement").iter().all(|&d| d <= 1e-12));
    assert!(out.contains("# config_sha256: "));
}

#[test]
fn asymptotics_ratio_approaches_one() {
    let out = stdout(&run(&["asymptotics"], &sample("asymptotics_one_atom.json")));
    let ratio = column(&out, "ratio");
    let oracle = column(&out, "ratio_riccati");
    assert!((ratio.last().unwrap() - 1.0).abs() < 1e-2);
    for (r, o) in ratio.iter().zip(&oracle).take(6) {
        assert!((r - o).abs() < 1e-6);
    }
}

#[test]
fn periodicity_json() {
    let out = stdout(&run(&["periodicity", "--format", "json"], &sample("periodicity.json")));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"], serde_json::json!({"start": 1, "period": 2}));
    assert_eq!(v["horizon"], "8");
}

#[test]
fn decompose_json_components() {
    let out = stdout(&run(&["decompose", "--format", "json"], &sample("decompose_tree.json")));
    let v: Value = serde_json::from_str(&out).unwrap();
    let comps = v["result"].as_array().unwrap();
    let mult: Vec<u64> = comps.iter().map(|c| c["multiplicity"].as_u64().unwrap()).collect();
    assert_eq!(mult, vec![1, 1, 4]);
    assert_eq!(comps[1]["atoms"][0]["t"], 1.0);
    assert_eq!(comps[1]["atoms"][0]["b"], 3.0);
}

#[test]
fn density_of_free_half_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "free.json",
        r#"{"measure": {"epsilon": 1, "C": 4, "atoms": []}, "command": {"energies": [1, 4]}}"#,
    );
    let out = stdout(&run(&["density"], &cfg));
    let d = column(&out, "density");
    assert!((d[0] - 1.0 / std::f64::consts::PI).abs() < 1e-8);
    assert!((d[1] / d[0] - 2.0).abs() < 1e-8);
}

#[test]
fn deterministic_across_threads() {
    let cfg = sample("msweep_random.json");
    let a = stdout(&run(&["msweep", "--threads", "1"], &cfg));
    let b = stdout(&run(&["msweep", "--threads", "4"], &cfg));
    assert_eq!(a, b);
    let c = stdout(&run(&["msweep", "--seed", "43"], &cfg));
    assert_ne!(a, c);
    assert!(c.contains("# seed: 43"));
}

#[test]
fn output_file_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.dat");
    let o = bin()
        .args(["sparse", "--format", "gnuplot", "--out"])
        .arg(&out)
        .arg("--config")
        .arg(sample("sparse_schedule.json"))
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 4);
    assert!(data.iter().all(|l| l.split(' ').count() == 7));
}

#[test]
fn schema_errors_exit_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{"measure": {"epsilon": 1, "C": 4, "atoms": []}, "command": {"kappas": [1, "two"]}}"#,
    );
    let o = run(&["msweep"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("command.kappas[1]"));

    let cfg = write_config(
        &dir,
        "grid.json",
        r#"{"measure": {"epsilon": 1, "C": 4, "atoms": []}, "command": {"energies": [2, 1]}}"#,
    );
    let o = run(&["density"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("command.energies[1]"));

    let cfg = write_config(&dir, "missing.json", r#"{"command": {"kappas": [1]}}"#);
    let o = run(&["msweep"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`measure`"));
}

#[test]
fn insufficient_truncation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let atoms: Vec<String> = (1..=12).map(|n| format!(r#"{{"t": {n}, "b": 4}}"#)).collect();
    let body = format!(
        r#"{{"measure": {{"epsilon": 1, "C": 4, "atoms": [{}]}}, "command": {{"kappas": [0.5], "truncation": 1}}}}"#,
        atoms.join(",")
    );
    let cfg = write_config(&dir, "trunc.json", &body);
    let o = run(&["msweep"], &cfg);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("atoms required"), "{err}");
}

#[test]
fn stale_artifacts_are_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"command": {"sequence": [5,2,3,2,3,2,3,2], "max_value": 9, "max_start": 2, "max_period": 2}}"#);
    for format in ["csv", "json"] {
        let art = dir.path().join(format!("out.{format}"));
        let o = bin()
            .args(["periodicity", "--format", format, "--out"])
            .arg(&art)
            .arg("--config")
            .arg(&cfg)
            .output()
            .unwrap();
        assert!(o.status.success());
        let check = |cfg: &Path| bin().arg("check").arg(&art).arg("--config").arg(cfg).output().unwrap();
        assert_eq!(check(&cfg).status.code(), Some(0));
        let other = write_config(&dir, "d.json", r#"{"command": {"sequence": [5,2,3,2,3,2,3,2,3], "max_value": 9, "max_start": 2, "max_period": 2}}"#);
        assert_eq!(check(&other).status.code(), Some(4));
    }
}
