//! End-to-end runs of the `echomem` binary.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[protocol]
variant = "backward_echo"

[signal]
tau = 0.5

[control]
kind = "sech_chirp"
omega0 = 10.0
tau = 0.5
mu = -5.0

[line]
kind = "flat"
cutoff = 24.0

[scan]
detuning = [-1.0, 0.0]
zeta_l = [0.3, 0.5]
maps = ["rephasing", "excitation"]
"#;

fn echomem(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_echomem"));
    cmd.args(args).env_remove("ECHOMEM_OUT");
    if let Some(p) = env_out {
        cmd.env("ECHOMEM_OUT", p);
    }
    cmd.output().unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn outputs_are_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let mut runs = Vec::new();
    for (i, w) in ["1", "3", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        let o = echomem(&["run", cfg.to_str().unwrap(), "--workers", w, "--out", out.to_str().unwrap()], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        runs.push(files(&out));
    }
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["excitation_map.csv", "manifest.json", "rephasing_map.csv", "scan.csv"]);
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);

    let manifest: serde_json::Value = serde_json::from_slice(&runs[0][1].1).unwrap();
    let listed: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert_eq!(listed, ["scan.csv", "rephasing_map.csv", "excitation_map.csv"]);
    assert_eq!(manifest["failures"], 0);
    assert_eq!(manifest["config"]["schedule"]["t3"], 4.0 * manifest["config"]["schedule"]["t1"].as_f64().unwrap());
}

#[test]
fn output_root_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    let text = SMALL.replace("zeta_l = [0.3, 0.5]", "zeta_l = [0.2]\nout = \"from_config\"");
    std::fs::write(&cfg, text).unwrap();
    let env_dir = tmp.path().join("from_env");
    let flag_dir = tmp.path().join("from_flag");
    let o = echomem(&["map", cfg.to_str().unwrap(), "--out", flag_dir.to_str().unwrap()], Some(&env_dir));
    assert!(o.status.success());
    assert!(flag_dir.join("manifest.json").exists());
    assert!(!env_dir.exists());
    let o = echomem(&["map", cfg.to_str().unwrap()], Some(&env_dir));
    assert!(o.status.success());
    assert!(env_dir.join("rephasing_map.csv").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, SMALL.replace("mu = -5.0", "mu = -5.0\nsweep = 2")).unwrap();
    let o = echomem(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sweep") && err.contains("line 13"), "{err}");

    std::fs::write(&cfg, SMALL.replace("[scan]", "[schedule]\nt1 = 6.0\nt2 = 18.0\nt3 = 25.0\n\n[scan]")).unwrap();
    let o = echomem(&["run", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schedule"));

    let o = echomem(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn render_writes_svg_or_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("m.csv");
    std::fs::write(&csv, "delta,zeta,abs_prod\n-1,0,1\n1,0,1\n-1,1,0.5\n1,1,0.5\n").unwrap();
    let o = echomem(&["render", csv.to_str().unwrap(), "--contour", "0.9"], None);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(tmp.path().join("m.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<path"));

    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = echomem(&["render", empty.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(!tmp.path().join("empty.svg").exists());
}
