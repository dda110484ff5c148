//! End-to-end tests of the command surface: exit-code contract, artifact
//! layout, determinism of persisted snapshots, and the offline diagnose
//! pass agreeing with in-run records.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn beris() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beris"))
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "beris-cli-{tag}-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn base_config(out_dir: &Path) -> String {
    format!(
        r#"
[grid]
dim = 2
n = 32

[sim]
dt = 1e-3
t_final = 0.02
seed = 7

[potential]
variant = "ldg"
a = 0.03
b = 1.0
c = 1.0

[initial]
kind = "random-smooth"
amp_u = 0.5
amp_q = 0.4

[diagnostics]
families = ["energy", "maxprinciple"]

[output]
dir = "{}"
snapshot_cadence = 5
"#,
        out_dir.display()
    )
}

#[test]
fn run_produces_artifacts_and_manifest() {
    let dir = tempdir("run");
    let out = dir.join("out");
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, base_config(&out)).unwrap();
    let status = beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .status()
        .unwrap();
    assert!(status.success());
    for f in [
        "resolved_config.toml",
        "energy.csv",
        "maxprinciple.csv",
        "run_manifest.json",
        "summary.json",
        "final.snap",
        "snap_00000000.snap",
    ] {
        assert!(out.join(f).exists(), "missing artifact {f}");
    }
    assert!(!out.join("lock").exists(), "lock must be released");
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert!(manifest["artifacts"].as_array().unwrap().len() >= 5);
    // resolved config echoes defaulted values and reruns identically
    let echoed = fs::read_to_string(out.join("resolved_config.toml")).unwrap();
    assert!(echoed.contains("cfl_limit"));
    assert!(echoed.contains("integrator"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn fixed_seed_snapshots_are_byte_identical() {
    let dir = tempdir("det");
    let (out1, out2) = (dir.join("a"), dir.join("b"));
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, base_config(&dir.join("unused"))).unwrap();
    for out in [&out1, &out2] {
        let status = beris()
            .args(["run", "--config"])
            .arg(&cfg_path)
            .arg("--output")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["snap_00000000.snap", "snap_00000005.snap", "final.snap"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // a different seed produces different fields
    let out3 = dir.join("c");
    let status = beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .arg("--output")
        .arg(&out3)
        .args(["--seed", "8"])
        .status()
        .unwrap();
    assert!(status.success());
    assert_ne!(
        fs::read(out1.join("final.snap")).unwrap(),
        fs::read(out3.join("final.snap")).unwrap()
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn config_errors_exit_2_with_context() {
    let dir = tempdir("cfg");
    let cfg_path = dir.join("bad.toml");
    fs::write(
        &cfg_path,
        base_config(&dir.join("out")).replace("dt = 1e-3", "dt = 1e-3\nbogus_key = 1"),
    )
    .unwrap();
    let output = beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&output.stderr);
    assert!(msg.contains("bogus_key"), "stderr: {msg}");
    // the TOML error carries line/column anchors
    assert!(msg.contains("line"), "stderr: {msg}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn locked_output_directory_is_rejected() {
    let dir = tempdir("lock");
    let out = dir.join("out");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join("lock"), b"").unwrap();
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, base_config(&out)).unwrap();
    let output = beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn blowup_exits_3_and_dumps_last_good_state() {
    let dir = tempdir("blowup");
    let out = dir.join("out");
    let cfg = base_config(&out)
        .replace("dt = 1e-3", "dt = 0.9\ncfl_limit = 1e12")
        .replace("t_final = 0.02", "t_final = 20.0")
        .replace("amp_u = 0.5", "amp_u = 60.0");
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, cfg).unwrap();
    let output = beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert_eq!(
        output.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(out.join("last_good.snap").exists());
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "blow-up");
    // the dumped state is readable and finite
    let (_, _, u, _) = beris::snapshot::read_state(&out.join("last_good.snap")).unwrap();
    assert!(u.is_finite());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn cfl_auto_halving_is_logged_and_run_completes() {
    let dir = tempdir("cfl");
    let out = dir.join("out");
    let cfg = base_config(&out)
        .replace("dt = 1e-3", "dt = 0.05\ncfl_limit = 0.25")
        .replace("t_final = 0.02", "t_final = 0.5")
        .replace("amp_u = 0.5", "amp_u = 2.0");
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, cfg).unwrap();
    let status = beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .status()
        .unwrap();
    assert!(status.success(), "run with CFL halving must complete");
    let log = fs::read_to_string(out.join("run.log")).unwrap();
    assert!(log.contains("auto-halved"), "log: {log}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn diagnose_matches_in_run_records() {
    let dir = tempdir("diag");
    let out = dir.join("out");
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, base_config(&out)).unwrap();
    assert!(beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .status()
        .unwrap()
        .success());
    assert!(beris()
        .args(["diagnose", "--dir"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let parse_csv = |p: &Path| -> Vec<Vec<f64>> {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| {
                l.split(',')
                    .map(|c| c.parse().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect()
    };
    let inrun = parse_csv(&out.join("energy.csv"));
    let offline = parse_csv(&out.join("diagnose/energy.csv"));
    assert!(!offline.is_empty());
    let mut matched = 0;
    for row in &offline {
        if let Some(ir) = inrun.iter().find(|r| r[0] == row[0]) {
            for (a, b) in ir.iter().zip(row.iter()) {
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "in-run {a} vs offline {b}"
                );
            }
            matched += 1;
        }
    }
    assert!(
        matched >= 4,
        "only {matched} offline rows matched in-run rows"
    );
    // diagnose is deterministic: a second pass produces identical files
    let first = fs::read(out.join("diagnose/energy.csv")).unwrap();
    assert!(beris()
        .args(["diagnose", "--dir"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    assert_eq!(first, fs::read(out.join("diagnose/energy.csv")).unwrap());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn diagnose_rejects_corrupt_snapshots_with_exit_4() {
    let dir = tempdir("corrupt");
    let out = dir.join("out");
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, base_config(&out)).unwrap();
    assert!(beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .status()
        .unwrap()
        .success());
    // truncate one snapshot
    let victim = out.join("snap_00000005.snap");
    let bytes = fs::read(&victim).unwrap();
    fs::write(&victim, &bytes[..bytes.len() - 32]).unwrap();
    let output = beris()
        .args(["diagnose", "--dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    let msg = String::from_utf8_lossy(&output.stderr);
    assert!(
        msg.contains("snap_00000005.snap") && msg.contains("field data length"),
        "stderr must name the file and the failed field: {msg}"
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn potential_table_emits_rows() {
    let dir = tempdir("table");
    let cfg_path = dir.join("cfg.toml");
    let cfg = base_config(&dir.join("out")).replace(
        "variant = \"ldg\"\na = 0.03\nb = 1.0\nc = 1.0",
        "variant = \"bm\"\nnu = 1.0\nkappa = 4.0\nm = 100.0",
    );
    fs::write(&cfg_path, cfg).unwrap();
    let out_csv = dir.join("table.csv");
    let status = beris()
        .args(["potential-table", "--config"])
        .arg(&cfg_path)
        .args(["--samples", "8", "--m-sweep", "10,100"])
        .arg("--output")
        .arg(&out_csv)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out_csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("l1,l2,margin,value,grad_norm,iterations,error"));
    assert!(header.contains("gap_m_10") && header.contains("gap_m_100"));
    let rows: Vec<&str> = lines.collect();
    assert!(
        rows.len() > 10,
        "expected interior samples, got {}",
        rows.len()
    );
    // gaps shrink as the regularization strengthens (monotone convergence)
    let mut checked = 0;
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        let g10: f64 = cells[cells.len() - 2].parse().unwrap_or(f64::NAN);
        let g100: f64 = cells[cells.len() - 1].parse().unwrap_or(f64::NAN);
        if g10.is_finite() && g100.is_finite() && g10 > 1e-12 {
            assert!(g100 <= g10 + 1e-9, "gap not shrinking: {g10} -> {g100}");
            checked += 1;
        }
    }
    assert!(checked > 5);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn equilibrium_run_keeps_energy_constant() {
    // Quiescent isotropic data is a fixed point; every energy row is the
    // same number to rounding.
    let dir = tempdir("equil");
    let out = dir.join("out");
    let cfg = base_config(&out).replace(
        "kind = \"random-smooth\"\namp_u = 0.5\namp_q = 0.4",
        "kind = \"uniaxial-defect\"\ndefect_s = 0.0",
    );
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, cfg).unwrap();
    assert!(beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .status()
        .unwrap()
        .success());
    let text = fs::read_to_string(out.join("energy.csv")).unwrap();
    let totals: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(totals.len() > 10);
    for t in &totals {
        assert!(
            (t - totals[0]).abs() <= 1e-12 * totals[0].abs().max(1.0),
            "energy drifted: {} vs {}",
            t,
            totals[0]
        );
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn ckn_and_lei_artifacts_through_run_and_diagnose() {
    let dir = tempdir("ckndiag");
    let out = dir.join("out");
    let pi = std::f64::consts::PI;
    let cfg = format!(
        r#"
[grid]
dim = 2
n = 32

[sim]
dt = 1e-3
t_final = 0.8
seed = 3
store_cadence = 40
history_depth = 30

[potential]
variant = "ldg"
a = 0.03
b = 1.0
c = 1.0

[initial]
kind = "random-smooth"
amp_u = 0.4
amp_q = 0.3

[diagnostics]
families = ["energy", "ckn", "lei"]
ckn_centers = [[{pi}, {pi}, 0.0, 0.8]]
ckn_radii = [0.87, 0.85]
eps0 = 1.0
eps1 = 1.0
lei_center = [{pi}, {pi}, 0.0]
lei_t_eval = 0.8
lei_space_radius = 2.0
lei_time_radius = 0.4

[output]
dir = "{}"
snapshot_cadence = 40
"#,
        out.display()
    );
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, cfg).unwrap();
    assert!(beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .status()
        .unwrap()
        .success());
    assert!(out.join("ckn.csv").exists(), "in-run ckn stream");
    assert!(out.join("lei.csv").exists(), "in-run lei stream");
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["ckn"]["pass"].as_bool().unwrap());
    assert!(summary["lei"]["residual"].is_number());
    assert!(beris()
        .args(["diagnose", "--dir"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    assert!(out.join("diagnose/ckn_center_0.json").exists());
    assert!(out.join("diagnose/lei.json").exists());
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("diagnose/ckn_center_0.json")).unwrap()).unwrap();
    assert_eq!(report["radii"].as_array().unwrap().len(), 2);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn rerun_from_echoed_config_reproduces_artifact_hashes() {
    let dir = tempdir("echo");
    let out1 = dir.join("a");
    let cfg_path = dir.join("cfg.toml");
    fs::write(&cfg_path, base_config(&out1)).unwrap();
    assert!(beris()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .status()
        .unwrap()
        .success());
    // rerun from the echoed resolved config into a fresh directory
    let out2 = dir.join("b");
    assert!(beris()
        .args(["run", "--config"])
        .arg(out1.join("resolved_config.toml"))
        .arg("--output")
        .arg(&out2)
        .status()
        .unwrap()
        .success());
    let hashes = |p: &Path| -> std::collections::BTreeMap<String, String> {
        let m: serde_json::Value =
            serde_json::from_slice(&fs::read(p.join("run_manifest.json")).unwrap()).unwrap();
        m["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| {
                (
                    a["path"].as_str().unwrap().to_string(),
                    a["sha256"].as_str().unwrap().to_string(),
                )
            })
            .collect()
    };
    let (h1, h2) = (hashes(&out1), hashes(&out2));
    let mut compared = 0;
    for (path, digest) in &h1 {
        if path == "resolved_config.toml" {
            continue; // differs only in the echoed output dir
        }
        if let Some(d2) = h2.get(path) {
            assert_eq!(digest, d2, "artifact {path} hash changed on rerun");
            compared += 1;
        }
    }
    assert!(compared >= 5, "only {compared} artifacts compared");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn selftest_passes() {
    let output = beris().arg("selftest").output().unwrap();
    assert!(
        output.status.success(),
        "selftest failed:\n{}",
        String::from_utf8_lossy(&output.stdout)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("all") && stdout.contains("checks passed"));
}
