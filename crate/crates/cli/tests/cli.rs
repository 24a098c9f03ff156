use std::fs;
use std::path::Path;

use critblow_cli::commands::Table;
use critblow_cli::main_with_args;

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["critblow"];
    argv.extend_from_slice(args);
    main_with_args(argv)
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn constants_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "c.cfg", "p=5\nmu=1.0\n");
    let out = tmp.path().join("out");
    assert_eq!(run(&["constants", "--config", &cfg, "--out", &s(&out)]), 0);
    let text = fs::read_to_string(out.join("constants.txt")).unwrap();
    let beta = text.lines().find_map(|l| l.strip_prefix("beta=")).unwrap();
    assert_eq!(beta.parse::<f64>().unwrap(), 0.75);
    let gamma = text.lines().find_map(|l| l.strip_prefix("gamma=")).unwrap();
    assert!((gamma.parse::<f64>().unwrap() - 2.45).abs() < 1e-12);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = s(&tmp.path().join("o"));
    assert_eq!(run(&["no-such-command"]), 2);
    assert_eq!(run(&[]), 2);
    assert_eq!(run(&["constants", "--threads", "0", "--out", &out]), 2);
    let bad = write_cfg(tmp.path(), "bad.cfg", "p=2.5\n");
    assert_eq!(run(&["constants", "--config", &bad, "--out", &out]), 3);
    let typo = write_cfg(tmp.path(), "typo.cfg", "p=5\nmuu=1\n");
    assert_eq!(run(&["constants", "--config", &typo, "--out", &out]), 3);
    assert_eq!(run(&["monitor", "--out", &out]), 3);
    let missing = s(&tmp.path().join("absent.cfg"));
    assert_eq!(run(&["constants", "--config", &missing, "--out", &out]), 5);
    let nodir = write_cfg(tmp.path(), "nodir.cfg", "trajectory=/nonexistent/dir\n");
    assert_eq!(run(&["monitor", "--config", &nodir, "--out", &out]), 5);
}

#[test]
fn spectral_check_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("spec");
    assert_eq!(run(&["spectral-check", "--out", &s(&out)]), 0);
    let t = Table::read(&out.join("orthogonality.csv")).unwrap();
    let worst = t.column("error").unwrap().into_iter().fold(0.0f64, f64::max);
    assert!(worst <= 1e-8, "{worst}");
    let m = Table::read(&out.join("moments.csv")).unwrap();
    assert!(m.column("error").unwrap().iter().all(|e| *e <= 1e-8));
}

#[test]
fn simulate_monitor_and_resume() {
    let tmp = tempfile::tempdir().unwrap();
    let full = tmp.path().join("full");
    let part = tmp.path().join("part");
    let base = "d0=-0.24\nd1=0.01\ns0=15\nsnapshot_every=10\n";
    let c_full = write_cfg(tmp.path(), "full.cfg", &format!("{base}s_end=15.4\n"));
    let c_part = write_cfg(tmp.path(), "part.cfg", &format!("{base}s_end=15.15\n"));
    assert_eq!(run(&["simulate", "--config", &c_full, "--out", &s(&full)]), 0);
    assert_eq!(run(&["simulate", "--config", &c_part, "--out", &s(&part)]), 0);
    assert_eq!(run(&["simulate", "--config", &c_full, "--out", &s(&part), "--resume"]), 0);
    for f in ["timeseries.csv", "snapshots.csv", "snapshots/w_000040.csv", "checkpoint.csv"] {
        assert_eq!(fs::read(full.join(f)).unwrap(), fs::read(part.join(f)).unwrap(), "{f}");
    }
    let ts = Table::read(&full.join("timeseries.csv")).unwrap();
    assert_eq!(ts.rows.len(), 41);

    let mon = tmp.path().join("mon");
    let c_mon = write_cfg(tmp.path(), "mon.cfg", &format!("trajectory={}\n", s(&full)));
    assert_eq!(run(&["monitor", "--config", &c_mon, "--out", &s(&mon)]), 0);
    let t = Table::read(&mon.join("monitor.csv")).unwrap();
    assert_eq!(
        t.header,
        ["s", "slack_e", "slack_minus", "slack_0", "slack_1", "slack_2", "r0", "r1", "r2"]
    );
    assert_eq!(t.rows.len(), 41);
    // d0 = −0.24 sits inside the mode-0 bound at s0
    let slack0 = t.column("slack_0").unwrap();
    assert!((slack0[0] - 0.24).abs() < 1e-3, "{}", slack0[0]);
    // residuals only where the stencil fits
    assert!(t.rows[0][6].is_empty() && !t.rows[20][6].is_empty());
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "r.cfg", "s_lo=50\ns_hi=200\npoints=4\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&["residual-study", "--config", &cfg, "--out", &s(&a)]), 0);
    assert_eq!(run(&["residual-study", "--config", &cfg, "--out", &s(&b)]), 0);
    for f in ["residuals.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let strip = |p: &Path| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("manifest.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("wall_clock_seconds");
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a)["config_hash"].as_str().unwrap().len(), 64);
}
