use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[problem]
t_final = 0.1

[schedule]
eps = [0.1, 0.05]

[solver]
outer_spacing = 0.02
snapshots = 20
"#;

fn sphvisc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphvisc"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.in.toml");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

/// `quantity -> value` for every row of a report CSV at viscosity `eps`.
fn report_values(path: &Path, eps: f64) -> BTreeMap<String, f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (ce, cq, cv) = (col("eps"), col("quantity"), col("value"));
    lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[ce].parse::<f64>().unwrap() == eps)
        .map(|f| (f[cq].to_string(), f[cv].parse().unwrap()))
        .collect()
}

#[test]
fn infeasible_schedule_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\neps = 1.0\n");
    let out = dir.path().join("out");
    let o = sphvisc(&["run", &cfg], &out);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("infeasible"), "{err}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "error");
    assert!(!out.join("trajectory.csv").exists());
}

#[test]
fn constant_run_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[run]\neps = 0.1\n").replace("[problem]\n", "[problem]\nprofile = { kind = \"constant\" }\n");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = sphvisc(&["run", &cfg], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS") && !stdout.contains("FAIL"), "{stdout}");
    for f in ["config.toml", "trajectory.csv", "report.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "pass");
    assert_eq!(manifest["eps"], 0.1);
    let a = manifest["params"]["a"].as_f64().unwrap();
    assert!((a - 0.1f64.cbrt()).abs() < 1e-12);
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,r,rho,m,u\n"));
    let resolved = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(resolved.contains("constant"));
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[solver]\ncfl = 0.1\nclf = 0.2\n");
    let o = sphvisc(&["run", &cfg], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("clf"), "{err}");
}

#[test]
fn sweep_writes_one_plot_per_tracked_quantity_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (o1, o2) = (dir.path().join("a"), dir.path().join("b"));
    let r1 = sphvisc(&["sweep", &cfg, "--jobs", "2"], &o1);
    let r2 = sphvisc(&["sweep", &cfg, "--jobs", "1"], &o2);
    for r in [&r1, &r2] {
        assert!(matches!(r.status.code(), Some(0) | Some(2)), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(r1.stdout, r2.stdout);
    for f in ["report.csv", "summary.json"] {
        assert_eq!(std::fs::read(o1.join(f)).unwrap(), std::fs::read(o2.join(f)).unwrap(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(o1.join("summary.json")).unwrap()).unwrap();
    let plots: Vec<&str> = summary["files"].as_array().unwrap().iter().filter_map(|f| f.as_str()).filter(|f| f.starts_with("plots")).collect();
    let on_disk = std::fs::read_dir(o1.join("plots")).unwrap().count();
    assert!(plots.len() >= 10);
    assert_eq!(plots.len(), on_disk);
    for p in plots {
        let svg = std::fs::read_to_string(o1.join(p)).unwrap();
        assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"), "{p}");
    }
}

#[test]
fn single_viscosity_sweep_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("eps = [0.1, 0.05]", "eps = [0.1]");
    let cfg = write_config(dir.path(), &text);
    let (run_dir, sweep_dir) = (dir.path().join("run"), dir.path().join("sweep"));
    sphvisc(&["run", &cfg], &run_dir);
    sphvisc(&["sweep", &cfg], &sweep_dir);
    let a = report_values(&run_dir.join("report.csv"), 0.1);
    let b = report_values(&sweep_dir.join("report.csv"), 0.1);
    assert!(!a.is_empty());
    let mut shared = 0;
    for (k, v) in &a {
        if let Some(w) = b.get(k) {
            assert_eq!(v.to_bits(), w.to_bits(), "{k}");
            shared += 1;
        }
    }
    assert!(shared >= 20, "{shared}");
}
