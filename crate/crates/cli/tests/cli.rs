use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn filmsolve(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_filmsolve"));
    cmd.args(args).env_remove("FILMSOLVE_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    let t_end = if extra.contains("t_end") { "" } else { "t_end = 2\n" };
    fs::write(&path, format!("cot_theta = 0\nn = 32\n{t_end}{extra}\n")).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i]).collect()
}

#[test]
fn equilibrium_run_writes_documented_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ic_kind = equilibrium\nt_end = 10\nsnapshot_times = 0, 5");
    let out = dir.path().join("out");
    let o = filmsolve(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = csv(&out.join("series.csv"));
    assert_eq!(
        header.join(","),
        "t,m_bulk,m_surf,m_total,rel_drift,rate_bulk,rate_surf,rate_total,gamma_min,gamma_max,h_min,h_max,dt"
    );
    let t = column(&header, &rows, "t");
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*t.last().unwrap(), 10.0);
    assert!(column(&header, &rows, "rel_drift").iter().all(|d| d.abs() <= 1e-12));

    for name in ["snapshot_t0.csv", "snapshot_t5.csv"] {
        let (h, rows) = csv(&out.join(name));
        assert_eq!(h.join(","), "x,h,q,gamma,phi,chi,s");
        assert_eq!(rows.len(), 32);
        for r in rows {
            assert!((r[6] - (r[4] * r[1] + r[5])).abs() <= 1e-12);
        }
    }
    let meta = fs::read_to_string(out.join("run_meta.txt")).unwrap();
    assert!(meta.contains("cot_theta = 0"));
    assert!(meta.contains(env!("CARGO_PKG_VERSION")));
    assert!(meta.contains("status = completed"));
}

#[test]
fn variant_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t_end = 0.5");
    let out = dir.path().join("legacy");
    let o = filmsolve(
        &["run", "--config", &cfg, "--variant", "legacy", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(0));
    let meta = fs::read_to_string(out.join("run_meta.txt")).unwrap();
    assert!(meta.contains("variant = legacy"));
    assert!(meta.contains(&format!("output_dir = {}", out.display())));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.cfg");
    fs::write(&path, "# nothing\n").unwrap();
    let o = filmsolve(&["run", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("cot_theta") && err.contains("t_end"), "{err}");

    let o = filmsolve(&["run", "--config", dir.path().join("absent.cfg").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.cfg"));
}

#[test]
fn max_steps_and_blow_up_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "max_steps = 3");
    let out = dir.path().join("a");
    let o = filmsolve(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(fs::read_to_string(out.join("run_meta.txt")).unwrap().contains("status = max-steps"));

    let cfg = write_config(
        dir.path(),
        "t_end = 100\nic_amplitude = 0.9\ndt_min = 5\ndt_init = 5\ndt_max = 5",
    );
    let out = dir.path().join("b");
    let o = filmsolve(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out.join("run_meta.txt")).unwrap().contains("status = blow-up"));
}

#[test]
fn compare_writes_joined_series_and_growth_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("cmp");
    let o = filmsolve(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv(&out.join("compare_series.csv"));
    assert_eq!(column(&h, &rows, "t"), vec![0.0, 1.0, 2.0]);
    assert!(column(&h, &rows, "rel_drift_corrected").iter().all(|d| d.abs() <= 1e-12));
    assert!(column(&h, &rows, "rel_drift_legacy")[2].abs() > 1e-6);

    let (h, rows) = csv(&out.join("compare_growth.csv"));
    assert_eq!(h.join(","), "mode,k,growth_legacy,growth_corrected,abs_diff");
    assert_eq!(rows.len(), 15);
    assert!(column(&h, &rows, "abs_diff").iter().all(|d| *d <= 1e-8));
    assert!(out.join("legacy/series.csv").exists() && out.join("corrected/run_meta.txt").exists());
}

#[test]
fn compare_degenerate_cases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mr = 0");
    let out = dir.path().join("mr0");
    assert_eq!(filmsolve(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()], &[]).status.code(), Some(0));
    let (h, rows) = csv(&out.join("compare_series.csv"));
    for name in ["rel_drift_legacy", "rel_drift_corrected"] {
        assert!(column(&h, &rows, name).iter().all(|d| d.abs() <= 1e-10), "{name}");
    }

    let cfg = write_config(dir.path(), "ic_kind = equilibrium");
    let out = dir.path().join("eq");
    assert_eq!(filmsolve(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()], &[("FILMSOLVE_THREADS", "1")]).status.code(), Some(0));
    let (h, rows) = csv(&out.join("compare_series.csv"));
    let pairs = [
        ("m_total_legacy", "m_total_corrected"),
        ("gamma_max_legacy", "gamma_max_corrected"),
        ("h_min_legacy", "h_min_corrected"),
    ];
    for (a, b) in pairs {
        for (x, y) in column(&h, &rows, a).iter().zip(column(&h, &rows, b)) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn dispersion_prints_one_row_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = filmsolve(&["dispersion", "--config", &cfg, "--modes", "6"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "mode,k,growth_rate,phase_rate");
    assert_eq!(lines.len(), 7);
    // Mode 5 is unstable for a vertical film with these parameters.
    let g5: f64 = lines[5].split(',').nth(2).unwrap().parse().unwrap();
    assert!(g5 > 0.0);

    assert_eq!(filmsolve(&["dispersion", "--config", &cfg, "--modes", "16"], &[]).status.code(), Some(1));
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = filmsolve(&["dispersion", "--config", &cfg, "--modes", "2"], &[("FILMSOLVE_THREADS", "0")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FILMSOLVE_THREADS"));
    let o = filmsolve(&["dispersion", "--config", &cfg, "--modes", "2"], &[("FILMSOLVE_THREADS", "3")]);
    assert_eq!(o.status.code(), Some(0));
}
