use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FAST: &str = "\
[geometry]
rotation_steps = 2
airgap_aspect = 24.0

[mesh]
edge_length = 4.0e-3

[cycle]
grid = [2, 2]

[mtpa]
samples = 3
";

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, format!("{FAST}{extra}")).unwrap();
    p
}

fn rotopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotopt"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn run_ok(cmd: &str, config: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = rotopt(&args);
    assert!(o.status.success(), "{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn mtpa_with_one_sample_has_origin_and_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    std::fs::write(&cfg, FAST.replace("samples = 3", "samples = 1")).unwrap();
    let out = dir.path().join("out");
    run_ok("mtpa", &cfg, &out, &[]);
    let text = read(out.join("mtpa.csv"));
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3, "{text}");
    assert_eq!(rows[0], "current_A,angle_rad,torque_Nm");
    assert!(rows[1].starts_with("0.000000000e0,"));
    let last: Vec<f64> = rows[2].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[0] - 96.0).abs() < 1e-9 && last[2] > 0.0);
}

#[test]
fn analyze_reports_efficiency_temperature_and_stress() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    run_ok("analyze", &cfg, &out, &[]);
    let summary = read(out.join("summary.csv"));
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "efficiency,max_theta_C,max_magnet_theta_C,max_sqrt_sVM_Pa,C_t,C_VM"
    );
    let v: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!(v[0] > 0.0 && v[0] <= 1.0);
    assert!(v[1] >= 40.0 && v[3] > 0.0);
    let eff = read(out.join("efficiency.csv"));
    assert!(eff.starts_with("omega_rad_s,torque_Nm,weight,current_A,angle_rad,P_mech_W,P_joule_W,P_eddy_W\n"));
    assert_eq!(eff.lines().filter(|l| !l.starts_with('#')).count(), 5);
    let e_line = eff.lines().last().unwrap();
    let e: f64 = e_line.strip_prefix("# efficiency,").unwrap().parse().unwrap();
    assert!((e - v[0]).abs() < 1e-8);
    let vtk = read(out.join("design.vtk"));
    for name in ["SCALARS region", "SCALARS p_ec", "SCALARS sqrt_s_vm", "SCALARS material", "SCALARS a ", "SCALARS b_abs", "SCALARS theta", "VECTORS u"] {
        assert!(vtk.contains(name), "missing {name}");
    }
    let manifest = read(out.join("manifest.toml"));
    assert!(manifest.contains(&format!("version = \"{}\"", env!("CARGO_PKG_VERSION"))));
    assert!(manifest.contains("[config.geometry]") && manifest.contains("rotation_steps = 2"));
}

#[test]
fn optimize_without_iterations_emits_initial_evaluation_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    run_ok("optimize", &cfg, &out, &["--max-iters", "0"]);
    let hist = read(out.join("history.csv"));
    assert_eq!(hist.lines().count(), 2, "{hist}");
    assert!(hist.starts_with("iter,J,"));
    assert!(out.join("snapshots/iter_0000.vtk").is_file());
    assert!(read(out.join("snapshots/iter_0000.vtk")).contains("SCALARS psi_3"));
    assert!(read(out.join("manifest.toml")).contains("termination = \"MaxIterations\""));
    assert_eq!(
        read(out.join("efficiency_initial.csv")),
        read(out.join("efficiency_final.csv"))
    );
}

#[test]
fn identical_runs_give_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[output]\nsnapshot_stride = 1\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok("optimize", &cfg, &a, &["--max-iters", "2", "--seed", "7"]);
    run_ok("optimize", &cfg, &b, &["--max-iters", "2", "--seed", "7"]);
    for f in ["history.csv", "efficiency_initial.csv", "efficiency_final.csv", "snapshots/iter_0001.vtk"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f} differs");
    }
    assert_eq!(read(a.join("history.csv")).lines().count(), 4);
    assert!(read(a.join("manifest.toml")).contains("seed = 7"));
}

#[test]
fn bh_table_and_trace_files_are_used() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bh.txt"),
        "# H B\n0 0\n100 0.6\n300 1.1\n1000 1.45\n5000 1.75\n20000 1.95\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("trace.csv"),
        "time_s,speed_rpm,torque_Nm\n0,3000,40\n1,6000,60\n2,9000,-10\n3,12000,80\n",
    )
    .unwrap();
    let cfg = write_config(
        dir.path(),
        "[materials]\nbh_table = \"bh.txt\"\n",
    );
    let text = read(&cfg).replace("grid = [2, 2]", "trace = \"trace.csv\"\ngrid = [2, 2]");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    run_ok("analyze", &cfg, &out, &[]);
    let eff = read(out.join("efficiency.csv"));
    let rows: Vec<&str> = eff.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3, "{eff}");
    assert!(rows[1].starts_with("3.141592654e2,6.000000000e1,"), "{eff}");
    assert!(read(out.join("manifest.toml")).contains("bh.txt"));
}

#[test]
fn invalid_config_exits_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    std::fs::write(&cfg, FAST.replace("[geometry]\n", "[geometry]\naxial_length = -0.09\n")).unwrap();
    let o = rotopt(&["analyze", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("geometry.axial_length"));
    std::fs::write(&cfg, "[optimizer]\nmax_iters = 3\n").unwrap();
    let o = rotopt(&["optimize", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_iters"));
}

#[test]
fn solver_errors_name_the_operating_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let text = FAST.replace("samples = 3", "samples = 2\nrated_current = 1.0\nmax_fraction = 1.0");
    std::fs::write(&cfg, text).unwrap();
    let o = rotopt(&["analyze", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("operating point") && err.contains("unreachable"), "{err}");
}
