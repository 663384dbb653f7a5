use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sipo_cli::config::KEYS;
use sipo_cli::io::{ingest_target, read_pgm, read_raw, write_raw};
use sipo_cli::pipeline::{ARTIFACTS, MANIFEST};
use sipo_cli::Config;
use sipo_core::material::RichardsParams;
use tempfile::TempDir;

const DISK: &str = "\
[phantom]
kind = disk
nx = 16
ny = 16
radius = 5
[geometry]
n_angles = 12
[band]
width = 2
";

fn sipo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sipo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_cfg(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn disk_run_writes_every_artifact() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "run.cfg", &format!("{DISK}solver.trace_path = trace.csv\n"));
    let o = sipo(tmp.path(), &["run", "run.cfg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("out");
    for name in ARTIFACTS.iter().chain([&MANIFEST]) {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let report = fs::read_to_string(out.join("solve_report.csv")).unwrap();
    assert!(report.lines().nth(1).unwrap().starts_with("optimal,pdhg,"));
    let (dose, side) = read_raw(&out.join("dose.f32")).unwrap();
    assert_eq!(side.shape, [1, 16, 16]);
    assert!(dose.values.iter().all(|v| v.is_finite() && *v >= -1e-6));
    let (sino, _) = read_raw(&out.join("sinogram.f32")).unwrap();
    assert_eq!(sino.shape[..2], [1, 12]);
    assert!(fs::read_to_string(tmp.path().join("trace.csv")).unwrap().lines().count() > 1);

    // The manifest is itself a valid config reproducing the run.
    let manifest = Config::load(&out.join(MANIFEST)).unwrap();
    assert_eq!(manifest.str("phantom.kind"), Some("disk"));
    assert_eq!(manifest.usize("geometry.n_angles").unwrap(), 12);
}

#[test]
fn runs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "a.cfg", &format!("{DISK}io.out_dir = a\n"));
    write_cfg(tmp.path(), "b.cfg", &format!("{DISK}io.out_dir = b\n"));
    for cfg in ["a.cfg", "b.cfg"] {
        assert_eq!(sipo(tmp.path(), &["run", cfg]).status.code(), Some(0));
    }
    for name in ARTIFACTS {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn exact_window_under_blur_exits_infeasible() {
    let tmp = TempDir::new().unwrap();
    let mut m = vec![0.0; 36];
    for y in 1..5 {
        for x in 1..5 {
            m[y * 6 + x] = if x < 3 { 0.2 } else { 0.7 };
        }
    }
    write_raw(&tmp.path().join("target.f32"), &[6, 6], &m, "response").unwrap();
    write_cfg(
        tmp.path(),
        "run.cfg",
        "io.target_path = target.f32\n\
         geometry.n_angles = 8\nband.width = 1\n\
         psf.kind = gaussian\npsf.extent = 3,3,1\npsf.populated = 3,3,1\n\
         problem.kind = case1\nproblem.eps_l = 0\nproblem.eps_u = 0\n",
    );
    let o = sipo(tmp.path(), &["run", "run.cfg"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("violation"));
    let report = fs::read_to_string(tmp.path().join("out/solve_report.csv")).unwrap();
    assert!(report.lines().nth(1).unwrap().starts_with("infeasible,"));
    assert!(!tmp.path().join("out/dose.f32").exists());
}

#[test]
fn iteration_cap_exits_three() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "run.cfg", &format!("{DISK}solver.max_iters = 20\nsolver.check_every = 10\n"));
    let o = sipo(tmp.path(), &["run", "run.cfg"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(tmp.path().join("out/dose.f32").is_file());
}

#[test]
fn help_lists_every_key() {
    let o = Command::new(env!("CARGO_BIN_EXE_sipo")).arg("--help").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for (key, default, _) in KEYS {
        let line = text.lines().find(|l| l.trim_start().starts_with(key)).unwrap_or_else(|| panic!("{key}"));
        assert!(line.contains(&format!("[{default}]")), "{line}");
    }
}

#[test]
fn config_errors_name_the_key() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("solver.maxiters = 5\n", "solver.maxiters"),
        ("phantom.kind = disk\nsolver.tol_kkt = small\n", "solver.tol_kkt"),
        ("phantom.kind = disk\nio.target_path = t.pgm\n", "io.target_path"),
        ("", "io.target_path"),
        ("phantom.kind = disk\nproblem.kind = case3\n", "case3"),
        ("phantom.kind = disk\npsf.kind = gaussian\npsf.extent = 3,3\n", "psf.extent"),
        ("phantom.kind = disk\nsolver.scheme = nesterov\n", "solver.scheme"),
        ("phantom.kind = disk\nproblem.kind = case2\n", "problem.m_crit"),
    ];
    for (text, key) in cases {
        write_cfg(tmp.path(), "bad.cfg", text);
        let o = sipo(tmp.path(), &["run", "bad.cfg"]);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(stderr(&o).contains(key), "{text}: {}", stderr(&o));
    }
    let o = sipo(tmp.path(), &["run", "missing.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.cfg"));
}

#[test]
fn overrides_on_the_command_line() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "run.cfg", DISK);
    let o = sipo(tmp.path(), &["run", "run.cfg", "-s", "io.out_dir=o2", "-s", "problem.kind=case2", "-s", "problem.m_crit=0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = Config::load(&tmp.path().join("o2").join(MANIFEST)).unwrap();
    assert_eq!(m.str("problem.kind"), Some("case2"));
}

#[test]
fn pgm_ascii_and_binary_agree() {
    let tmp = TempDir::new().unwrap();
    let px: [u8; 6] = [0, 128, 255, 64, 0, 200];
    let ascii = tmp.path().join("a.pgm");
    let binary = tmp.path().join("b.pgm");
    fs::write(&ascii, "P2\n# comment\n3 2\n255\n0 128 255\n64 0 200\n").unwrap();
    let mut bytes = b"P5 3 2 255\n".to_vec();
    bytes.extend_from_slice(&px);
    fs::write(&binary, bytes).unwrap();
    let (a, ma) = read_pgm(&ascii).unwrap();
    let (b, mb) = read_pgm(&binary).unwrap();
    assert_eq!((a.clone(), ma), (b, mb));
    assert_eq!(a.shape, [2, 3]);

    let p = RichardsParams::default();
    let t = ingest_target(&ascii, &p).unwrap();
    assert_eq!(t.values[0], 0.0);
    assert!((t.values[1] - 128.0 / 255.0).abs() < 1e-15);
    assert!(t.values[2] < 1.0 && t.values[2] > 1.0 - 1e-8);
}

#[test]
fn raw_round_trip_is_bit_exact() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("f.f32");
    let values: Vec<f64> = (0..24).map(|i| (i as f32 * 0.37 - 3.0) as f64).collect();
    write_raw(&path, &[2, 3, 4], &values, "dose").unwrap();
    let (f, side) = read_raw(&path).unwrap();
    assert_eq!(f.values, values);
    assert_eq!(f.extents(), [4, 3, 2]);
    assert_eq!((side.dtype.as_str(), side.order.as_str()), ("f32le", "row-major"));

    fs::write(&path, [0u8; 12]).unwrap();
    let err = read_raw(&path).unwrap_err().to_string();
    assert!(err.contains("24"), "{err}");
}

#[test]
fn phantom_and_metrics_commands() {
    let tmp = TempDir::new().unwrap();
    write_cfg(tmp.path(), "p.cfg", DISK);
    let o = sipo(tmp.path(), &["phantom", "p.cfg", "-o", "disk.pgm"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (img, _) = read_pgm(&tmp.path().join("disk.pgm")).unwrap();
    assert_eq!(img.shape, [16, 16]);
    assert_eq!(img.values.iter().filter(|&&v| v > 0.0).count(), 80);

    let o = sipo(tmp.path(), &["phantom", "p.cfg", "-o", "disk.f32"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(sipo(tmp.path(), &["run", "p.cfg"]).status.code(), Some(0));
    let o = sipo(tmp.path(), &["metrics", "out/dose.f32", "disk.f32", "p.cfg"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("field,dtvr_f"));
    let run_metrics = fs::read_to_string(tmp.path().join("out/metrics.csv")).unwrap();
    let physical = run_metrics.lines().nth(1).unwrap();
    // Same dtvr_f from both paths, up to the f32 storage of the dose.
    let col = |l: &str| l.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!((col(lines[1]) - col(physical)).abs() < 1e-5);

    let o = sipo(tmp.path(), &["phantom", "p.cfg", "-o", "disk.png"]);
    assert_eq!(o.status.code(), Some(1));
}
