use std::fs;
use std::path::{Path, PathBuf};

use sipo_core::domain::{BandSpec, ObjectGrid};
use sipo_core::experiment::{run_experiment, Experiment, ExperimentConfig, Phase1Mode};
use sipo_core::material::RichardsParams;
use sipo_core::metrics::{fmt_num, MetricsReport};
use sipo_core::operators::PsfKernel;
use sipo_core::phantoms::{generate_phantom, PhantomSpec};
use sipo_core::postscale::WeightScheme;
use sipo_core::solvers::{Feasibility, Scheme, Status};

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::io::{ingest_target, write_raw};

/// Files every successful run writes into `io.out_dir`.
pub const ARTIFACTS: [&str; 8] = [
    "sinogram.f32",
    "dose_normalized.f32",
    "dose.f32",
    "response.f32",
    "deviation.f32",
    "histograms.csv",
    "metrics.csv",
    "solve_report.csv",
];
pub const MANIFEST: &str = "manifest.txt";

fn invalid(cfg: &Config, key: &str) -> CliError {
    CliError::InvalidValue {
        key: key.to_string(),
        value: cfg.str(key).unwrap_or("").to_string(),
    }
}

pub fn material(cfg: &Config) -> Result<RichardsParams> {
    Ok(RichardsParams::new(
        cfg.f64("material.alpha")?,
        cfg.f64("material.k")?,
        cfg.f64("material.beta")?,
        cfg.f64("material.gamma")?,
        cfg.f64("material.f0")?,
    )?)
}

pub fn band(cfg: &Config) -> Result<BandSpec> {
    if cfg.bool("band.free")? {
        return Ok(BandSpec::Free);
    }
    Ok(BandSpec::width(cfg.i64("band.width")?)?)
}

fn triple(cfg: &Config, key: &str) -> Result<[usize; 3]> {
    let v: Vec<usize> = cfg.list(key)?;
    v.try_into().map_err(|_| invalid(cfg, key))
}

fn kernel(cfg: &Config) -> Result<PsfKernel> {
    match cfg.str("psf.kind").unwrap_or("identity") {
        "identity" => Ok(PsfKernel::identity()),
        "gaussian" => Ok(PsfKernel::gaussian(
            triple(cfg, "psf.extent")?,
            triple(cfg, "psf.populated")?,
            cfg.f64("psf.sigma")?,
        )?),
        "file" => {
            let path = PathBuf::from(cfg.str("psf.path").ok_or_else(|| CliError::MissingKey("psf.path".into()))?);
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            Ok(PsfKernel::parse(&text)?)
        }
        _ => Err(invalid(cfg, "psf.kind")),
    }
}

pub fn phantom_spec(cfg: &Config) -> Result<PhantomSpec> {
    let kind = cfg
        .str("phantom.kind")
        .ok_or_else(|| CliError::MissingKey("phantom.kind".into()))?;
    let mut spec = PhantomSpec::new(kind)?;
    let g = spec.grid;
    spec.grid = ObjectGrid::new(
        cfg.opt_usize("phantom.nx")?.unwrap_or(g.nx),
        cfg.opt_usize("phantom.ny")?.unwrap_or(g.ny),
        cfg.opt_usize("phantom.nz")?.unwrap_or(g.nz),
    )?;
    spec.radius = cfg.opt_f64("phantom.radius")?;
    spec.inner_radius = cfg.opt_f64("phantom.inner_radius")?;
    spec.blocks = cfg.opt_usize("phantom.blocks")?;
    spec.levels = cfg.list("phantom.levels")?;
    Ok(spec)
}

/// The target from exactly one of `io.target_path` and `phantom.kind`.
pub fn load_target(cfg: &Config, p: &RichardsParams) -> Result<(ObjectGrid, Vec<f64>)> {
    match (cfg.is_set("io.target_path"), cfg.is_set("phantom.kind")) {
        (true, false) => {
            let path = PathBuf::from(cfg.str("io.target_path").unwrap_or_default());
            let field = ingest_target(&path, p)?;
            let [nx, ny, nz] = field.extents();
            Ok((ObjectGrid::new(nx, ny, nz)?, field.values))
        }
        (false, true) => {
            let spec = phantom_spec(cfg)?;
            let m = generate_phantom(&spec, p)?;
            Ok((spec.grid, m.into_inner()))
        }
        _ => Err(CliError::Conflict {
            key: "io.target_path".into(),
            msg: "set exactly one of io.target_path and phantom.kind".into(),
        }),
    }
}

pub fn experiment_config(cfg: &Config) -> Result<ExperimentConfig> {
    let mut e = ExperimentConfig {
        formulation: cfg.str("problem.kind").unwrap_or("general").to_string(),
        solver: cfg.str("solver.name").unwrap_or("pdhg").to_string(),
        w1: cfg.f64("problem.w1")?,
        w2: cfg.f64("problem.w2")?,
        eps_l: cfg.f64("problem.eps_l")?,
        eps_u: cfg.f64("problem.eps_u")?,
        m_crit: cfg.opt_f64("problem.m_crit")?,
        band: band(cfg)?,
        n_angles: cfg.usize("geometry.n_angles")?,
        angle_span: cfg.f64("geometry.angle_span")?,
        kernel: kernel(cfg)?,
        params: material(cfg)?,
        calibration: cfg.str("postscale.domain").map(|d| vec![d.to_string()]).unwrap_or_default(),
        weights: WeightScheme::parse(cfg.str("postscale.weights").unwrap_or("uniform"))
            .ok_or_else(|| invalid(cfg, "postscale.weights"))?,
        phase1: Phase1Mode::parse(cfg.str("solver.phase1").unwrap_or("auto"))
            .ok_or_else(|| invalid(cfg, "solver.phase1"))?,
        feas_tol: cfg.f64("solver.feas_tol")?,
        support_tol: cfg.f64("domain.support_tol")?,
        histogram_bins: cfg.usize("output.histogram_bins")?,
        ..Default::default()
    };
    let o = &mut e.solver_opts;
    o.max_iters = cfg.usize("solver.max_iters")?;
    o.tol_kkt = cfg.f64("solver.tol_kkt")?;
    o.theta = cfg.f64("solver.theta")?;
    o.check_every = cfg.usize("solver.check_every")?;
    o.seed = cfg.u64("solver.seed")?;
    o.scheme = Scheme::parse(cfg.str("solver.scheme").unwrap_or("halpern")).ok_or_else(|| invalid(cfg, "solver.scheme"))?;
    o.restart = cfg.bool("solver.restart")?;
    o.primal_weight = cfg.opt_f64("solver.primal_weight")?;
    o.record_trace = cfg.is_set("solver.trace_path");
    if !(0.0..=1.0).contains(&o.theta) {
        return Err(invalid(cfg, "solver.theta"));
    }
    Ok(e)
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Optimal => 0,
        Status::Infeasible => 2,
        Status::IterLimit => 3,
        Status::Unbounded => 1,
    }
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

pub fn metrics_csv(rows: &[(&str, &MetricsReport)]) -> String {
    let mut s = format!("field,{}\n", MetricsReport::CSV_HEADER);
    for (name, m) in rows {
        s.push_str(&format!("{name},{}\n", m.csv_row()));
    }
    s
}

fn solve_report_csv(e: &Experiment) -> String {
    let r = &e.report;
    let k = &r.kkt;
    let (p1, p1_violation, p1_iters) = match r.phase1 {
        Some(p) => {
            let (name, v) = match p.verdict {
                Feasibility::Feasible { violation } => ("feasible", violation),
                Feasibility::Infeasible { violation } => ("infeasible", violation),
            };
            (name.to_string(), fmt_num(v), p.iters.to_string())
        }
        None => ("skipped".to_string(), String::new(), String::new()),
    };
    let alpha_of = |name: &str| {
        e.scaled
            .as_ref()
            .and_then(|s| s.scalings.iter().find(|c| c.domain.name() == name))
            .map(|c| fmt_num(c.alpha_star))
            .unwrap_or_default()
    };
    let header = "status,solver,objective,u,v,iters,restarts,stationarity,primal,dual,complementarity,gap,\
phase1,phase1_violation,phase1_iters,f_crit,alpha,alpha_dose,alpha_response,alpha_anchored";
    let row = [
        r.status.name().to_string(),
        r.solver.to_string(),
        fmt_num(r.objective),
        opt_num(r.u),
        opt_num(r.v),
        r.iters.to_string(),
        r.restarts.to_string(),
        fmt_num(k.stationarity),
        fmt_num(k.primal),
        fmt_num(k.dual),
        fmt_num(k.complementarity),
        fmt_num(k.gap),
        p1,
        p1_violation,
        p1_iters,
        fmt_num(e.f_crit),
        opt_num(e.scaled.as_ref().map(|s| s.alpha)),
        alpha_of("dose"),
        alpha_of("response"),
        alpha_of("anchored"),
    ]
    .join(",");
    format!("{header}\n{row}\n")
}

fn trace_csv(e: &Experiment) -> String {
    let mut s = String::from("iter,stationarity,primal,dual,complementarity,gap,objective\n");
    for t in &e.report.trace {
        let k = &t.kkt;
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            t.iter,
            fmt_num(k.stationarity),
            fmt_num(k.primal),
            fmt_num(k.dual),
            fmt_num(k.complementarity),
            fmt_num(k.gap),
            fmt_num(t.objective)
        ));
    }
    s
}

/// Run a configuration end to end and return the process exit code.
pub fn run_pipeline(cfg: &Config) -> Result<i32> {
    let ecfg = experiment_config(cfg)?;
    let (grid, m_target) = load_target(cfg, &ecfg.params)?;
    let out = PathBuf::from(cfg.str("io.out_dir").unwrap_or("out"));
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    write(&out.join(MANIFEST), cfg.manifest())?;

    let e = run_experiment(grid, &m_target, &ecfg)?;
    write(&out.join("solve_report.csv"), solve_report_csv(&e))?;
    if let Some(path) = cfg.str("solver.trace_path") {
        write(Path::new(path), trace_csv(&e))?;
    }
    if let Some(s) = &e.scaled {
        let obj = vec![grid.nz, grid.ny, grid.nx];
        let g = e.operator.geometry();
        let sino = vec![grid.nz, g.n_angles(), g.n_beams()];
        write_raw(&out.join("sinogram.f32"), &sino, &s.sinogram, "dose per beamlet")?;
        write_raw(&out.join("dose_normalized.f32"), &obj, &e.normalized_dose, "dose / f_crit")?;
        write_raw(&out.join("dose.f32"), &obj, &s.dose, "dose")?;
        write_raw(&out.join("response.f32"), &obj, &s.response, "response")?;
        write_raw(&out.join("deviation.f32"), &obj, &s.deviation, "response")?;
        let mut hist = String::from("region,bin_left,count\n");
        for b in &s.histograms {
            hist.push_str(&format!("{},{},{}\n", b.region, fmt_num(b.bin_left), b.count));
        }
        write(&out.join("histograms.csv"), hist)?;
        write(
            &out.join("metrics.csv"),
            metrics_csv(&[("physical", &s.metrics), ("normalized", &s.metrics_normalized)]),
        )?;
    }
    if let Some(Feasibility::Infeasible { violation }) = e.report.phase1.map(|p| p.verdict) {
        eprintln!("infeasible: phase-one violation {}", fmt_num(violation));
    }
    eprintln!(
        "{}: {} after {} iterations, results in {}",
        e.report.solver,
        e.report.status.name(),
        e.report.iters,
        out.display()
    );
    Ok(exit_code(e.report.status))
}
