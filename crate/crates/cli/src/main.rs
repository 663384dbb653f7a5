use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sipo_core::domain::{partition_object_domain, ObjectGrid};
use sipo_core::material::response_to_dose;
use sipo_core::metrics::{evaluate, MetricsInput};
use sipo_core::phantoms::generate_phantom;

use sipo_cli::config::key_help;
use sipo_cli::io::{export_field, ingest_target, read_raw, Field};
use sipo_cli::pipeline::{band, material, metrics_csv, phantom_spec, run_pipeline};
use sipo_cli::{CliError, Config, Result};

#[derive(Parser)]
#[command(name = "sipo", version, about = "Scale-invariant sinogram optimization", after_help = key_help())]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimize, calibrate and evaluate the target described by a config file.
    Run {
        config: PathBuf,
        /// Override a key, `key=value`; repeatable.
        #[arg(short = 's', long = "set")]
        overrides: Vec<String>,
    },
    /// Render a built-in phantom (phantom.* and material.* keys).
    Phantom {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the metrics of a dose field against a target.
    Metrics {
        dose: PathBuf,
        target: PathBuf,
        /// Config supplying band.* and material.* keys.
        config: PathBuf,
    },
}

fn load(path: &PathBuf, overrides: &[String]) -> Result<Config> {
    let mut cfg = Config::load(path)?;
    for o in overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| CliError::Syntax {
            line: 0,
            text: o.clone(),
        })?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn phantom(config: &PathBuf, output: &PathBuf) -> Result<i32> {
    let cfg = load(config, &[])?;
    let p = material(&cfg)?;
    let spec = phantom_spec(&cfg)?;
    let m = generate_phantom(&spec, &p)?;
    let g = spec.grid;
    let shape = if g.nz == 1 { vec![g.ny, g.nx] } else { vec![g.nz, g.ny, g.nx] };
    let field = Field {
        shape,
        values: m.into_inner(),
    };
    export_field(output, &field, "response", (p.alpha, p.k))?;
    Ok(0)
}

fn metrics(dose: &PathBuf, target: &PathBuf, config: &PathBuf) -> Result<i32> {
    let cfg = load(config, &[])?;
    let p = material(&cfg)?;
    let m_target = ingest_target(target, &p)?;
    let (d, _) = read_raw(dose)?;
    let [nx, ny, nz] = m_target.extents();
    let grid = ObjectGrid::new(nx, ny, nz)?;
    if d.values.len() != grid.len() {
        return Err(sipo_core::SipoError::ShapeMismatch {
            expected: grid.len(),
            actual: d.values.len(),
        }
        .into());
    }
    let f_target = response_to_dose(&m_target.values, &p)?.into_inner();
    let part = partition_object_domain(&grid, &f_target, band(&cfg)?)?;
    let f_crit = part.gel.iter().map(|&i| f_target[i]).fold(f64::INFINITY, f64::min);
    let report = evaluate(MetricsInput {
        dose: &d.values,
        f_target: &f_target,
        m_target: &m_target.values,
        f_crit,
        gel: &part.gel,
        band: &part.band,
        params: &p,
    })?;
    print!("{}", metrics_csv(&[("dose", &report)]));
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var("SIPO_THREADS").ok().and_then(|s| s.parse().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("SIPO_THREADS ignored: {e}");
        }
    }
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Run { config, overrides } => load(config, overrides).and_then(|c| run_pipeline(&c)),
        Cmd::Phantom { config, output } => phantom(config, output),
        Cmd::Metrics { dose, target, config } => metrics(dose, target, config),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
