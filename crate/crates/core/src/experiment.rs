//! End-to-end run on an in-memory target: partition, formulate, solve,
//! calibrate, evaluate.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{partition_domain, BandSpec, DomainPartition, ObjectGrid, ProjectionGeometry};
use crate::error::Result;
use crate::formulations::{formulations, FormulationInput};
use crate::material::{response_to_dose, RichardsParams};
use crate::metrics::{evaluate, region_histograms, HistogramBin, MetricsInput, MetricsReport};
use crate::operators::{DoseOperator, PsfKernel, TomoOperator};
use crate::postscale::{apply_scaling, calibrators, CalibrationInput, ScalingResult, WeightScheme};
use crate::solvers::{
    check_feasibility_phase1, solve_problem, solvers, Feasibility, PdhgOptions, SolveReport, Status,
};

/// When to run the phase-one feasibility test before the main solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Phase1Mode {
    /// Every formulation except `general`, which is feasible by construction.
    #[default]
    Auto,
    Always,
    Never,
}

impl Phase1Mode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Self::Auto),
            "always" | "true" => Some(Self::Always),
            "never" | "false" => Some(Self::Never),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::Always => "always",
            Self::Never => "never",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub formulation: String,
    pub solver: String,
    pub w1: f64,
    pub w2: f64,
    pub eps_l: f64,
    pub eps_u: f64,
    pub m_crit: Option<f64>,
    pub band: BandSpec,
    pub n_angles: usize,
    pub angle_span: f64,
    pub kernel: PsfKernel,
    pub params: RichardsParams,
    pub solver_opts: PdhgOptions,
    /// Calibrators to run; empty means the formulation's defaults.
    pub calibration: Vec<String>,
    pub weights: WeightScheme,
    pub phase1: Phase1Mode,
    pub feas_tol: f64,
    /// Relative threshold on `P f_T` for active beamlets.
    pub support_tol: f64,
    pub histogram_bins: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            formulation: "general".into(),
            solver: "pdhg".into(),
            w1: 1.0,
            w2: 1.0,
            eps_l: 0.1,
            eps_u: 0.1,
            m_crit: None,
            band: BandSpec::Width(10),
            n_angles: 90,
            angle_span: PI,
            kernel: PsfKernel::identity(),
            params: RichardsParams::default(),
            solver_opts: PdhgOptions::default(),
            calibration: Vec::new(),
            weights: WeightScheme::Uniform,
            phase1: Phase1Mode::Auto,
            feas_tol: 1e-6,
            support_tol: 1e-9,
            histogram_bins: 50,
        }
    }
}

/// Physical quantities after calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaled {
    /// Every calibration that ran; the last one set `alpha`.
    pub scalings: Vec<ScalingResult>,
    pub alpha: f64,
    pub sinogram: Vec<f64>,
    pub dose: Vec<f64>,
    pub response: Vec<f64>,
    /// `M(f*) − m_T` on the gel, zero elsewhere.
    pub deviation: Vec<f64>,
    pub metrics: MetricsReport,
    /// Metrics of the normalized dose; ratio metrics must match `metrics`.
    pub metrics_normalized: MetricsReport,
    pub histograms: Vec<HistogramBin>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub grid: ObjectGrid,
    pub operator: Arc<TomoOperator>,
    pub partition: DomainPartition,
    pub m_target: Vec<f64>,
    pub f_target: Vec<f64>,
    pub f_crit: f64,
    pub report: SolveReport,
    pub normalized_dose: Vec<f64>,
    /// Absent when the program is infeasible.
    pub scaled: Option<Scaled>,
}

impl Experiment {
    pub fn status(&self) -> Status {
        self.report.status
    }
}

/// Run the whole pipeline on a response-space target.
pub fn run_experiment(grid: ObjectGrid, m_target: &[f64], cfg: &ExperimentConfig) -> Result<Experiment> {
    crate::operators::check_len(grid.len(), m_target.len())?;
    let formulation = formulations().build(&cfg.formulation)?;
    let solver = solvers().build(&cfg.solver)?;
    let names: Vec<String> = if cfg.calibration.is_empty() {
        formulation.default_calibration().iter().map(|s| s.to_string()).collect()
    } else {
        cfg.calibration.clone()
    };
    let cal: Vec<_> = names.iter().map(|n| calibrators().build(n)).collect::<Result<_>>()?;

    let geometry = ProjectionGeometry::for_grid(&grid, cfg.n_angles, cfg.angle_span)?;
    let op = Arc::new(TomoOperator::new(grid, geometry, cfg.kernel.clone())?);
    let f_target = response_to_dose(m_target, &cfg.params)?.into_inner();
    let partition = partition_domain(&op, &f_target, cfg.band, cfg.support_tol)?;
    log::info!(
        "partition: {} gel, {} band, {} exterior voxels; {} of {} beamlets active",
        partition.gel.len(),
        partition.band.len(),
        partition.ext.len(),
        partition.active.len(),
        partition.n_proj()
    );
    let input = FormulationInput {
        op: op.clone() as Arc<dyn DoseOperator>,
        partition: &partition,
        m_target,
        f_target: &f_target,
        params: cfg.params,
        w1: cfg.w1,
        w2: cfg.w2,
        eps_l: cfg.eps_l,
        eps_u: cfg.eps_u,
        m_crit: cfg.m_crit,
    };
    let prob = formulation.build(&input)?;
    let f_crit = prob.f_crit();

    let run_phase1 = match cfg.phase1 {
        Phase1Mode::Always => true,
        Phase1Mode::Never => false,
        Phase1Mode::Auto => formulation.name() != "general",
    };
    let mut phase1 = None;
    if run_phase1 {
        let p1 = check_feasibility_phase1(&prob, solver.as_ref(), &cfg.solver_opts, cfg.feas_tol)?;
        log::info!("phase one: {:?} after {} iterations", p1.verdict, p1.iters);
        if let Feasibility::Infeasible { .. } = p1.verdict {
            if p1.converged {
                let report = SolveReport::infeasible(&prob, solver.name(), p1);
                let normalized_dose = vec![0.0; grid.len()];
                return Ok(Experiment {
                    grid,
                    operator: op,
                    partition,
                    m_target: m_target.to_vec(),
                    f_target,
                    f_crit,
                    report,
                    normalized_dose,
                    scaled: None,
                });
            }
            log::warn!("phase one did not converge; its infeasible verdict is not conclusive");
        }
        phase1 = Some(p1);
    }

    let mut report = solve_problem(&prob, solver.as_ref(), &cfg.solver_opts)?;
    report.phase1 = phase1;
    log::info!(
        "{} {}: objective {:.9e} after {} iterations, kkt error {:.3e}",
        report.solver,
        report.status.name(),
        report.objective,
        report.iters,
        report.kkt.error()
    );
    let mut normalized_dose = vec![0.0; grid.len()];
    op.forward_into(&report.y, &mut normalized_dose);

    let gel = &partition.gel;
    let pick = |v: &[f64]| gel.iter().map(|&i| v[i]).collect::<Vec<f64>>();
    let (dose_gel, ft_gel, mt_gel) = (pick(&normalized_dose), pick(&f_target), pick(m_target));
    let weights = cfg.weights.weights(&ft_gel);
    let cal_input = CalibrationInput {
        dose: &dose_gel,
        f_target: &ft_gel,
        m_target: &mt_gel,
        weights: &weights,
        params: &cfg.params,
        f_crit,
    };
    let scalings: Vec<ScalingResult> = cal.iter().map(|c| c.calibrate(&cal_input)).collect::<Result<_>>()?;
    let alpha = scalings.last().map(|s| s.alpha_star).unwrap_or(f_crit);
    if formulation.name() == "case2" {
        let floor = dose_gel
            .iter()
            .zip(prob.f_tilde())
            .map(|(d, t)| d / t)
            .fold(f64::INFINITY, f64::min);
        for s in &scalings {
            if floor >= 1.0 && s.alpha_star > f_crit {
                log::warn!("{} calibration scaled up: {} > f_crit {}", s.domain.name(), s.alpha_star, f_crit);
            }
        }
    }
    let (sinogram, dose) = apply_scaling(&report.y, &normalized_dose, alpha)?;
    let response: Vec<f64> = dose.iter().map(|&f| cfg.params.response(f)).collect();
    let mut deviation = vec![0.0; grid.len()];
    for &i in gel {
        deviation[i] = response[i] - m_target[i];
    }
    let metrics_of = |d: &[f64]| {
        evaluate(MetricsInput {
            dose: d,
            f_target: &f_target,
            m_target,
            f_crit,
            gel,
            band: &partition.band,
            params: &cfg.params,
        })
    };
    let metrics = metrics_of(&dose)?;
    let metrics_normalized = metrics_of(&normalized_dose)?;
    let histograms = region_histograms(&dose, &partition.region_labels(), cfg.histogram_bins);
    Ok(Experiment {
        grid,
        operator: op,
        partition,
        m_target: m_target.to_vec(),
        f_target,
        f_crit,
        report,
        normalized_dose,
        scaled: Some(Scaled {
            scalings,
            alpha,
            sinogram,
            dose,
            response,
            deviation,
            metrics,
            metrics_normalized,
            histograms,
        }),
    })
}
