//! Scalar calibration of the normalized optimum back to physical dose.
//!
//! All functionals are evaluated over the gel only; callers pass gel-restricted
//! values.

use std::sync::OnceLock;

use crate::error::{Result, SipoError};
use crate::material::RichardsParams;
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingDomain {
    DoseDomain,
    ResponseDomain,
    Anchored,
}

impl ScalingDomain {
    pub fn name(&self) -> &'static str {
        match self {
            Self::DoseDomain => "dose",
            Self::ResponseDomain => "response",
            Self::Anchored => "anchored",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub alpha_star: f64,
    pub domain: ScalingDomain,
    /// The calibration functional at `alpha_star`; dose-domain for anchored
    /// results.
    pub objective_value: f64,
    pub weights: Vec<f64>,
}

/// Per-voxel calibration weights over the gel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightScheme {
    #[default]
    Uniform,
    /// Proportional to the target dose.
    Proportional,
}

impl WeightScheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(Self::Uniform),
            "proportional" | "proportional-to-target" => Some(Self::Proportional),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Proportional => "proportional",
        }
    }

    pub fn weights(&self, f_target_gel: &[f64]) -> Vec<f64> {
        match self {
            Self::Uniform => vec![1.0; f_target_gel.len()],
            Self::Proportional => f_target_gel.to_vec(),
        }
    }
}

/// `Σ wᵢ (α dᵢ − tᵢ)²`.
pub fn dose_functional(alpha: f64, dose: &[f64], target: &[f64], w: &[f64]) -> f64 {
    dose.iter()
        .zip(target)
        .zip(w)
        .map(|((d, t), w)| w * (alpha * d - t).powi(2))
        .sum()
}

/// `Σ wᵢ (M(α dᵢ) − mᵢ)²`.
pub fn response_functional(alpha: f64, dose: &[f64], m_target: &[f64], w: &[f64], p: &RichardsParams) -> f64 {
    dose.iter()
        .zip(m_target)
        .zip(w)
        .map(|((d, m), w)| w * (p.response(alpha * d) - m).powi(2))
        .sum()
}

/// Closed-form weighted least squares, `α* = ⟨d, t⟩_W / ⟨d, d⟩_W`.
pub fn scale_dose_domain(dose: &[f64], f_target: &[f64], w: &[f64]) -> Result<ScalingResult> {
    check_lens(dose, f_target, w)?;
    let num: f64 = dose.iter().zip(f_target).zip(w).map(|((d, t), w)| w * d * t).sum();
    let den: f64 = dose.iter().zip(w).map(|(d, w)| w * d * d).sum();
    if !(den > 0.0) || !num.is_finite() {
        return Err(SipoError::DegenerateDenominator);
    }
    let alpha_star = num / den;
    Ok(ScalingResult {
        alpha_star,
        domain: ScalingDomain::DoseDomain,
        objective_value: dose_functional(alpha_star, dose, f_target, w),
        weights: w.to_vec(),
    })
}

/// Points of the coarse log-spaced scan that seeds the golden section.
const SCAN_POINTS: usize = 400;
const GOLDEN_REL_WIDTH: f64 = 1e-10;

/// Minimize the response-domain functional over `bracket`: a log-spaced scan
/// locates the best cell, then golden section refines it.
pub fn scale_response_domain(
    dose: &[f64],
    m_target: &[f64],
    w: &[f64],
    p: &RichardsParams,
    bracket: (f64, f64),
) -> Result<ScalingResult> {
    check_lens(dose, m_target, w)?;
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(SipoError::BracketInvalid { lo, hi });
    }
    let phi = |a: f64| response_functional(a, dose, m_target, w, p);
    let ratio = (hi / lo).ln();
    let at = |k: usize| lo * (ratio * k as f64 / SCAN_POINTS as f64).exp();
    let best = (0..=SCAN_POINTS)
        .map(|k| (k, phi(at(k))))
        .fold((0, f64::INFINITY), |b, (k, v)| if v < b.1 { (k, v) } else { b });
    let mut a = at(best.0.saturating_sub(1));
    let mut b = at((best.0 + 1).min(SCAN_POINTS));

    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    while b - a > GOLDEN_REL_WIDTH * a.abs().max(b.abs()) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = phi(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = phi(x2);
        }
    }
    // The scan point can beat the refined one on a plateau.
    let mid = 0.5 * (a + b);
    let (alpha_star, objective_value) = [(mid, phi(mid)), (at(best.0), best.1)]
        .into_iter()
        .fold((f64::NAN, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    Ok(ScalingResult {
        alpha_star,
        domain: ScalingDomain::ResponseDomain,
        objective_value,
        weights: w.to_vec(),
    })
}

/// `α = f_crit`, the normalization anchor of the case formulations.
pub fn anchored(dose: &[f64], f_target: &[f64], w: &[f64], f_crit: f64) -> Result<ScalingResult> {
    check_lens(dose, f_target, w)?;
    if !(f_crit > 0.0 && f_crit.is_finite()) {
        return Err(SipoError::NonPositiveAlpha(f_crit));
    }
    Ok(ScalingResult {
        alpha_star: f_crit,
        domain: ScalingDomain::Anchored,
        objective_value: dose_functional(f_crit, dose, f_target, w),
        weights: w.to_vec(),
    })
}

/// `(α y, α f̃)`.
pub fn apply_scaling(y: &[f64], dose: &[f64], alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SipoError::NonPositiveAlpha(alpha));
    }
    let scale = |v: &[f64]| v.iter().map(|x| alpha * x).collect();
    Ok((scale(y), scale(dose)))
}

fn check_lens(a: &[f64], b: &[f64], w: &[f64]) -> Result<()> {
    for other in [b.len(), w.len()] {
        if other != a.len() {
            return Err(SipoError::ShapeMismatch {
                expected: a.len(),
                actual: other,
            });
        }
    }
    Ok(())
}

/// Gel-restricted data a calibrator may draw on.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationInput<'a> {
    /// Normalized optimal dose over the gel.
    pub dose: &'a [f64],
    pub f_target: &'a [f64],
    pub m_target: &'a [f64],
    pub weights: &'a [f64],
    pub params: &'a RichardsParams,
    pub f_crit: f64,
}

pub trait Calibrator: Send + Sync {
    fn name(&self) -> &'static str;
    fn calibrate(&self, input: &CalibrationInput<'_>) -> Result<ScalingResult>;
}

pub struct DoseCalibrator;
pub struct ResponseCalibrator;
pub struct AnchoredCalibrator;

impl Calibrator for DoseCalibrator {
    fn name(&self) -> &'static str {
        "dose"
    }

    fn calibrate(&self, i: &CalibrationInput<'_>) -> Result<ScalingResult> {
        scale_dose_domain(i.dose, i.f_target, i.weights)
    }
}

impl Calibrator for ResponseCalibrator {
    fn name(&self) -> &'static str {
        "response"
    }

    /// Bracket three decades either side of the dose-domain solution.
    fn calibrate(&self, i: &CalibrationInput<'_>) -> Result<ScalingResult> {
        let af = scale_dose_domain(i.dose, i.f_target, i.weights)?.alpha_star;
        scale_response_domain(i.dose, i.m_target, i.weights, i.params, (1e-3 * af, 1e3 * af))
    }
}

impl Calibrator for AnchoredCalibrator {
    fn name(&self) -> &'static str {
        "anchored"
    }

    fn calibrate(&self, i: &CalibrationInput<'_>) -> Result<ScalingResult> {
        anchored(i.dose, i.f_target, i.weights, i.f_crit)
    }
}

pub fn calibrators() -> &'static Registry<dyn Calibrator> {
    static REG: OnceLock<Registry<dyn Calibrator>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn Calibrator>::new("calibrator")
            .with("dose", || Box::new(DoseCalibrator))
            .with("response", || Box::new(ResponseCalibrator))
            .with("anchored", || Box::new(AnchoredCalibrator))
    })
}
