//! Generalized logistic (Richards) dose response and its inverse.

use crate::error::{Result, SipoError};
use crate::operators::DoseField;

field_newtype!(
    /// Per-voxel material response, row-major like [`DoseField`].
    ResponseField
);

/// `m = α + (k − α) / (1 + exp(−β (f − f0)))^(1/γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichardsParams {
    pub alpha: f64,
    pub k: f64,
    pub beta: f64,
    pub gamma: f64,
    pub f0: f64,
}

impl Default for RichardsParams {
    /// A plain logistic. The constants are arbitrary, not fitted to any resin.
    fn default() -> Self {
        Self {
            alpha: 0.0,
            k: 1.0,
            beta: 4.0,
            gamma: 1.0,
            f0: 1.0,
        }
    }
}

/// Relative distance from either asymptote below which no inverse is taken.
const MARGIN: f64 = 1e-12;

/// `ln(1 + eᶻ)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl RichardsParams {
    pub fn new(alpha: f64, k: f64, beta: f64, gamma: f64, f0: f64) -> Result<Self> {
        let p = Self {
            alpha,
            k,
            beta,
            gamma,
            f0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.k, self.beta, self.gamma, self.f0];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(SipoError::InvalidMaterial("parameters must be finite".into()));
        }
        if self.k <= self.alpha {
            return Err(SipoError::InvalidMaterial(format!(
                "need k > alpha, got k={} alpha={}",
                self.k, self.alpha
            )));
        }
        if self.beta <= 0.0 || self.gamma <= 0.0 {
            return Err(SipoError::InvalidMaterial(format!(
                "beta and gamma must be positive, got beta={} gamma={}",
                self.beta, self.gamma
            )));
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.k - self.alpha
    }

    /// `M(f)`.
    pub fn response(&self, f: f64) -> f64 {
        let z = -self.beta * (f - self.f0);
        self.alpha + self.span() * (-softplus(z) / self.gamma).exp()
    }

    /// `dM/df`.
    pub fn derivative(&self, f: f64) -> f64 {
        let z = -self.beta * (f - self.f0);
        // eᶻ / (1 + eᶻ), evaluated on the stable side.
        let logistic = if z > 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        };
        self.span() * (self.beta / self.gamma) * (-softplus(z) / self.gamma).exp() * logistic
    }

    /// True when `m` is far enough inside `(α, k)` for the inverse to be taken.
    pub fn invertible(&self, m: f64) -> bool {
        let margin = MARGIN * self.span();
        m.is_finite() && m - self.alpha > margin && self.k - m > margin
    }

    /// `M⁻¹(m)`; `None` outside the invertible range.
    pub fn try_dose(&self, m: f64) -> Option<f64> {
        if !self.invertible(m) {
            return None;
        }
        let ratio = self.span() / (m - self.alpha);
        // ratio^γ − 1 through expm1 keeps precision near the upper asymptote.
        let q = (self.gamma * ratio.ln()).exp_m1();
        Some(self.f0 - q.ln() / self.beta)
    }
}

/// Elementwise `M(f)`.
pub fn richards_forward(f: &[f64], p: &RichardsParams) -> ResponseField {
    ResponseField(f.iter().map(|&v| p.response(v)).collect())
}

/// Elementwise `M⁻¹(m)`. Every entry must lie strictly inside `(α, k)`.
pub fn richards_inverse(m: &[f64], p: &RichardsParams) -> Result<DoseField> {
    let mut bad = Vec::new();
    let out: Vec<f64> = m
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            p.try_dose(v).unwrap_or_else(|| {
                bad.push(i);
                f64::NAN
            })
        })
        .collect();
    if !bad.is_empty() {
        return Err(SipoError::OutOfInvertibleRange { indices: bad });
    }
    Ok(DoseField(out))
}

/// Target dose from a target response. Voxels with `m ≤ α` are outside the
/// part and get zero dose; all others must be invertible.
pub fn response_to_dose(m_target: &[f64], p: &RichardsParams) -> Result<DoseField> {
    let mut bad = Vec::new();
    let mut any = false;
    let out: Vec<f64> = m_target
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v <= p.alpha {
                return 0.0;
            }
            any = true;
            match p.try_dose(v) {
                Some(f) if f > 0.0 => f,
                _ => {
                    bad.push(i);
                    0.0
                }
            }
        })
        .collect();
    if !bad.is_empty() {
        // A response that inverts to a nonpositive dose is unreachable too.
        let nonpositive: Vec<usize> = bad
            .iter()
            .copied()
            .filter(|&i| p.try_dose(m_target[i]).is_some())
            .collect();
        if nonpositive.len() == bad.len() {
            return Err(SipoError::NonPositiveTargetDose { indices: nonpositive });
        }
        return Err(SipoError::OutOfInvertibleRange { indices: bad });
    }
    if !any {
        return Err(SipoError::AllZeroTarget);
    }
    Ok(DoseField(out))
}
