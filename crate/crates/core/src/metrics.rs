//! Scale-free conformity and separation metrics.

use crate::error::{Result, SipoError};
use crate::material::RichardsParams;

/// Extrema over the gel of `dose / reference`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GelRatios {
    pub min: f64,
    pub max: f64,
}

pub fn gel_ratios(dose: &[f64], reference: &[f64], gel: &[usize]) -> Result<GelRatios> {
    if gel.is_empty() {
        return Err(SipoError::EmptyGel);
    }
    let mut bad_ref = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in gel {
        if reference[i] <= 0.0 {
            bad_ref.push(i);
            continue;
        }
        if dose[i] <= 0.0 {
            return Err(SipoError::NonPositiveDose);
        }
        let r = dose[i] / reference[i];
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if !bad_ref.is_empty() {
        return Err(SipoError::NonPositiveTargetDose { indices: bad_ref });
    }
    Ok(GelRatios { min: lo, max: hi })
}

fn region_max(values: &[f64], region: &[usize]) -> Option<f64> {
    region.iter().map(|&i| values[i]).reduce(f64::max)
}

fn region_min(values: &[f64], region: &[usize]) -> Option<f64> {
    region.iter().map(|&i| values[i]).reduce(f64::min)
}

/// Dose-to-target value ratio: spread of `dose / f_T` over the gel.
pub fn dtvr(dose: &[f64], f_target: &[f64], gel: &[usize]) -> Result<f64> {
    let r = gel_ratios(dose, f_target, gel)?;
    Ok(r.max / r.min)
}

/// Dose spillage ratio against the normalized target `f̃_T = f_T / f_crit`:
/// worst band dose over the smallest gel dose relative to `f̃_T`.
pub fn dsr(dose: &[f64], f_tilde: &[f64], gel: &[usize], band: &[usize]) -> Result<f64> {
    let r = gel_ratios(dose, f_tilde, gel)?;
    let band_max = region_max(dose, band).ok_or(SipoError::EmptyBand)?;
    Ok(band_max / r.min)
}

/// The same ratio written with an explicit critical dose and the raw target.
pub fn dsr_with_threshold(
    dose: &[f64],
    f_target: &[f64],
    f_crit: f64,
    gel: &[usize],
    band: &[usize],
) -> Result<f64> {
    let r = gel_ratios(dose, f_target, gel)?;
    let band_max = region_max(dose, band).ok_or(SipoError::EmptyBand)?;
    Ok((band_max / f_crit) / r.min)
}

/// Process separation ratios `(PSR_f, PSR_m)`: smallest gel value over the
/// largest band value, for the dose and for the response. A zero band maximum
/// gives `+∞`.
pub fn psr(dose: &[f64], gel: &[usize], band: &[usize], p: &RichardsParams) -> Result<(f64, f64)> {
    let gel_min = region_min(dose, gel).ok_or(SipoError::EmptyGel)?;
    let band_max = region_max(dose, band).ok_or(SipoError::EmptyBand)?;
    let ratio = |num: f64, den: f64| if den == 0.0 { f64::INFINITY } else { num / den };
    Ok((
        ratio(gel_min, band_max),
        ratio(p.response(gel_min), p.response(band_max)),
    ))
}

/// Everything reported for one dose field. Band-dependent entries are `None`
/// when the band is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub dtvr_f: f64,
    pub dtvr_m: f64,
    pub dsr: Option<f64>,
    pub psr_f: Option<f64>,
    pub psr_m: Option<f64>,
    /// Extrema over the gel of `f / f_T`.
    pub gel_ratio_min: f64,
    pub gel_ratio_max: f64,
    /// Extrema over the gel of `M(f) / m_T`.
    pub gel_response_ratio_min: f64,
    pub gel_response_ratio_max: f64,
    pub gel_min_f: f64,
    pub gel_min_m: f64,
    pub band_max_f: Option<f64>,
    pub band_max_m: Option<f64>,
}

/// Inputs shared by every metric.
#[derive(Debug, Clone, Copy)]
pub struct MetricsInput<'a> {
    pub dose: &'a [f64],
    pub f_target: &'a [f64],
    pub m_target: &'a [f64],
    pub f_crit: f64,
    pub gel: &'a [usize],
    pub band: &'a [usize],
    pub params: &'a RichardsParams,
}

/// Compute all metrics. The gel minimum of `dose / f_T` is evaluated once and
/// feeds both DTVR and DSR.
pub fn evaluate(input: MetricsInput<'_>) -> Result<MetricsReport> {
    let MetricsInput {
        dose,
        f_target,
        m_target,
        f_crit,
        gel,
        band,
        params,
    } = input;
    if f_crit <= 0.0 {
        return Err(SipoError::NonPositiveThreshold(f_crit));
    }
    let shared = gel_ratios(dose, f_target, gel)?;
    let response: Vec<f64> = dose.iter().map(|&f| params.response(f)).collect();
    let (mut m_lo, mut m_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in gel {
        let r = response[i] / m_target[i];
        m_lo = m_lo.min(r);
        m_hi = m_hi.max(r);
    }
    let band_max_f = region_max(dose, band);
    let gel_min_f = region_min(dose, gel).ok_or(SipoError::EmptyGel)?;
    let (psr_f, psr_m) = match band_max_f {
        Some(_) => {
            let (a, b) = psr(dose, gel, band, params)?;
            (Some(a), Some(b))
        }
        None => (None, None),
    };
    Ok(MetricsReport {
        dtvr_f: shared.max / shared.min,
        dtvr_m: m_hi / m_lo,
        // min_gel(dose / f̃_T) = f_crit · min_gel(dose / f_T)
        dsr: band_max_f.map(|b| b / (f_crit * shared.min)),
        psr_f,
        psr_m,
        gel_ratio_min: shared.min,
        gel_ratio_max: shared.max,
        gel_response_ratio_min: m_lo,
        gel_response_ratio_max: m_hi,
        gel_min_f,
        gel_min_m: params.response(gel_min_f),
        band_max_f,
        band_max_m: band_max_f.map(|b| params.response(b)),
    })
}

/// Round-trip decimal formatting used by every numeric CSV.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        // `+ 0.0` folds negative zero into zero.
        format!("{:.16e}", v + 0.0)
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "undefined".into())
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "dtvr_f,dtvr_m,dsr,psr_f,psr_m,gel_ratio_min,gel_ratio_max,\
gel_response_ratio_min,gel_response_ratio_max,gel_min_f,gel_min_m,band_max_f,band_max_m";

    pub fn csv_row(&self) -> String {
        [
            fmt_num(self.dtvr_f),
            fmt_num(self.dtvr_m),
            fmt_opt(self.dsr),
            fmt_opt(self.psr_f),
            fmt_opt(self.psr_m),
            fmt_num(self.gel_ratio_min),
            fmt_num(self.gel_ratio_max),
            fmt_num(self.gel_response_ratio_min),
            fmt_num(self.gel_response_ratio_max),
            fmt_num(self.gel_min_f),
            fmt_num(self.gel_min_m),
            fmt_opt(self.band_max_f),
            fmt_opt(self.band_max_m),
        ]
        .join(",")
    }
}

/// One histogram bin of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub region: &'static str,
    pub bin_left: f64,
    pub count: usize,
}

pub const REGION_NAMES: [&str; 3] = ["gel", "band", "ext"];

/// Per-region histograms of `values` on shared, equal-width bins spanning the
/// whole field. `labels` come from `DomainPartition::region_labels`.
pub fn region_histograms(values: &[f64], labels: &[u8], bins: usize) -> Vec<HistogramBin> {
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![[0usize; 3]; bins];
    for (&v, &l) in values.iter().zip(labels) {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b][l as usize] += 1;
    }
    let mut out = Vec::with_capacity(3 * bins);
    for (r, name) in REGION_NAMES.iter().enumerate() {
        for (b, c) in counts.iter().enumerate() {
            out.push(HistogramBin {
                region: name,
                bin_left: lo + b as f64 * width,
                count: c[r],
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dtvr_examples() {
        let f_t = [1.0, 2.0, 0.5, 0.0];
        let gel = [0, 1, 2];
        let dose: Vec<f64> = f_t.iter().map(|v| 3.7 * v).collect();
        assert_eq!(dtvr(&dose, &f_t, &gel).unwrap(), 1.0);
        let d = [0.9, 2.0, 0.55, 5.0];
        assert!((dtvr(&d, &f_t, &gel).unwrap() - 1.1 / 0.9).abs() < 1e-15);
        assert_eq!(dtvr(&[0.0, 1.0, 1.0, 1.0], &f_t, &gel), Err(SipoError::NonPositiveDose));
        assert_eq!(dtvr(&d, &f_t, &[]), Err(SipoError::EmptyGel));
    }

    #[test]
    fn dsr_examples() {
        let f_tilde = [1.0, 1.5, 0.0, 0.0];
        let gel = [0, 1];
        let band = [2, 3];
        assert_eq!(dsr(&[2.0, 3.0, 0.0, 0.0], &f_tilde, &gel, &band).unwrap(), 0.0);
        assert_eq!(dsr(&[2.0, 3.0, 2.0, 1.0], &f_tilde, &gel, &band).unwrap(), 1.0);
        assert_eq!(dsr(&[2.0, 3.0, 2.0, 1.0], &f_tilde, &gel, &[]), Err(SipoError::EmptyBand));
    }

    #[test]
    fn psr_examples() {
        let p = RichardsParams::default();
        let (pf, _) = psr(&[1.0, 1.2, 1.0, 0.3], &[0, 1], &[2, 3], &p).unwrap();
        assert_eq!(pf, 1.0);
        let (pf, pm) = psr(&[1.0, 1.2, 0.0, 0.0], &[0, 1], &[2, 3], &p).unwrap();
        assert_eq!(pf, f64::INFINITY);
        assert!(pm.is_finite() && pm > 1.0);
        assert_eq!(psr(&[1.0], &[0], &[], &p), Err(SipoError::EmptyBand));
    }

    #[test]
    fn empty_band_reports_undefined() {
        let p = RichardsParams::default();
        let r = evaluate(MetricsInput {
            dose: &[1.0, 2.0],
            f_target: &[1.0, 1.0],
            m_target: &[0.5, 0.5],
            f_crit: 1.0,
            gel: &[0, 1],
            band: &[],
            params: &p,
        })
        .unwrap();
        assert_eq!(r.dsr, None);
        assert!(r.csv_row().contains("undefined"));
        assert_eq!(r.csv_row().split(',').count(), MetricsReport::CSV_HEADER.split(',').count());
    }

    #[test]
    fn histograms_partition_counts() {
        let values = [0.0, 0.5, 1.0, 0.25, 0.75, 1.0];
        let labels = [0u8, 0, 1, 2, 1, 0];
        let h = region_histograms(&values, &labels, 4);
        assert_eq!(h.len(), 12);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 6);
        let gel: usize = h.iter().filter(|b| b.region == "gel").map(|b| b.count).sum();
        assert_eq!(gel, 3);
        assert_eq!(h[3].count, 1);
        assert_eq!(h[7].count, 2);
    }

    fn field(seed: u64, n: usize) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0.05..2.0)).collect()
    }

    proptest! {
        #[test]
        fn dtvr_dsr_are_scale_free(seed in 0u64..10_000, e in -6i32..=6) {
            let dose = field(seed, 20);
            let f_t = field(seed + 1, 20);
            let gel: Vec<usize> = (0..10).collect();
            let band: Vec<usize> = (10..20).collect();
            let f_crit = gel.iter().map(|&i| f_t[i]).fold(f64::INFINITY, f64::min);
            let f_tilde: Vec<f64> = f_t.iter().map(|v| v / f_crit).collect();
            let k = 10f64.powi(e);
            let scaled: Vec<f64> = dose.iter().map(|v| v * k).collect();
            let a = dtvr(&dose, &f_t, &gel).unwrap();
            let b = dtvr(&scaled, &f_t, &gel).unwrap();
            prop_assert!((a - b).abs() <= 1e-14 * a);
            let a = dsr(&dose, &f_tilde, &gel, &band).unwrap();
            let b = dsr(&scaled, &f_tilde, &gel, &band).unwrap();
            prop_assert!((a - b).abs() <= 1e-14 * a);
        }

        #[test]
        fn threshold_and_normalized_forms_agree(seed in 0u64..10_000) {
            let dose = field(seed, 16);
            let f_t = field(seed + 7, 16);
            let gel: Vec<usize> = (0..8).collect();
            let band: Vec<usize> = (8..16).collect();
            let f_crit = gel.iter().map(|&i| f_t[i]).fold(f64::INFINITY, f64::min);
            let f_tilde: Vec<f64> = f_t.iter().map(|v| v / f_crit).collect();
            let a = dsr(&dose, &f_tilde, &gel, &band).unwrap();
            let b = dsr_with_threshold(&dose, &f_t, f_crit, &gel, &band).unwrap();
            prop_assert!((a - b).abs() <= 1e-14 * a);
            // The shared-denominator report agrees with the standalone metrics.
            let m_t: Vec<f64> = f_t.iter().map(|&f| RichardsParams::default().response(f)).collect();
            let r = evaluate(MetricsInput {
                dose: &dose, f_target: &f_t, m_target: &m_t, f_crit,
                gel: &gel, band: &band, params: &RichardsParams::default(),
            }).unwrap();
            prop_assert!((r.dsr.unwrap() - a).abs() <= 1e-14 * a);
            let d = dtvr(&dose, &f_t, &gel).unwrap();
            prop_assert!((r.dtvr_f - d).abs() <= 1e-14 * d);
        }

        #[test]
        fn response_separation_follows_dose_separation(seed in 0u64..10_000) {
            let p = RichardsParams::default();
            let dose = field(seed, 12);
            let gel: Vec<usize> = (0..6).collect();
            let band: Vec<usize> = (6..12).collect();
            let (pf, pm) = psr(&dose, &gel, &band, &p).unwrap();
            prop_assert_eq!((pf - 1.0).signum(), (pm - 1.0).signum());
            prop_assert_eq!(pf > 1.0, {
                // A threshold separates the regions iff every gel value beats every band value.
                gel.iter().all(|&i| band.iter().all(|&j| dose[i] > dose[j]))
            });
        }
    }
}
