//! Singular-value decay fits and the finite-scale ideal exponent report.

use serde::{Deserialize, Serialize};

use crate::construct::CommutatorPair;
use crate::error::{Error, Result};
use crate::matrix::{singular_values, Matrix};
use crate::testgen::Decay;

/// Values below this fraction of `s₁` are roundoff and excluded from fits.
pub const FIT_CUTOFF: f64 = 1e-14;
/// Minimum number of values above the cutoff for a fit.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    /// `s_k ≈ c·ρᵏ`, fitted as `ln s_k` against `k`.
    Geometric,
    /// `s_k ≈ c·k^{−α}`, fitted as `ln s_k` against `ln k`.
    Polynomial,
}

impl DecayModel {
    /// Model matching a generator decay family (flat families use geometric).
    pub fn for_decay(decay: &Decay) -> Self {
        match decay {
            Decay::Polynomial { .. } => DecayModel::Polynomial,
            _ => DecayModel::Geometric,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayProfile {
    pub values: Vec<f64>,
    pub model: DecayModel,
    /// `ρ` for geometric, `α` for polynomial.
    pub fitted_param: f64,
    /// Slope of the log-space regression (`ln ρ` or `−α`).
    pub log_slope: f64,
    /// R² of the log-space regression.
    pub fit_quality: f64,
    /// First index (0-based) with `s_k < 1e-14·s₁`; the fit uses indices below it.
    pub cutoff_index: usize,
}

/// Log-space least-squares fit of a descending sequence.
pub fn decay_fit(values: &[f64], model: DecayModel) -> Result<DecayProfile> {
    let top = values.first().copied().unwrap_or(0.0);
    let cutoff_index = values
        .iter()
        .position(|&s| s.is_nan() || s <= 0.0 || s < FIT_CUTOFF * top)
        .unwrap_or(values.len());
    if cutoff_index < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { available: cutoff_index, required: MIN_FIT_POINTS });
    }

    let points: Vec<(f64, f64)> = values[..cutoff_index]
        .iter()
        .enumerate()
        .map(|(idx, &s)| {
            let k = (idx + 1) as f64;
            let x = match model {
                DecayModel::Geometric => k,
                DecayModel::Polynomial => k.ln(),
            };
            (x, s.ln())
        })
        .collect();
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let fit_quality = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    let fitted_param = match model {
        DecayModel::Geometric => slope.exp(),
        DecayModel::Polynomial => -slope,
    };
    Ok(DecayProfile {
        values: values.to_vec(),
        model,
        fitted_param,
        log_slope: slope,
        fit_quality,
        cutoff_index,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    /// `t` carried by the pair (`1/2^{n−3}` in theorem mode).
    pub guaranteed_t: f64,
    /// Log-slope of `s(B)` over the log-slope of `s(A)`; 0 when `A` shows no decay.
    pub achieved_b: f64,
    /// Same for `C`.
    pub achieved_c: f64,
    /// `max_k s_k(B) / s_{⌈k/n⌉}(A)^t` over indices above the cutoffs.
    pub domination_constant: f64,
    /// Same rule applied to `C`.
    pub domination_constant_c: f64,
    pub profile_a: DecayProfile,
    pub profile_b: DecayProfile,
    pub profile_c: DecayProfile,
}

/// Compares the decay of `s(B)`, `s(C)` against `s(A)` raised to the pair's exponent.
pub fn exponent_report(a: &Matrix, pair: &CommutatorPair, model: DecayModel) -> Result<ExponentReport> {
    let profile_a = decay_fit(&singular_values(a), model)?;
    let profile_b = decay_fit(&singular_values(&pair.b), model)?;
    let profile_c = decay_fit(&singular_values(&pair.c), model)?;

    let ratio = |p: &DecayProfile| {
        if profile_a.log_slope.abs() > 1e-12 {
            p.log_slope / profile_a.log_slope
        } else {
            0.0
        }
    };
    let t = pair.exponent;
    let n = pair.n.max(1);
    Ok(ExponentReport {
        guaranteed_t: t,
        achieved_b: ratio(&profile_b),
        achieved_c: ratio(&profile_c),
        domination_constant: domination(&profile_b, &profile_a, n, t),
        domination_constant_c: domination(&profile_c, &profile_a, n, t),
        profile_a,
        profile_b,
        profile_c,
    })
}

fn domination(factor: &DecayProfile, a: &DecayProfile, n: usize, t: f64) -> f64 {
    (0..factor.cutoff_index)
        .filter_map(|idx| {
            let k = idx + 1;
            let a_idx = k.div_ceil(n) - 1;
            (a_idx < a.cutoff_index).then(|| factor.values[idx] / a.values[a_idx].powf(t))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_exact() {
        let values: Vec<f64> = (1..=20).map(|k| 0.5f64.powi(k)).collect();
        let fit = decay_fit(&values, DecayModel::Geometric).unwrap();
        assert!((fit.fitted_param - 0.5).abs() < 1e-12);
        assert!((fit.fit_quality - 1.0).abs() < 1e-12);
        assert_eq!(fit.cutoff_index, 20);
    }

    #[test]
    fn polynomial_exact() {
        let values: Vec<f64> = (1..=30).map(|k| (k as f64).powi(-2)).collect();
        let fit = decay_fit(&values, DecayModel::Polynomial).unwrap();
        assert!((fit.fitted_param - 2.0).abs() < 1e-12);
        assert!((fit.fit_quality - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_sequence() {
        let fit = decay_fit(&[3.0; 5], DecayModel::Geometric).unwrap();
        assert_eq!(fit.fitted_param, 1.0);
        assert_eq!(fit.fit_quality, 1.0);
    }

    #[test]
    fn cutoff_excludes_roundoff() {
        let values = [1.0, 0.5, 0.25, 1e-15, 0.0];
        let fit = decay_fit(&values, DecayModel::Geometric).unwrap();
        assert_eq!(fit.cutoff_index, 3);
        assert!((fit.fitted_param - 0.5).abs() < 1e-12);
    }

    #[test]
    fn insufficient_data() {
        assert!(matches!(
            decay_fit(&[1.0, 0.5, 0.0], DecayModel::Geometric),
            Err(Error::InsufficientData { available: 2, .. })
        ));
        assert!(decay_fit(&[], DecayModel::Polynomial).is_err());
    }
}
