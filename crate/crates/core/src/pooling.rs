//! Inverse-variance pooling, heterogeneity and Egger's regression test.
//!
//! Everything works on the scale the studies were tested on (see
//! [`crate::stats::Scale`]): raw effects in linear mode, log effects in
//! log mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TestedStudy;
use crate::lsq;
use crate::stats::{self, Scale, P_FLOOR};

/// An effect and its standard error on the working scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyEffect {
    pub effect: f64,
    pub se: f64,
}

pub fn study_effects(tests: &[TestedStudy]) -> Vec<StudyEffect> {
    tests
        .iter()
        .map(|t| StudyEffect {
            effect: t.working_effect(),
            se: t.result.se,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingModel {
    #[default]
    FixedEffect,
    /// DerSimonian–Laird random effects. Experimental.
    DersimonianLaird,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedEffectPool {
    pub pooled_effect: f64,
    pub pooled_se: f64,
    /// Normalized inverse-variance weights, in input order.
    pub weights: Vec<f64>,
}

fn check(studies: &[StudyEffect]) -> Result<()> {
    if studies.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: studies.len(),
        });
    }
    for s in studies {
        if !(s.se > 0.0 && s.se.is_finite()) {
            return Err(Error::domain("standard error", s.se));
        }
        if !s.effect.is_finite() {
            return Err(Error::domain("effect", s.effect));
        }
    }
    Ok(())
}

fn weighted_pool(studies: &[StudyEffect], extra_variance: f64) -> FixedEffectPool {
    let raw: Vec<f64> = studies.iter().map(|s| 1.0 / (s.se * s.se + extra_variance)).collect();
    let total: f64 = raw.iter().sum();
    let pooled = studies.iter().zip(&raw).map(|(s, w)| w * s.effect).sum::<f64>() / total;
    // Rounding can push a weighted mean a hair outside the data range.
    let (lo, hi) = studies.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s.effect), hi.max(s.effect))
    });
    FixedEffectPool {
        pooled_effect: pooled.clamp(lo, hi),
        pooled_se: (1.0 / total).sqrt(),
        weights: raw.iter().map(|w| w / total).collect(),
    }
}

pub fn pool_inverse_variance(studies: &[StudyEffect]) -> Result<FixedEffectPool> {
    check(studies)?;
    Ok(weighted_pool(studies, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Heterogeneity {
    pub q: f64,
    pub df: usize,
    pub i_squared: f64,
}

/// Cochran's Q with fixed-effect weights, and I² = max(0, (Q − df)/Q).
pub fn heterogeneity(studies: &[StudyEffect]) -> Result<Heterogeneity> {
    let pool = pool_inverse_variance(studies)?;
    let q: f64 = studies
        .iter()
        .map(|s| (s.effect - pool.pooled_effect).powi(2) / (s.se * s.se))
        .sum();
    let df = studies.len() - 1;
    let i_squared = if q > 0.0 { ((q - df as f64) / q).max(0.0) } else { 0.0 };
    Ok(Heterogeneity { q, df, i_squared })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EggerTest {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub df: usize,
    /// Two-sided p for the intercept from t(n − 2).
    pub intercept_p: f64,
    /// Residuals are zero; p is set from the intercept alone.
    pub degenerate: bool,
}

/// Egger's test: OLS of the standardized effect z on precision 1/se.
pub fn egger(z_and_precision: &[(f64, f64)]) -> Result<EggerTest> {
    let n = z_and_precision.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let rows: Vec<Vec<f64>> = z_and_precision.iter().map(|&(_, prec)| vec![1.0, prec]).collect();
    let z: Vec<f64> = z_and_precision.iter().map(|&(z, _)| z).collect();
    let fit = lsq::solve(&rows, &z)?;
    let (intercept, slope) = (fit.coefficients[0], fit.coefficients[1]);
    let df = n - 2;
    let scale = z.iter().map(|v| v * v).sum::<f64>().max(1.0);

    if fit.sse <= 1e-24 * scale {
        let zero = intercept.abs() <= 1e-10 * scale.sqrt();
        return Ok(EggerTest {
            intercept: if zero { 0.0 } else { intercept },
            slope,
            intercept_se: 0.0,
            df,
            intercept_p: if zero { 1.0 } else { P_FLOOR },
            degenerate: true,
        });
    }
    let sigma2 = fit.sse / df as f64;
    let intercept_se = (sigma2 * fit.unscaled_covariance()[0][0]).sqrt();
    let t = intercept / intercept_se;
    Ok(EggerTest {
        intercept,
        slope,
        intercept_se,
        df,
        intercept_p: stats::t_two_sided(t, df as f64).clamp(P_FLOOR, 1.0),
        degenerate: false,
    })
}

pub fn egger_test(tests: &[TestedStudy]) -> Result<EggerTest> {
    let pairs: Vec<(f64, f64)> = tests.iter().map(|t| (t.result.z, t.precision())).collect();
    egger(&pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledSummary {
    pub scale: Scale,
    pub model: PoolingModel,
    /// Pooled effect on the working scale.
    pub pooled_effect: f64,
    /// Pooled effect mapped back to the effect scale.
    pub pooled_effect_natural: f64,
    pub pooled_se: f64,
    pub q_statistic: f64,
    pub q_df: usize,
    pub i_squared: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_squared: Option<f64>,
    pub weights: Vec<f64>,
    /// Present when there are at least three studies with distinct precisions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub egger: Option<EggerTest>,
}

pub fn summarize(tests: &[TestedStudy], model: PoolingModel) -> Result<PooledSummary> {
    let studies = study_effects(tests);
    let het = heterogeneity(&studies)?;
    let (pool, tau_squared) = match model {
        PoolingModel::FixedEffect => (pool_inverse_variance(&studies)?, None),
        PoolingModel::DersimonianLaird => {
            let w: Vec<f64> = studies.iter().map(|s| 1.0 / (s.se * s.se)).collect();
            let sw: f64 = w.iter().sum();
            let sw2: f64 = w.iter().map(|x| x * x).sum();
            let tau2 = ((het.q - het.df as f64) / (sw - sw2 / sw)).max(0.0);
            (weighted_pool(&studies, tau2), Some(tau2))
        }
    };
    let egger = match egger_test(tests) {
        Ok(e) => Some(e),
        Err(Error::InsufficientData { .. } | Error::DegenerateRegressor) => None,
        Err(e) => return Err(e),
    };
    let scale = tests.first().map_or(Scale::Linear, |t| t.scale);
    Ok(PooledSummary {
        scale,
        model,
        pooled_effect: pool.pooled_effect,
        pooled_effect_natural: scale.inverse(pool.pooled_effect),
        pooled_se: pool.pooled_se,
        q_statistic: het.q,
        q_df: het.df,
        i_squared: het.i_squared,
        tau_squared,
        weights: pool.weights,
        egger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn se(effect: f64, se: f64) -> StudyEffect {
        StudyEffect { effect, se }
    }

    #[test]
    fn identical_studies() {
        let p = pool_inverse_variance(&[se(1.4, 0.3), se(1.4, 0.3)]).unwrap();
        assert_abs_diff_eq!(p.pooled_effect, 1.4, epsilon = 1e-15);
        assert_abs_diff_eq!(p.pooled_se, 0.3 / 2f64.sqrt(), epsilon = 1e-15);
        let h = heterogeneity(&[se(1.4, 0.3), se(1.4, 0.5)]).unwrap();
        assert_eq!(h.q, 0.0);
        assert_eq!(h.i_squared, 0.0);
    }

    #[test]
    fn weights_from_inverse_variance() {
        let p = pool_inverse_variance(&[se(0.0, 1.0), se(1.0, 1.0), se(2.0, 0.5)]).unwrap();
        assert_abs_diff_eq!(p.weights[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.weights[1], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.weights[2], 4.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn two_study_heterogeneity() {
        let h = heterogeneity(&[se(0.0, 1.0), se(2.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(h.q, 2.0, epsilon = 1e-15);
        assert_eq!(h.df, 1);
        assert_abs_diff_eq!(h.i_squared, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn nonpositive_se_rejected() {
        assert!(pool_inverse_variance(&[se(1.0, 0.0), se(1.0, 1.0)]).is_err());
        assert!(pool_inverse_variance(&[se(1.0, 1.0)]).is_err());
    }

    #[test]
    fn egger_through_origin() {
        let pairs: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 5.0].iter().map(|&prec| (0.7 * prec, prec)).collect();
        let e = egger(&pairs).unwrap();
        assert_eq!(e.intercept, 0.0);
        assert_eq!(e.intercept_p, 1.0);
        assert!(e.degenerate);
    }

    #[test]
    fn egger_preconditions() {
        assert!(matches!(
            egger(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            egger(&[(1.0, 2.0), (2.0, 2.0), (0.5, 2.0)]),
            Err(Error::DegenerateRegressor)
        ));
    }

    #[test]
    fn egger_recovers_known_intercept() {
        // z = 1.5 + 0.2·prec + noise that is orthogonal to [1, prec].
        let prec = [1.0, 2.0, 3.0, 4.0];
        let noise = [0.1, -0.1, -0.1, 0.1];
        let pairs: Vec<(f64, f64)> = prec.iter().zip(noise).map(|(&x, e)| (1.5 + 0.2 * x + e, x)).collect();
        let e = egger(&pairs).unwrap();
        assert_abs_diff_eq!(e.intercept, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e.slope, 0.2, epsilon = 1e-12);
        // sse = 0.04, sigma² = 0.02, (XᵀX)⁻¹₀₀ = 30/20 = 1.5
        assert_abs_diff_eq!(e.intercept_se, (0.02f64 * 1.5).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn random_effects_inflates_se_under_heterogeneity() {
        let studies = [se(0.0, 0.1), se(1.0, 0.1), se(2.0, 0.1)];
        let het = heterogeneity(&studies).unwrap();
        assert!(het.i_squared > 0.9);
        let w = [100.0; 3];
        let tau2 = (het.q - 2.0) / (300.0 - w.iter().map(|x| x * x).sum::<f64>() / 300.0);
        let re = weighted_pool(&studies, tau2);
        assert!(re.pooled_se > pool_inverse_variance(&studies).unwrap().pooled_se);
    }
}
