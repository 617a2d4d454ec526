//! Scalar statistics: the standard normal distribution, the
//! (effect, CL low, CL high) → (SE, Z, p, −log10 p) pipeline, and the
//! F / Student-t tail probabilities used by the regression tests.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::{beta, erf};

use crate::error::{Error, Result};

/// Smallest p-value reported. p is clamped here before taking log10 so
/// that −log10 p stays finite.
pub const P_FLOOR: f64 = f64::MIN_POSITIVE;

/// Scale on which confidence limits are turned into a standard error.
///
/// `Linear` works on the raw ratio scale and is the mode that reproduces the
/// published audit tables. `Log` is the conventional meta-analytic treatment
/// of ratio measures and requires strictly positive values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

impl Scale {
    /// Map an effect-scale value onto the working scale.
    pub fn transform(self, x: f64) -> Result<f64> {
        match self {
            Scale::Linear => Ok(x),
            Scale::Log if x > 0.0 => Ok(x.ln()),
            Scale::Log => Err(Error::domain("log-scale value", x)),
        }
    }

    /// Map a working-scale value back onto the effect scale.
    pub fn inverse(self, x: f64) -> f64 {
        match self {
            Scale::Linear => x,
            Scale::Log => x.exp(),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
        })
    }
}

/// A published effect estimate with its confidence limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub effect: f64,
    pub cl_low: f64,
    pub cl_high: f64,
    pub confidence_level: f64,
    /// No-effect level: 1.0 for ratios, 0.0 for differences.
    pub null_value: f64,
}

impl EffectEstimate {
    pub fn new(effect: f64, cl_low: f64, cl_high: f64, confidence_level: f64, null_value: f64) -> Result<Self> {
        let e = EffectEstimate {
            effect,
            cl_low,
            cl_high,
            confidence_level,
            null_value,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("effect", self.effect),
            ("cl_low", self.cl_low),
            ("cl_high", self.cl_high),
            ("null value", self.null_value),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(what, v));
            }
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::domain("confidence level", self.confidence_level));
        }
        if self.cl_low >= self.cl_high {
            return Err(Error::InvalidInterval {
                low: self.cl_low,
                high: self.cl_high,
            });
        }
        if self.effect < self.cl_low || self.effect > self.cl_high {
            return Err(Error::domain("effect outside its confidence limits", self.effect));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// Standard error on the working scale.
    pub se: f64,
    pub z: f64,
    /// Two-sided p-value, clamped below at [`P_FLOOR`].
    pub p: f64,
    pub neg_log10_p: f64,
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("normal_cdf argument", x));
    }
    Ok(0.5 * erf::erfc(-x / SQRT_2))
}

/// Upper tail 1 − Φ(x) without cancellation.
pub fn normal_sf(x: f64) -> Result<f64> {
    normal_cdf(-x)
}

/// Inverse of [`normal_cdf`].
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain("normal_quantile probability", q));
    }
    // 1 − q is exact for q ≥ 0.5, so reflecting keeps exact antisymmetry.
    if q > 0.5 {
        return Ok(-lower_quantile(1.0 - q));
    }
    Ok(lower_quantile(q))
}

fn lower_quantile(q: f64) -> f64 {
    let x = -SQRT_2 * erf::erfc_inv(2.0 * q);
    // One Newton step on Φ(x) = q tightens the rational approximation.
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if pdf > 0.0 {
        x - (0.5 * erf::erfc(-x / SQRT_2) - q) / pdf
    } else {
        x
    }
}

/// Two-sided critical value for a central confidence interval.
pub fn critical_value(confidence_level: f64) -> Result<f64> {
    if !(confidence_level > 0.0 && confidence_level < 1.0) {
        return Err(Error::domain("confidence level", confidence_level));
    }
    normal_quantile((1.0 + confidence_level) / 2.0)
}

/// Two-sided normal p-value 2·(1 − Φ(|z|)), clamped at [`P_FLOOR`].
pub fn two_sided_p(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::domain("z statistic", z));
    }
    let p = erf::erfc(z.abs() / SQRT_2);
    Ok(p.clamp(P_FLOOR, 1.0))
}

pub fn neg_log10(p: f64) -> f64 {
    -p.max(P_FLOOR).log10()
}

/// Standard error implied by a confidence interval: interval width over
/// twice the critical value.
pub fn se_from_ci(e: &EffectEstimate, scale: Scale) -> Result<f64> {
    e.validate()?;
    let zc = critical_value(e.confidence_level)?;
    let width = scale.transform(e.cl_high)? - scale.transform(e.cl_low)?;
    let se = width / (2.0 * zc);
    if !(se > 0.0 && se.is_finite()) {
        return Err(Error::InvalidInterval {
            low: e.cl_low,
            high: e.cl_high,
        });
    }
    Ok(se)
}

/// Test the estimate against its null value.
///
/// The sign of `z` follows the direction of the effect; `p` is two-sided.
pub fn test_against_null(e: &EffectEstimate, scale: Scale) -> Result<TestResult> {
    let se = se_from_ci(e, scale)?;
    let diff = scale.transform(e.effect)? - scale.transform(e.null_value)?;
    let z = diff / se;
    let p = if z == 0.0 { 1.0 } else { two_sided_p(z)? };
    Ok(TestResult {
        se,
        z,
        p,
        neg_log10_p: neg_log10(p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplicationStrength {
    /// p ≤ 0.001: a replicate is likely to be significant as well.
    Strong,
    /// 0.001 < p ≤ 0.05.
    Weak,
    None,
}

pub fn replication_strength(p: f64) -> Result<ReplicationStrength> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain("p-value", p));
    }
    Ok(if p <= 0.001 {
        ReplicationStrength::Strong
    } else if p <= 0.05 {
        ReplicationStrength::Weak
    } else {
        ReplicationStrength::None
    })
}

/// P(F > f) for F ~ F(d1, d2).
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    beta::beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
}

/// P(|T| > |t|) for T ~ Student t with `df` degrees of freedom.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta::beta_reg(df / 2.0, 0.5, df / (df + t * t))
}
