//! Volcano plots: −log10 p against effect size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TestedStudy;
use crate::stats::neg_log10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Effect above the null (harm, for risk ratios).
    Increase,
    /// Effect below the null (benefit).
    Decrease,
    Null,
}

impl Direction {
    pub fn of(effect: f64, null_value: f64) -> Self {
        if effect > null_value {
            Direction::Increase
        } else if effect < null_value {
            Direction::Decrease
        } else {
            Direction::Null
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolcanoPoint {
    pub label: String,
    pub effect: f64,
    pub p: f64,
    pub neg_log10_p: f64,
    pub direction: Direction,
    pub significant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DirectionCounts {
    pub significant_increase: usize,
    pub significant_decrease: usize,
    pub nonsignificant: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolcanoReport {
    pub points: Vec<VolcanoPoint>,
    pub null_value: f64,
    pub alpha: f64,
    pub m_tests: usize,
    pub corrected_alpha: f64,
    pub nominal_line: f64,
    pub bonferroni_line: f64,
    pub counts: DirectionCounts,
    /// Display the x-axis on a log scale. Counts do not depend on it.
    pub log_x: bool,
}

/// Strict rule: p equal to alpha is not significant.
pub fn is_significant(p: f64, alpha: f64) -> bool {
    p < alpha
}

/// Build a volcano report with nominal and Bonferroni lines.
///
/// `m_tests` is the size of the family being corrected for, which may
/// exceed the number of points shown.
pub fn build_volcano(tests: &[TestedStudy], null_value: f64, alpha: f64, m_tests: usize) -> Result<VolcanoReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha));
    }
    if m_tests < 1 || m_tests < tests.len() {
        return Err(Error::domain("m_tests", m_tests as f64));
    }
    let mut counts = DirectionCounts::default();
    let points: Vec<VolcanoPoint> = tests
        .iter()
        .map(|t| {
            let direction = Direction::of(t.record.effect, null_value);
            let significant = is_significant(t.result.p, alpha);
            match (significant, direction) {
                (true, Direction::Increase) => counts.significant_increase += 1,
                (true, Direction::Decrease) => counts.significant_decrease += 1,
                // A point exactly at the null has z = 0 and p = 1.
                _ => counts.nonsignificant += 1,
            }
            VolcanoPoint {
                label: t.record.label.clone(),
                effect: t.record.effect,
                p: t.result.p,
                neg_log10_p: t.result.neg_log10_p,
                direction,
                significant,
            }
        })
        .collect();
    let nominal_line = neg_log10(alpha);
    Ok(VolcanoReport {
        points,
        null_value,
        alpha,
        m_tests,
        corrected_alpha: alpha / m_tests as f64,
        nominal_line,
        bonferroni_line: nominal_line + (m_tests as f64).log10(),
        counts,
        log_x: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionCount {
    pub per_family: Vec<u64>,
    pub total: u64,
}

/// Count the questions in an analysis search space: the product of factor
/// sizes within each family (e.g. exposures × outcomes), summed over families.
pub fn count_questions(families: &[Vec<u64>]) -> Result<QuestionCount> {
    if families.is_empty() {
        return Err(Error::domain("number of families", 0.0));
    }
    let per_family = families
        .iter()
        .map(|f| {
            if f.is_empty() {
                return Err(Error::domain("factors in family", 0.0));
            }
            f.iter().try_fold(1u64, |acc, &k| {
                if k == 0 {
                    Err(Error::domain("factor size", 0.0))
                } else {
                    acc.checked_mul(k).ok_or(Error::domain("question count", f64::INFINITY))
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = per_family
        .iter()
        .try_fold(0u64, |acc, &k| acc.checked_add(k))
        .ok_or(Error::domain("question count", f64::INFINITY))?;
    Ok(QuestionCount { per_family, total })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullGap {
    /// No effect lies within `window` of the null.
    pub gap: bool,
    pub window: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nearest_below: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nearest_above: Option<f64>,
    pub above: usize,
    pub below: usize,
    pub at_null: usize,
}

/// Check for a hole in the effect distribution around the null and count
/// effects on either side.
pub fn gap_around_null(effects: &[f64], null_value: f64, window: f64) -> Result<NullGap> {
    if effects.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: effects.len(),
        });
    }
    if window.is_nan() || window < 0.0 {
        return Err(Error::domain("window", window));
    }
    let below = effects.iter().filter(|&&e| e < null_value);
    let above = effects.iter().filter(|&&e| e > null_value);
    Ok(NullGap {
        gap: effects.iter().all(|e| (e - null_value).abs() >= window) && !effects.contains(&null_value),
        window,
        nearest_below: below.clone().copied().reduce(f64::max),
        nearest_above: above.clone().copied().reduce(f64::min),
        above: above.count(),
        below: below.count(),
        at_null: effects.iter().filter(|&&e| e == null_value).count(),
    })
}
