//! P-value plots and their diagnosis.
//!
//! Ranked p-values are plotted against 1..n. Under no effect they scatter
//! around a 45-degree line; a consistent effect gives a shallow line of
//! small p-values; a mix of effect and no-effect studies gives a hockey
//! stick (a shallow blade of small p-values, then a steep handle).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TestedStudy;
use crate::lsq;
use crate::stats::{self, P_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub rank: usize,
    pub p: f64,
}

/// Ranked p-values with the uniform reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValuePlot {
    pub points: Vec<PlotPoint>,
    /// Expected uniform order statistics i/(n+1).
    pub reference: Vec<f64>,
    pub reference_convention: String,
    /// Labels in rank order, when built from studies.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub labels: Vec<String>,
}

impl PValuePlot {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn p_values(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.p).collect()
    }

    fn ranks(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.rank as f64).collect()
    }
}

pub fn build_plot(tests: &[TestedStudy]) -> Result<PValuePlot> {
    let mut sorted: Vec<&TestedStudy> = tests.iter().collect();
    sorted.sort_by_key(|t| t.rank);
    let mut plot = build_plot_from_p(&sorted.iter().map(|t| t.result.p).collect::<Vec<_>>())?;
    plot.labels = sorted.iter().map(|t| t.record.label.clone()).collect();
    Ok(plot)
}

/// Build a plot from raw p-values (any order).
pub fn build_plot_from_p(p_values: &[f64]) -> Result<PValuePlot> {
    let n = p_values.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if let Some(&bad) = p_values.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::domain("p-value", bad));
    }
    let mut sorted = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let denom = (n + 1) as f64;
    Ok(PValuePlot {
        points: sorted
            .into_iter()
            .enumerate()
            .map(|(i, p)| PlotPoint { rank: i + 1, p })
            .collect(),
        reference: (1..=n).map(|i| i as f64 / denom).collect(),
        reference_convention: "i/(n+1)".into(),
        labels: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub sse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    /// Constant, linear and squared-rank coefficients.
    pub coefficients: [f64; 3],
    pub sse: f64,
}

impl QuadraticFit {
    pub fn curvature(&self) -> f64 {
        self.coefficients[2]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [a, b, c] = self.coefficients;
        a + b * x + c * x * x
    }
}

fn line_through(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let fit = lsq::polyfit(x, y, 1)?;
    Ok(LinearFit {
        intercept: fit.coefficients[0],
        slope: fit.coefficients[1],
        sse: fit.sse,
    })
}

/// OLS of p on rank. Needs at least 3 points.
pub fn fit_linear(plot: &PValuePlot) -> Result<LinearFit> {
    if plot.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: plot.len(),
        });
    }
    line_through(&plot.ranks(), &plot.p_values())
}

/// OLS of p on rank and rank². Needs at least 4 points.
pub fn fit_quadratic(plot: &PValuePlot) -> Result<QuadraticFit> {
    if plot.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: plot.len(),
        });
    }
    let fit = lsq::polyfit(&plot.ranks(), &plot.p_values(), 2)?;
    Ok(QuadraticFit {
        coefficients: [fit.coefficients[0], fit.coefficients[1], fit.coefficients[2]],
        sse: fit.sse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedComparison {
    /// `None` when the quadratic fit is exact.
    pub f_statistic: Option<f64>,
    pub df_denominator: usize,
    pub p: f64,
    /// Set when the residual variance of the quadratic fit is zero.
    pub degenerate: bool,
}

/// F-test on the squared-rank term.
///
/// `scale` is the total sum of squares of the response; it sets the
/// tolerance below which an SSE counts as zero.
pub fn compare_nested(linear: &LinearFit, quadratic: &QuadraticFit, n: usize, scale: f64) -> Result<NestedComparison> {
    if n < 4 {
        return Err(Error::InsufficientData { needed: 4, got: n });
    }
    let df = n - 3;
    let tol = 1e-24 * scale.max(1.0);
    let improvement = (linear.sse - quadratic.sse).max(0.0);
    if improvement <= tol {
        return Ok(NestedComparison {
            f_statistic: Some(0.0),
            df_denominator: df,
            p: 1.0,
            degenerate: quadratic.sse <= tol,
        });
    }
    if quadratic.sse <= tol {
        return Ok(NestedComparison {
            f_statistic: None,
            df_denominator: df,
            p: P_FLOOR,
            degenerate: true,
        });
    }
    let f = improvement / (quadratic.sse / df as f64);
    Ok(NestedComparison {
        f_statistic: Some(f),
        df_denominator: df,
        p: stats::f_sf(f, 1.0, df as f64).clamp(P_FLOOR, 1.0),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentedFit {
    /// Last rank of the left segment; the break sits between this rank and the next.
    pub breakpoint: usize,
    pub left: LinearFit,
    pub right: LinearFit,
    pub sse: f64,
}

impl SegmentedFit {
    pub fn slope_ratio(&self) -> f64 {
        self.left.slope / self.right.slope
    }
}

/// Two independent lines, split at the breakpoint minimizing total SSE.
///
/// Candidate breakpoints are ranks 2..=n−2 so each side has two or more
/// points. Ties (within rounding) go to the smallest breakpoint.
pub fn fit_segmented(plot: &PValuePlot) -> Result<SegmentedFit> {
    let n = plot.len();
    if n < 6 {
        return Err(Error::InsufficientData { needed: 6, got: n });
    }
    let x = plot.ranks();
    let y = plot.p_values();
    let tol = 1e-12 * total_ss(&y).max(f64::MIN_POSITIVE);

    let mut best: Option<SegmentedFit> = None;
    for b in 2..=n - 2 {
        let left = line_through(&x[..b], &y[..b])?;
        let right = line_through(&x[b..], &y[b..])?;
        let sse = left.sse + right.sse;
        if best.as_ref().is_none_or(|cur| sse < cur.sse - tol) {
            best = Some(SegmentedFit {
                breakpoint: b,
                left,
                right,
                sse,
            });
        }
    }
    Ok(best.expect("at least one candidate breakpoint"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p: f64,
}

/// One-sample Kolmogorov–Smirnov test against Uniform(0, 1).
pub fn ks_uniform(plot: &PValuePlot) -> Result<KsResult> {
    let n = plot.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let statistic = plot
        .points
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let above = (i + 1) as f64 / nf - pt.p;
            let below = pt.p - i as f64 / nf;
            above.max(below)
        })
        .fold(0.0, f64::max);
    let sqrt_n = nf.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    Ok(KsResult {
        statistic,
        p: kolmogorov_sf(lambda).clamp(P_FLOOR, 1.0),
    })
}

/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²), the Kolmogorov upper tail.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        // The series converges too slowly here; Q is 1 to double precision.
        return 1.0;
    }
    let a = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (a * kf * kf).exp();
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() {
            return (2.0 * sum).clamp(0.0, 1.0);
        }
        sign = -sign;
    }
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    /// The gap lies between ranks `after` and `after + 1`.
    pub after: usize,
    pub size: f64,
}

/// Flag adjacent ranked p-values further apart than `factor`/(n+1),
/// i.e. `factor` mean uniform spacings.
pub fn detect_gaps(plot: &PValuePlot, factor: f64) -> Result<Vec<Gap>> {
    let n = plot.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let threshold = factor / (n + 1) as f64;
    Ok(plot
        .points
        .windows(2)
        .filter_map(|w| {
            let size = w[1].p - w[0].p;
            (size > threshold).then_some(Gap { after: w[0].rank, size })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Random,
    ConsistentEffect,
    Bilinear,
    Ambiguous,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Random => "random",
            Verdict::ConsistentEffect => "consistent_effect",
            Verdict::Bilinear => "bilinear",
            Verdict::Ambiguous => "ambiguous",
        })
    }
}

/// Decision thresholds for [`classify`]. All are reported with the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Quadratic-vs-linear p at or below which curvature counts as real.
    pub bilinear_alpha: f64,
    /// Require a convex (blade, then handle) fit for `bilinear`.
    pub require_convex: bool,
    /// Some p at or below this forms the blade.
    pub blade_p: f64,
    /// Some p above this forms the handle.
    pub handle_p: f64,
    /// KS p at or below which the p-values are not uniform.
    pub ks_alpha: f64,
    /// Quadratic-vs-linear p above which the plot counts as straight, for `random`.
    pub random_alpha: f64,
    /// All p at or below this for `consistent_effect`.
    pub effect_p: f64,
    /// Gap threshold in mean uniform spacings.
    pub gap_factor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            bilinear_alpha: 0.01,
            require_convex: true,
            blade_p: 0.05,
            handle_p: 0.20,
            ks_alpha: 0.05,
            random_alpha: 0.05,
            effect_p: 0.05,
            gap_factor: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyInputs<'a> {
    pub p_values: &'a [f64],
    pub quad_vs_linear_p: f64,
    pub curvature: f64,
    pub ks_uniform_p: f64,
}

pub fn classify(inputs: &ClassifyInputs<'_>, th: &Thresholds) -> Verdict {
    let ps = inputs.p_values;
    let has_blade = ps.iter().any(|&p| p <= th.blade_p);
    let has_handle = ps.iter().any(|&p| p > th.handle_p);
    let convex = !th.require_convex || inputs.curvature > 0.0;
    if inputs.quad_vs_linear_p <= th.bilinear_alpha && convex && has_blade && has_handle {
        Verdict::Bilinear
    } else if inputs.ks_uniform_p <= th.ks_alpha && ps.iter().all(|&p| p <= th.effect_p) {
        Verdict::ConsistentEffect
    } else if inputs.ks_uniform_p > th.ks_alpha && inputs.quad_vs_linear_p > th.random_alpha {
        Verdict::Random
    } else {
        Verdict::Ambiguous
    }
}

/// Reference levels for the smallest of n null p-values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinPReference {
    /// E[min of n uniforms] = 1/(n+1).
    pub order_statistic: f64,
    /// The naive 1/n level.
    pub one_over_n: f64,
}

impl MinPReference {
    pub fn for_n(n: usize) -> Self {
        MinPReference {
            order_statistic: 1.0 / (n + 1) as f64,
            one_over_n: 1.0 / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValuePlotDiagnosis {
    pub plot: PValuePlot,
    pub linear_fit: LinearFit,
    pub quadratic_fit: QuadraticFit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segmented_fit: Option<SegmentedFit>,
    pub quad_vs_linear: NestedComparison,
    pub ks_uniform: KsResult,
    pub gaps: Vec<Gap>,
    pub min_p_reference: MinPReference,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
}

impl PValuePlotDiagnosis {
    pub fn quad_vs_linear_p(&self) -> f64 {
        self.quad_vs_linear.p
    }
}

/// Run every p-value plot diagnostic. Needs at least 4 p-values; the
/// segmented fit is included from 6 on.
pub fn diagnose_plot(plot: PValuePlot, th: &Thresholds) -> Result<PValuePlotDiagnosis> {
    let n = plot.len();
    let linear_fit = fit_linear(&plot)?;
    let quadratic_fit = fit_quadratic(&plot)?;
    let ps = plot.p_values();
    let quad_vs_linear = compare_nested(&linear_fit, &quadratic_fit, n, total_ss(&ps))?;
    let segmented_fit = if n >= 6 { Some(fit_segmented(&plot)?) } else { None };
    let ks = ks_uniform(&plot)?;
    let gaps = detect_gaps(&plot, th.gap_factor)?;
    let verdict = classify(
        &ClassifyInputs {
            p_values: &ps,
            quad_vs_linear_p: quad_vs_linear.p,
            curvature: quadratic_fit.curvature(),
            ks_uniform_p: ks.p,
        },
        th,
    );
    Ok(PValuePlotDiagnosis {
        plot,
        linear_fit,
        quadratic_fit,
        segmented_fit,
        quad_vs_linear,
        ks_uniform: ks,
        gaps,
        min_p_reference: MinPReference::for_n(n),
        verdict,
        thresholds: *th,
    })
}

pub fn diagnose(tests: &[TestedStudy], th: &Thresholds) -> Result<PValuePlotDiagnosis> {
    diagnose_plot(build_plot(tests)?, th)
}

fn total_ss(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum()
}
