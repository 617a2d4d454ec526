//! Seeded null simulations: meta-analyses in which every base study tests a
//! true null, so each p-value is Uniform(0, 1).

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{self, StudyRecord};
use crate::pplot::{self, MinPReference, Thresholds, Verdict};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_per_study: usize,
    pub replications: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_study < 2 {
            return Err(Error::domain("n_per_study", self.n_per_study as f64));
        }
        if self.replications < 1 {
            return Err(Error::domain("replications", self.replications as f64));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub ranked: Vec<f64>,
    pub min_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinPSummary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub generator: String,
    pub per_replication: Vec<Replication>,
    pub min_p_summary: MinPSummary,
    pub min_p_reference: MinPReference,
}

impl SimulationReport {
    pub fn min_ps(&self) -> Vec<f64> {
        self.per_replication.iter().map(|r| r.min_p).collect()
    }

    /// All p-values from every replication, ranked together.
    pub fn pooled_ranked(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .per_replication
            .iter()
            .flat_map(|r| r.ranked.iter().copied())
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }
}

pub const GENERATOR: &str = "ChaCha8 (rand_chacha 0.3), stream = replication index, Open01 f64";

/// Draw one replication. Depends only on (seed, index, n), so replications
/// can be produced in any order or in parallel.
pub fn replication(seed: u64, index: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut draws: Vec<f64> = (0..n).map(|_| rng.sample(Open01)).collect();
    draws.sort_by(f64::total_cmp);
    draws
}

pub fn simulate(config: &SimulationConfig) -> Result<SimulationReport> {
    config.validate()?;
    let per_replication: Vec<Replication> = (0..config.replications)
        .map(|index| {
            let ranked = replication(config.seed, index, config.n_per_study);
            Replication {
                index,
                min_p: ranked[0],
                ranked,
            }
        })
        .collect();
    let mins = per_replication.iter().map(|r| r.min_p);
    let min_p_summary = MinPSummary {
        mean: mins.clone().sum::<f64>() / config.replications as f64,
        min: mins.clone().fold(f64::INFINITY, f64::min),
        max: mins.fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(SimulationReport {
        config: *config,
        generator: GENERATOR.into(),
        per_replication,
        min_p_summary,
        min_p_reference: MinPReference::for_n(config.n_per_study),
    })
}

/// Quantile of the minimum of n independent uniforms: 1 − (1 − q)^(1/n).
pub fn min_p_envelope(n: usize, quantile: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("n", 0.0));
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::domain("quantile", quantile));
    }
    if n == 1 {
        return Ok(quantile);
    }
    // −expm1(ln(1 − q)/n) avoids cancellation for small q.
    Ok(-((-quantile).ln_1p() / n as f64).exp_m1())
}

/// CDF of the minimum of n uniforms (Beta(1, n)): 1 − (1 − x)^n.
pub fn min_p_cdf(n: usize, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        -((n as f64) * (-x).ln_1p()).exp_m1()
    }
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain("quantile", q));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Kolmogorov distance between the empirical CDF of `sorted` min-p values
/// and the closed-form Beta(1, n) CDF.
pub fn min_p_cdf_distance(sorted: &[f64], n: usize) -> f64 {
    let m = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = min_p_cdf(n, x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub random: usize,
    pub consistent_effect: usize,
    pub bilinear: usize,
    pub ambiguous: usize,
}

impl VerdictCounts {
    pub fn total(&self) -> usize {
        self.random + self.consistent_effect + self.bilinear + self.ambiguous
    }

    pub fn get(&self, v: Verdict) -> usize {
        match v {
            Verdict::Random => self.random,
            Verdict::ConsistentEffect => self.consistent_effect,
            Verdict::Bilinear => self.bilinear,
            Verdict::Ambiguous => self.ambiguous,
        }
    }

    pub fn rate(&self, v: Verdict) -> f64 {
        self.get(v) as f64 / self.total().max(1) as f64
    }

    /// Most frequent verdict; ties resolve in declaration order.
    pub fn modal(&self) -> Verdict {
        [
            Verdict::Random,
            Verdict::ConsistentEffect,
            Verdict::Bilinear,
            Verdict::Ambiguous,
        ]
        .into_iter()
        .fold(
            Verdict::Random,
            |best, v| if self.get(v) > self.get(best) { v } else { best },
        )
    }
}

/// Classify every replication's p-value plot. Needs n_per_study ≥ 4.
pub fn classify_replications(report: &SimulationReport, th: &Thresholds) -> Result<VerdictCounts> {
    let mut counts = VerdictCounts::default();
    for rep in &report.per_replication {
        let plot = pplot::build_plot_from_p(&rep.ranked)?;
        match pplot::diagnose_plot(plot, th)?.verdict {
            Verdict::Random => counts.random += 1,
            Verdict::ConsistentEffect => counts.consistent_effect += 1,
            Verdict::Bilinear => counts.bilinear += 1,
            Verdict::Ambiguous => counts.ambiguous += 1,
        }
    }
    Ok(counts)
}

/// Encode a replication as a study table that `parse_table` reads back at
/// confidence 0.95, null 1.0, linear scale: each p becomes a study with
/// SE 1 and z = Φ⁻¹(1 − p/2).
pub fn replication_table(rep: &Replication) -> Result<String> {
    let zc = stats::critical_value(0.95)?;
    let records = rep
        .ranked
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let z = -stats::normal_quantile(p / 2.0)?;
            let effect = 1.0 + z;
            Ok(StudyRecord {
                label: format!("rep{}_study{:02}", rep.index, i + 1),
                year: None,
                effect,
                cl_low: effect - zc,
                cl_high: effect + zc,
                cases: None,
                reference: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ingest::write_table(&records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn structure_of_tiny_run() {
        let r = simulate(&SimulationConfig {
            n_per_study: 2,
            replications: 1,
            seed: 9,
        })
        .unwrap();
        let rep = &r.per_replication[0];
        assert_eq!(rep.ranked.len(), 2);
        assert!(rep.ranked[0] <= rep.ranked[1]);
        assert_eq!(rep.min_p, rep.ranked[0]);
        assert!(rep.ranked.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn invalid_configs() {
        assert!(simulate(&SimulationConfig {
            n_per_study: 1,
            replications: 3,
            seed: 0
        })
        .is_err());
        assert!(simulate(&SimulationConfig {
            n_per_study: 5,
            replications: 0,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn replications_are_order_independent() {
        let r = simulate(&SimulationConfig {
            n_per_study: 15,
            replications: 6,
            seed: 42,
        })
        .unwrap();
        for idx in (0..6).rev() {
            assert_eq!(r.per_replication[idx].ranked, replication(42, idx, 15));
        }
        assert_ne!(r.per_replication[0].ranked, r.per_replication[1].ranked);
    }

    #[test]
    fn envelope_examples() {
        assert_abs_diff_eq!(min_p_envelope(15, 0.5).unwrap(), 0.0452, epsilon = 5e-4);
        assert_eq!(min_p_envelope(1, 0.37).unwrap(), 0.37);
        assert_abs_diff_eq!(min_p_envelope(15, 0.32).unwrap(), 0.0253, epsilon = 5e-4);
        assert!(min_p_envelope(0, 0.5).is_err());
        assert!(min_p_envelope(15, 1.0).is_err());
    }

    #[test]
    fn envelope_inverts_cdf() {
        for q in [0.01, 0.25, 0.5, 0.99] {
            let x = min_p_envelope(15, q).unwrap();
            assert_abs_diff_eq!(min_p_cdf(15, x), q, epsilon = 1e-12);
        }
    }

    #[test]
    fn quantiles_and_distance() {
        let xs = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(empirical_quantile(&xs, 0.0).unwrap(), 0.1);
        assert_eq!(empirical_quantile(&xs, 1.0).unwrap(), 0.4);
        assert_abs_diff_eq!(empirical_quantile(&xs, 0.5).unwrap(), 0.25, epsilon = 1e-15);
        assert!(empirical_quantile(&[], 0.5).is_err());
        // one sample at the median of Beta(1, 1): distance is 1/2
        assert_abs_diff_eq!(min_p_cdf_distance(&[0.5], 1), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn verdict_tally() {
        let r = simulate(&SimulationConfig {
            n_per_study: 10,
            replications: 50,
            seed: 1,
        })
        .unwrap();
        let c = classify_replications(&r, &Thresholds::default()).unwrap();
        assert_eq!(c.total(), 50);
        assert_eq!(
            c.get(c.modal()),
            [c.random, c.consistent_effect, c.bilinear, c.ambiguous]
                .into_iter()
                .max()
                .unwrap()
        );
        let small = simulate(&SimulationConfig {
            n_per_study: 3,
            replications: 2,
            seed: 1,
        })
        .unwrap();
        assert!(classify_replications(&small, &Thresholds::default()).is_err());
    }

    #[test]
    fn exported_replication_reads_back() {
        let r = simulate(&SimulationConfig {
            n_per_study: 8,
            replications: 2,
            seed: 3,
        })
        .unwrap();
        let rep = &r.per_replication[1];
        let text = replication_table(rep).unwrap();
        let table = ingest::parse_table(text.as_bytes(), 0.95, 1.0, "sim").unwrap();
        let tests = ingest::derive_tests(&table, stats::Scale::Linear).unwrap();
        for (t, p) in tests.iter().zip(&rep.ranked) {
            assert_abs_diff_eq!(t.result.p, *p, epsilon = 1e-9 * p.max(1e-3));
        }
    }
}
