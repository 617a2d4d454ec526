use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TestedStudy;
use crate::nullsim::{self, MinPSummary, SimulationConfig, SimulationReport, VerdictCounts};
use crate::pooling::PooledSummary;
use crate::pplot::{MinPReference, PValuePlotDiagnosis, Thresholds};
use crate::stats::{Scale, P_FLOOR};
use crate::volcano::{NullGap, VolcanoReport};

/// Identifies the layout of [`AuditReport`]. Bump on breaking field changes.
pub const REPORT_FORMAT: &str = "metaudit-report/1";

/// Null-simulation annotations attached to an audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    pub config: SimulationConfig,
    pub generator: String,
    pub min_p_summary: MinPSummary,
    pub min_p_reference: MinPReference,
    /// 1st and 99th percentiles of the closed-form min-p distribution.
    pub min_p_envelope: (f64, f64),
    /// Empirical 1st and 99th percentiles of the simulated min p.
    pub min_p_empirical: (f64, f64),
    /// sup |empirical CDF − closed-form CDF| of the simulated min p.
    pub min_p_cdf_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdicts: Option<VerdictCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_min_p: Option<f64>,
    /// P(min of n null p-values ≤ observed min p).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed_min_p_percentile: Option<f64>,
}

impl SimulationSection {
    /// Summarize a simulation. With thresholds, every replication is also
    /// classified.
    pub fn new(sim: &SimulationReport, observed_min_p: Option<f64>, thresholds: Option<&Thresholds>) -> Result<Self> {
        let n = sim.config.n_per_study;
        let mut mins = sim.min_ps();
        mins.sort_by(f64::total_cmp);
        Ok(SimulationSection {
            config: sim.config,
            generator: sim.generator.clone(),
            min_p_summary: sim.min_p_summary,
            min_p_reference: sim.min_p_reference,
            min_p_envelope: (nullsim::min_p_envelope(n, 0.01)?, nullsim::min_p_envelope(n, 0.99)?),
            min_p_empirical: (
                nullsim::empirical_quantile(&mins, 0.01)?,
                nullsim::empirical_quantile(&mins, 0.99)?,
            ),
            min_p_cdf_distance: nullsim::min_p_cdf_distance(&mins, n),
            verdicts: thresholds
                .map(|th| nullsim::classify_replications(sim, th))
                .transpose()?,
            observed_min_p,
            observed_min_p_percentile: observed_min_p.map(|p| nullsim::min_p_cdf(n, p)),
        })
    }
}

/// Everything one audit run produced. Absent analyses are omitted from the
/// serialized form rather than written as null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub format: String,
    pub source: String,
    pub confidence_level: f64,
    pub null_value: f64,
    pub scale: Scale,
    pub p_floor: f64,
    pub studies: Vec<TestedStudy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pvalue_plot: Option<PValuePlotDiagnosis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volcano: Option<VolcanoReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null_gap: Option<NullGap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled: Option<PooledSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
}

impl AuditReport {
    pub fn new(source: &str, confidence_level: f64, null_value: f64, scale: Scale, studies: Vec<TestedStudy>) -> Self {
        AuditReport {
            format: REPORT_FORMAT.into(),
            source: source.into(),
            confidence_level,
            null_value,
            scale,
            p_floor: P_FLOOR,
            studies,
            pvalue_plot: None,
            volcano: None,
            null_gap: None,
            pooled: None,
            simulation: None,
        }
    }
}

/// Hierarchical JSON form of the report.
pub fn render_report(report: &AuditReport) -> Result<String> {
    let any = !report.studies.is_empty()
        || report.pvalue_plot.is_some()
        || report.volcano.is_some()
        || report.pooled.is_some()
        || report.simulation.is_some();
    if !any {
        return Err(Error::EmptyReport);
    }
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Malformed(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Per-study table at full precision. The header is a superset of what
/// [`crate::ingest::parse_table`] requires, so the file reads back in.
pub fn studies_csv(tests: &[TestedStudy]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "label",
        "year",
        "cases",
        "ref",
        "rr",
        "cl_low",
        "cl_high",
        "se",
        "z",
        "p",
        "neg_log10_p",
        "rank",
    ])
    .expect("in-memory write");
    for t in tests {
        let r = &t.record;
        w.write_record([
            r.label.clone(),
            r.year.map(|y| y.to_string()).unwrap_or_default(),
            r.cases.map(|c| c.to_string()).unwrap_or_default(),
            r.reference.clone().unwrap_or_default(),
            r.effect.to_string(),
            r.cl_low.to_string(),
            r.cl_high.to_string(),
            t.result.se.to_string(),
            t.result.z.to_string(),
            t.result.p.to_string(),
            t.result.neg_log10_p.to_string(),
            t.rank.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Fixed-width display table with derived columns at 4 decimals.
pub fn studies_table(tests: &[TestedStudy], confidence_level: f64) -> String {
    let pct = (confidence_level * 100.0).round() as u32;
    let label_w = tests
        .iter()
        .map(|t| t.record.label.chars().count())
        .max()
        .unwrap_or(6)
        .max(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3}  {:<label_w$}  {:>4}  {:>6}  {:>7}  {:>7}  {:>7}  {:>9}  {:>9}  {:>7}  {:>5}  {:>8}",
        "#",
        "Author",
        "Year",
        "Cases",
        "RR",
        "CLlow",
        "CLhigh",
        format!("SE{pct}"),
        format!("Z{pct}"),
        format!("p{pct}"),
        "Rank",
        "-log10 p",
    );
    for (i, t) in tests.iter().enumerate() {
        let r = &t.record;
        let _ = writeln!(
            out,
            "{:>3}  {:<label_w$}  {:>4}  {:>6}  {:>7.2}  {:>7.2}  {:>7.2}  {:>9.4}  {:>9.4}  {:>7.4}  {:>5}  {:>8.4}",
            i + 1,
            r.label,
            r.year.map(|y| y.to_string()).unwrap_or_default(),
            r.cases.map(|c| c.to_string()).unwrap_or_default(),
            r.effect,
            r.cl_low,
            r.cl_high,
            t.result.se,
            t.result.z,
            t.result.p,
            t.rank,
            t.result.neg_log10_p,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{derive_tests, parse_table};

    fn tests() -> Vec<TestedStudy> {
        let text = "label,year,rr,cl_low,cl_high\nA,2001,1.5,1.1,2.0\nB,,0.8,0.6,1.1\nC,1999,1.0,0.5,1.5\n";
        let t = parse_table(text.as_bytes(), 0.95, 1.0, "mem").unwrap();
        derive_tests(&t, Scale::Linear).unwrap()
    }

    #[test]
    fn empty_sections_are_omitted() {
        let report = AuditReport::new("mem", 0.95, 1.0, Scale::Linear, tests());
        let json = render_report(&report).unwrap();
        assert!(!json.contains("\"simulation\""));
        assert!(!json.contains(": null"));
        assert!(json.contains("\"studies\""));
    }

    #[test]
    fn empty_report_rejected() {
        let report = AuditReport::new("mem", 0.95, 1.0, Scale::Linear, Vec::new());
        assert!(matches!(render_report(&report), Err(Error::EmptyReport)));
    }

    #[test]
    fn csv_reads_back_through_ingest() {
        let t = tests();
        let csv = studies_csv(&t);
        let again = derive_tests(&parse_table(csv.as_bytes(), 0.95, 1.0, "csv").unwrap(), Scale::Linear).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn display_table_has_a_row_per_study() {
        let text = studies_table(&tests(), 0.90);
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().next().unwrap().contains("SE90"));
    }
}
