//! Study tables: parsing, validation and per-study tests.
//!
//! Input is comma- or tab-delimited UTF-8 text with a header row. Required
//! columns are `label`, `rr`, `cl_low`, `cl_high`; `year`, `cases` and `ref`
//! are optional. Any other column is ignored, which lets the per-study
//! report emitted by [`crate::render`] be read back in.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, EffectEstimate, Scale, TestResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    pub effect: f64,
    pub cl_low: f64,
    pub cl_high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cases: Option<u64>,
    #[serde(rename = "ref", skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub records: Vec<StudyRecord>,
    pub confidence_level: f64,
    pub null_value: f64,
    pub source: String,
}

impl StudyTable {
    pub fn new(
        records: Vec<StudyRecord>,
        confidence_level: f64,
        null_value: f64,
        source: impl Into<String>,
    ) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: records.len(),
            });
        }
        let table = StudyTable {
            records,
            confidence_level,
            null_value,
            source: source.into(),
        };
        let mut seen = HashMap::new();
        for (i, rec) in table.records.iter().enumerate() {
            let row = i + 1;
            validate_record(rec, &table).map_err(|message| Error::Row { row, message })?;
            if seen.insert(normalize_label(&rec.label), row).is_some() {
                return Err(Error::DuplicateLabel {
                    row,
                    label: rec.label.clone(),
                });
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn estimate(&self, rec: &StudyRecord) -> EffectEstimate {
        EffectEstimate {
            effect: rec.effect,
            cl_low: rec.cl_low,
            cl_high: rec.cl_high,
            confidence_level: self.confidence_level,
            null_value: self.null_value,
        }
    }
}

/// A study with its reconstructed test against the null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestedStudy {
    #[serde(flatten)]
    pub record: StudyRecord,
    #[serde(flatten)]
    pub result: TestResult,
    /// 1-based rank by ascending p.
    pub rank: usize,
    pub scale: Scale,
}

impl TestedStudy {
    /// Effect on the working scale (`ln` of the effect in log mode).
    pub fn working_effect(&self) -> f64 {
        // Validated at construction, so the log transform cannot fail here.
        self.scale.transform(self.record.effect).unwrap_or(f64::NAN)
    }

    pub fn precision(&self) -> f64 {
        1.0 / self.result.se
    }
}

fn normalize_label(label: &str) -> String {
    label.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn validate_record(rec: &StudyRecord, table: &StudyTable) -> std::result::Result<(), String> {
    if rec.label.trim().is_empty() {
        return Err("label is empty".into());
    }
    if let Some(y) = rec.year {
        if !(1800..=2100).contains(&y) {
            return Err(format!("year {y} outside 1800..=2100"));
        }
    }
    table.estimate(rec).validate().map_err(|e| match e {
        Error::InvalidInterval { low, high } => {
            format!("cl_low ({low}) must be below cl_high ({high})")
        }
        Error::Domain { what, value } if what.starts_with("effect outside") => format!(
            "rr ({value}) must lie within [cl_low, cl_high] = [{}, {}]",
            rec.cl_low, rec.cl_high
        ),
        other => other.to_string(),
    })
}

const REQUIRED: [&str; 4] = ["label", "rr", "cl_low", "cl_high"];

/// Parse a delimited study table.
///
/// The delimiter is a tab when the header line contains one, otherwise a
/// comma. Row numbers in errors are 1-based and count data rows only.
pub fn parse_table(bytes: &[u8], confidence_level: f64, null_value: f64, source: &str) -> Result<StudyTable> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Malformed(format!("not UTF-8: {e}")))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let header_line = text.lines().next().unwrap_or("");
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Malformed(e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let column = |name: &str| headers.iter().position(|h| h == name);
    for name in REQUIRED {
        if column(name).is_none() {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let (label_i, rr_i, lo_i, hi_i) = (
        column("label").unwrap(),
        column("rr").unwrap(),
        column("cl_low").unwrap(),
        column("cl_high").unwrap(),
    );
    let (year_i, cases_i, ref_i) = (column("year"), column("cases"), column("ref"));

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Row {
            row: row_no,
            message: e.to_string(),
        })?;
        let field = |idx: usize| row.get(idx).unwrap_or("");
        let optional = |idx: Option<usize>| idx.map(field).filter(|s| !s.is_empty());
        let number = |name: &str, idx: usize| -> Result<f64> {
            let raw = field(idx);
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Row {
                    row: row_no,
                    message: format!("column `{name}`: `{raw}` is not a finite number"),
                })
        };

        let year = optional(year_i)
            .map(|s| {
                s.parse::<i32>().map_err(|_| Error::Row {
                    row: row_no,
                    message: format!("column `year`: `{s}` is not an integer"),
                })
            })
            .transpose()?;
        let cases = optional(cases_i)
            .map(|s| {
                s.parse::<u64>().map_err(|_| Error::Row {
                    row: row_no,
                    message: format!("column `cases`: `{s}` is not a nonnegative integer"),
                })
            })
            .transpose()?;

        records.push(StudyRecord {
            label: field(label_i).to_string(),
            year,
            effect: number("rr", rr_i)?,
            cl_low: number("cl_low", lo_i)?,
            cl_high: number("cl_high", hi_i)?,
            cases,
            reference: optional(ref_i).map(str::to_string),
        });
    }

    StudyTable::new(records, confidence_level, null_value, source)
}

/// Serialize records in the format [`parse_table`] reads, at full precision.
pub fn write_table(records: &[StudyRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "year", "cases", "ref", "rr", "cl_low", "cl_high"])
        .expect("in-memory write");
    for r in records {
        w.write_record([
            r.label.clone(),
            r.year.map(|y| y.to_string()).unwrap_or_default(),
            r.cases.map(|c| c.to_string()).unwrap_or_default(),
            r.reference.clone().unwrap_or_default(),
            r.effect.to_string(),
            r.cl_low.to_string(),
            r.cl_high.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Test every study against the table's null and rank by ascending p.
///
/// Output keeps input order. Equal p-values are ranked by input order.
pub fn derive_tests(table: &StudyTable, scale: Scale) -> Result<Vec<TestedStudy>> {
    let mut tests = table
        .records
        .iter()
        .map(|rec| {
            stats::test_against_null(&table.estimate(rec), scale)
                .map(|result| TestedStudy {
                    record: rec.clone(),
                    result,
                    rank: 0,
                    scale,
                })
                .map_err(|e| Error::Study {
                    label: rec.label.clone(),
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..tests.len()).collect();
    order.sort_by(|&a, &b| tests[a].result.p.total_cmp(&tests[b].result.p));
    for (rank, idx) in order.into_iter().enumerate() {
        tests[idx].rank = rank + 1;
    }
    Ok(tests)
}
