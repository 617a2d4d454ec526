//! Reliability diagnostics for meta-analyses built on observational studies.
//!
//! The pipeline starts from published study tables (risk ratio plus
//! confidence limits), reconstructs one test statistic and p-value per
//! study, and then looks at the set of p-values from several angles:
//!
//! - [`pplot`]: ranked p-value plot, nested polynomial fits, two-segment
//!   fit, Kolmogorov–Smirnov uniformity, gap report and a verdict.
//! - [`volcano`]: −log10 p against effect size with nominal and
//!   Bonferroni lines and directional counts.
//! - [`pooling`]: inverse-variance pooling, Cochran's Q, I² and Egger's test.
//! - [`nullsim`]: seeded null simulations of uniform p-values.
//! - [`render`]: deterministic SVG plots and report serialization.

pub mod error;
pub mod ingest;
pub mod lsq;
pub mod nullsim;
pub mod pooling;
pub mod pplot;
pub mod render;
pub mod stats;
pub mod volcano;

pub use error::{Error, Result};
pub use ingest::{derive_tests, parse_table, StudyRecord, StudyTable, TestedStudy};
pub use stats::{EffectEstimate, Scale, TestResult};
