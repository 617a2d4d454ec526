//! Deterministic output: SVG plots and audit reports.

mod report;
mod svg;

pub use report::{render_report, studies_csv, studies_table, AuditReport, SimulationSection, REPORT_FORMAT};
pub use svg::{render_svg, LineGeometry, Marker, MarkerStyle, Panel, PlotKind, PlotSpec, RefLine};
