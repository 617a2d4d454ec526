use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid interval: cl_low ({low}) must be below cl_high ({high})")]
    InvalidInterval { low: f64, high: f64 },

    #[error("insufficient data: {needed} points required, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("row {row}: duplicate label `{label}`")]
    DuplicateLabel { row: usize, label: String },

    #[error("malformed table: {0}")]
    Malformed(String),

    #[error("study `{label}`: {source}")]
    Study {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("regressor has no variance; slope is not identifiable")]
    DegenerateRegressor,

    #[error("nothing to plot")]
    EmptyPlot,

    #[error("report has no analysis sections")]
    EmptyReport,
}

impl Error {
    /// True for errors caused by the input file itself (schema, rows, labels)
    /// rather than by the analysis that follows.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_) | Error::Row { .. } | Error::DuplicateLabel { .. } | Error::Malformed(_)
        )
    }

    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
