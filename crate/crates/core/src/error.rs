use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The alternation count is zero, so the uncertainty-zone estimator is undefined.
    #[error("degenerate tape: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("collinear regressors: {0}")]
    Collinear(String),

    /// Trades without a pre-trade quote; `rows` are zero-based event indices.
    #[error("missing pre-trade quotes on {} trade(s), rows {rows:?}", rows.len())]
    MissingQuotes { rows: Vec<usize> },

    #[error("{path}:{line}: {message}")]
    Row { path: String, line: u64, message: String },

    #[error("no input: {0}")]
    NoInput(String),

    #[error("{asset} {date}: {source}")]
    Context {
        asset: String,
        date: String,
        source: Box<Error>,
    },

    /// Several independent failures, e.g. one per asset-day.
    #[error("{} failure(s):\n{}", .0.len(), join_lines(.0))]
    Multiple(Vec<Error>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn with_context(self, asset: impl Into<String>, date: impl ToString) -> Self {
        Error::Context {
            asset: asset.into(),
            date: date.to_string(),
            source: Box::new(self),
        }
    }

    /// Strips any [`Error::Context`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for the "not enough activity" family that daily aggregation skips
    /// instead of aborting on.
    pub fn is_inactive_day(&self) -> bool {
        matches!(self.root(), Error::InsufficientData(_) | Error::Degenerate(_))
    }
}

fn join_lines(errors: &[Error]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
