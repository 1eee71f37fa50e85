use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{free_count} free bits exceeds the enumeration cap of {cap}")]
    Capacity { free_count: usize, cap: usize },

    /// The phase oracle marks none or all of the database, so `D|0>` is `±|0>`
    /// and every measurement would be rejected.
    #[error("degenerate oracle: {good} of {total} states marked good")]
    DegenerateOracle { good: usize, total: usize },

    #[error("no acceptable measurement within {cap} oracle calls")]
    IterationBudget { cap: u64 },

    #[error("complexity diverges: {0}")]
    Divergence(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn is_degenerate_oracle(&self) -> bool {
        matches!(self, Error::DegenerateOracle { .. })
    }
}
