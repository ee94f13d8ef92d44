use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent model / experiment parameters.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("invalid value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },

    /// Purchase guarantee: some consumers must buy even at the lowest quality.
    #[error("purchase guarantee violated: buyer fraction at the lowest quality is {fraction}")]
    PurchaseGuarantee { fraction: f64 },

    /// Identifiability: every feedback symbol must have positive probability.
    #[error("identifiability violated: G({symbol}, π, q) = {value} is not positive")]
    Identifiability { symbol: String, value: f64 },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors that stem from the configuration rather than the run itself.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::MissingKey(_)
                | Error::UnknownKey(_)
                | Error::BadValue { .. }
                | Error::PurchaseGuarantee { .. }
                | Error::Identifiability { .. }
        )
    }
}
