use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// n = 2m makes the long-term power normalization diverge.
    #[error("n = 2m = {n}: long-term power normalization diverges")]
    NormalizationDivergence { n: usize },

    /// A channel matrix is (numerically) rank deficient.
    #[error("degenerate channel: relative singular value {ratio:.3e} below tolerance")]
    DegenerateChannel { ratio: f64 },

    /// Density/CDF evaluation requested outside the supported parameter domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The law has no continuous density (2m <= n regime).
    #[error("degenerate limiting law: no density for this regime")]
    DegenerateLaw,

    /// Numerical quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: estimated error {estimate:.3e} > {tolerance:.3e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    /// Empty input where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Invalid user pairing for the hybrid multi-user scheme.
    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    /// I/O failure while reading configs or writing results.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
