//! Two-user MIMO downlink simulator built on the generalized singular value
//! decomposition (GSVD), with non-orthogonal multiple access (NOMA) rate
//! computation and validation of the large-antenna limiting laws.
//!
//! The crate is organized as follows:
//!
//! - [`channel`]: system configuration and Rayleigh channel sampling,
//! - [`gsvd`]: GSVD construction for all three antenna regimes,
//! - [`spectral`]: limiting spectra of squared generalized singular values
//!   and the long-term power normalization constant,
//! - [`rates`]: per-subchannel NOMA/OMA rate formulas and planning,
//! - [`asymptotic`]: closed-form normalized average rates via quadrature,
//! - [`sim`]: Monte Carlo engine, experiment presets, CSV output.

pub mod asymptotic;
pub mod channel;
pub mod error;
pub mod gsvd;
pub mod quad;
pub mod rates;
pub mod sim;
pub mod spectral;

pub use error::Error;

/// Complex scalar used for all channel matrices.
pub type C64 = num_complex::Complex<f64>;
/// Dynamically sized complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dynamically sized real matrix.
pub type RMat = nalgebra::DMatrix<f64>;
