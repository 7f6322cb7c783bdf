//! Detection probabilities, noise averages and Fisher information for
//! delay-sensing interferometers fed with one or two photons.
//!
//! Units: the pump frequency is 1, so delays are `delta * omega_p`, spectral
//! widths are `sigma / omega_p` and Fisher information is `F / omega_p^2`.

pub mod metrology;
pub mod montecarlo;
pub mod noise;
pub mod oracle;
pub mod protocols;
pub mod quadrature;
pub mod special;
pub mod term_algebra;

pub use num_complex::Complex64;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("integral over `{var}` does not converge (quadratic coefficient has non-positive real part)")]
    NonConvergentIntegral { var: String },
    #[error("variable `{0}` has no assigned value")]
    UnboundVariable(String),
    #[error("quadrature did not converge with {nodes} nodes per dimension")]
    QuadratureNotConverged { nodes: usize },
    #[error("Fisher information is zero; the Cramer-Rao bound is infinite")]
    ZeroInformation,
    #[error("peak information of {protocol} does not decay along the {axis} axis")]
    NoDecayAxis { protocol: String, axis: String },
    #[error("peak information is not monotone in the noise strength on [{lo}, {hi}]")]
    NonMonotoneDecay { lo: f64, hi: f64 },
    #[error("likelihood is flat over the search window")]
    FlatLikelihood,
    #[error("oracle integral has {dims} dimensions; at most {max} are supported")]
    DimensionTooHigh { dims: usize, max: usize },
    #[error("oracle tolerance not met: error estimate {estimate:e} after order {order}")]
    ToleranceNotMet { estimate: f64, order: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
