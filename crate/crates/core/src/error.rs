use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
///
/// Scalar payloads are carried as `f64` regardless of the working precision.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} outside the valid domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decay exponent alpha = {alpha} < 2 lies in the singular small-k regime, which is not supported")]
    UnsupportedRegime { alpha: f64 },

    #[error("mode Hamiltonian is degenerate at g = {g}, k = {k}")]
    DegeneratePoint { g: f64, k: f64 },

    #[error("integration failed for mode k = {k} at t = {t}: {reason}")]
    IntegrationFailure { k: f64, t: f64, reason: String },

    #[error("adaptive quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    QuadratureNonConvergence { a: f64, b: f64, estimate: f64 },

    #[error(
        "sampled curve is not convex: second difference {second_difference:e} at index {index}"
    )]
    NonConvex {
        index: usize,
        second_difference: f64,
    },

    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    #[error("{n_sites} sites exceed the exact-diagonalization limit of {max} sites")]
    ResourceLimit { n_sites: usize, max: usize },

    #[error("exact evolution did not self-converge after {halvings} step halvings (last change {change:e})")]
    OracleNonConvergence { halvings: usize, change: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
