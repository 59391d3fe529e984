//! Spectral laboratory for critical Erdos-Renyi graphs G(N, d/N) with
//! d = b log N.
//!
//! The library builds the objects behind the delocalization/semilocalization
//! phase structure of the scaled adjacency matrix A/sqrt(d): degree geometry
//! and pruning, radial localization profiles, limiting spectral measures,
//! Green-function diagnostics, tuning forks, and the scalar exponent calculus
//! (Lambda, theta_b, rho_b, alpha_max, b_*). Every deterministic identity is
//! checked exactly in tests; random-matrix predictions are checked as trends.

pub mod experiment;
pub mod forks;
pub mod graph;
pub mod greens;
pub mod localize;
pub mod measures;
pub mod phase;
pub mod profile;
pub mod prune;
pub mod rng;
pub mod spectra;

/// Library-wide error type. The CLI maps `Parameter`/`Domain`/`Config` to
/// exit code 2 and `Numeric` to exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn par_err(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn dom_err(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn num_err(msg: impl Into<String>) -> Error {
    Error::Numeric(msg.into())
}
