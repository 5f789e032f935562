use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kinematically impossible energy pair: E_in = {e_in} keV, E_out = {e_out} keV")]
    Kinematics { e_in: f64, e_out: f64 },

    #[error("energy deposit {delta_e} keV outside [0, {max}] keV")]
    InvalidDeposit { delta_e: f64, max: f64 },

    #[error("invalid linear polarization (angle {angle}, degree {degree})")]
    InvalidPolarization { angle: f64, degree: f64 },

    #[error("quadrature did not converge: achieved {achieved:e}, target {target:e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("empty selection: {0}")]
    Empty(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("ill-conditioned concurrence extraction: A_a·A_b = {product:e}")]
    IllConditioned { product: f64 },

    #[error("histogram has no bin at {angle_deg}°")]
    MissingBin { angle_deg: f64 },

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("event file format {found} is incompatible with {expected}")]
    VersionMismatch { found: String, expected: String },

    #[error("malformed event file at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("I/O failure after {completed} events: {source}")]
    Output { completed: u64, source: io::Error },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }
}
