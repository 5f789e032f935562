//! Compton polarimetry of photon pairs.
//!
//! * [`physics`]: kinematics, Klein–Nishina weights, analyzing power, Stokes transfer.
//! * [`entanglement`]: concurrence curves and the 3-Compton visibility factorization.
//! * [`montecarlo`]: deterministic parallel generator for classically correlated pairs.
//! * [`events`]: event records, classification and counter azimuths.
//! * [`analysis`]: azimuthal histograms, visibility fits, concurrence extraction.
//! * [`config`] and [`io`]: run configuration and event-file formats.

// `!(x > 0.0)` is how validators reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod entanglement;
pub mod error;
pub mod events;
pub mod io;
pub mod montecarlo;
pub mod physics;
pub mod quadrature;

pub use error::{Error, Result};
