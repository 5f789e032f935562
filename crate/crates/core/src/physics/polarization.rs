use std::f64::consts::PI;

use crate::error::{Error, Result};

const ANGLE_TOL: f64 = 1e-12;

/// Linear polarization: plane azimuth (mod π) and degree in `[0, 1]`.
///
/// The azimuth is measured in the photon's own right-handed transverse basis
/// `(e1, e2)`, from `e1` towards `e2`. Circular polarization is not tracked.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearPolarization {
    angle: f64,
    degree: f64,
}

impl LinearPolarization {
    pub fn new(angle: f64, degree: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&degree) || !angle.is_finite() {
            return Err(Error::InvalidPolarization { angle, degree });
        }
        Ok(Self { angle: normalize_half_turn(angle), degree })
    }

    pub fn fully(angle: f64) -> Self {
        Self { angle: normalize_half_turn(angle), degree: 1.0 }
    }

    pub fn unpolarized() -> Self {
        Self { angle: 0.0, degree: 0.0 }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }
}

/// Maps an angle onto `[0, π)`.
pub fn normalize_half_turn(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if PI - a < ANGLE_TOL {
        0.0
    } else {
        a
    }
}

/// Linear Stokes components `(I, Q, U)` in a scattering-plane basis, with
/// `Q = I_⊥ − I_∥` taken against the scattering plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearStokes {
    pub i: f64,
    pub q: f64,
    pub u: f64,
}

impl LinearStokes {
    /// Unit-intensity Stokes vector of `pol` seen from a scattering plane at
    /// azimuth `plane_azimuth` in the photon basis.
    pub fn from_polarization(pol: LinearPolarization, plane_azimuth: f64) -> Self {
        let beta = pol.angle - plane_azimuth;
        let (s, c) = (2.0 * beta).sin_cos();
        Self { i: 1.0, q: -pol.degree * c, u: pol.degree * s }
    }

    pub fn to_polarization(self, plane_azimuth: f64) -> LinearPolarization {
        let lin = self.q.hypot(self.u);
        if self.i <= 0.0 || lin == 0.0 {
            return LinearPolarization::unpolarized();
        }
        let degree = (lin / self.i).min(1.0);
        let beta = 0.5 * self.u.atan2(-self.q);
        LinearPolarization::fully(beta + plane_azimuth).with_degree(degree)
    }
}

impl LinearPolarization {
    fn with_degree(mut self, degree: f64) -> Self {
        self.degree = degree;
        self
    }
}

/// Polarization flip probabilities of a single Compton scattering, in the
/// scattering-plane basis (V perpendicular to the plane, H in it).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionProbabilities {
    pub p_v_to_h: f64,
    pub p_h_to_v: f64,
}

impl TransitionProbabilities {
    pub fn p_v_to_v(&self) -> f64 {
        1.0 - self.p_v_to_h
    }

    pub fn p_h_to_h(&self) -> f64 {
        1.0 - self.p_h_to_v
    }
}
