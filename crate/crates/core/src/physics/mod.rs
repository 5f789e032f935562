//! Compton kinematics, the polarized Klein–Nishina weight, analyzing power and
//! linear-polarization transfer.
//!
//! Conventions used throughout the crate:
//!
//! * energies are in keV, angles in radians;
//! * the electron mass is exactly [`ELECTRON_MASS_KEV`] = 511 keV;
//! * cross-section weights omit the constant `r_e²/2`. Every consumer either
//!   forms ratios or feeds a normalized sampler, so the constant cancels.
//!
//! All functions are pure. The free functions use the standard electron mass;
//! [`Compton`] carries an explicit mass for consistency checks that perturb it.

mod photon;
mod polarization;

pub use photon::{PhotonState, Vec3};
pub use polarization::{LinearPolarization, LinearStokes, TransitionProbabilities};

use crate::error::{Error, Result};

/// Electron rest energy in keV.
pub const ELECTRON_MASS_KEV: f64 = 511.0;

/// Relative slack accepted when checking that an energy pair is kinematically
/// allowed. Covers round-off in chained `scattered_energy` evaluations.
const KINEMATIC_SLACK: f64 = 1e-12;

/// Compton kinematics for a given electron mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Compton {
    electron_mass: f64,
}

impl Default for Compton {
    fn default() -> Self {
        Self::STANDARD
    }
}

impl Compton {
    pub const STANDARD: Compton = Compton { electron_mass: ELECTRON_MASS_KEV };

    pub fn with_electron_mass(electron_mass: f64) -> Self {
        assert!(electron_mass > 0.0, "electron mass must be positive");
        Self { electron_mass }
    }

    pub fn electron_mass(&self) -> f64 {
        self.electron_mass
    }

    /// Energy of a photon of energy `e_in` scattered by `theta`.
    pub fn scattered_energy(&self, e_in: f64, theta: f64) -> f64 {
        e_in / (1.0 + (e_in / self.electron_mass) * (1.0 - theta.cos()))
    }

    /// Smallest scattered energy, reached at 180°.
    pub fn min_scattered_energy(&self, e_in: f64) -> f64 {
        e_in / (1.0 + 2.0 * e_in / self.electron_mass)
    }

    /// `γ = E_f/E_i + E_i/E_f`, rejecting pairs no single scattering can produce.
    pub fn gamma_factor(&self, e_in: f64, e_out: f64) -> Result<f64> {
        let slack = KINEMATIC_SLACK * e_in;
        let lo = self.min_scattered_energy(e_in);
        if !(e_in > 0.0) || !(e_out > lo - slack && e_out <= e_in + slack) {
            return Err(Error::Kinematics { e_in, e_out });
        }
        Ok(gamma_of_ratio(e_out / e_in))
    }

    /// `γ` at a given scattering angle. Never fails.
    pub fn gamma_at(&self, e_in: f64, theta: f64) -> f64 {
        gamma_of_ratio(self.scattered_energy(e_in, theta) / e_in)
    }

    /// `cos θ = 1 + m_e/E_i − m_e/E_f`, unclamped.
    pub fn cos_theta_from_energies(&self, e_in: f64, e_out: f64) -> f64 {
        1.0 + self.electron_mass / e_in - self.electron_mass / e_out
    }

    /// Unnormalized polarized Klein–Nishina weight
    /// `(E_f/E_i)² (γ − sin²θ (1 + P cos 2(φ − φ_pol)))`.
    ///
    /// For `P = 1` this is `(E_f/E_i)² (γ − 2 sin²θ cos²(φ − φ_pol))`; for `P = 0`
    /// it is the unpolarized form. `phi` is the azimuth of the scattering plane
    /// in the same transverse basis as `pol.angle()`.
    pub fn klein_nishina_weight(
        &self,
        e_in: f64,
        theta: f64,
        phi: f64,
        pol: LinearPolarization,
    ) -> f64 {
        let ratio = self.scattered_energy(e_in, theta) / e_in;
        let sin2 = theta.sin().powi(2);
        let modulation = 1.0 + pol.degree() * (2.0 * (phi - pol.angle())).cos();
        ratio * ratio * (gamma_of_ratio(ratio) - sin2 * modulation)
    }

    /// Analyzing power `A = sin²θ / (γ − sin²θ)`.
    pub fn analyzing_power(&self, e_in: f64, theta: f64) -> f64 {
        let sin2 = theta.sin().powi(2);
        sin2 / (self.gamma_at(e_in, theta) - sin2)
    }

    /// Analyzing power computed from a measured energy pair.
    ///
    /// `e_out` is clamped into the kinematically allowed range first, so smeared
    /// measurements never produce a NaN.
    pub fn analyzing_power_from_energies(&self, e_in: f64, e_out: f64) -> f64 {
        let e_out = e_out.clamp(self.min_scattered_energy(e_in), e_in);
        let cos = self.cos_theta_from_energies(e_in, e_out).clamp(-1.0, 1.0);
        let sin2 = 1.0 - cos * cos;
        sin2 / (gamma_of_ratio(e_out / e_in) - sin2)
    }

    /// `P(V→H) = (γ−2)/(2γ)` and `P(H→V) = (γ−2)/(2(γ − sin²θ))`.
    pub fn transition_probabilities(&self, e_in: f64, theta: f64) -> TransitionProbabilities {
        let gamma = self.gamma_at(e_in, theta);
        let sin2 = theta.sin().powi(2);
        TransitionProbabilities {
            p_v_to_h: (gamma - 2.0) / (2.0 * gamma),
            p_h_to_v: (gamma - 2.0) / (2.0 * (gamma - sin2)),
        }
    }

    /// Linear Stokes vector of the scattered photon, including the intensity
    /// factor, in the scattering-plane basis of the outgoing photon.
    ///
    /// The transfer matrix acts on `(I, Q, U)` with `Q = I_⊥ − I_∥` measured
    /// against the scattering plane:
    ///
    /// ```text
    /// I' = ε² [ (γ − sin²θ) I + sin²θ Q ]
    /// Q' = ε² [  sin²θ I + (1 + cos²θ) Q ]
    /// U' = ε² [  2 cos θ U ]
    /// ```
    ///
    /// with `ε = E_f/E_i`.
    pub fn scatter_stokes(&self, stokes: LinearStokes, e_in: f64, theta: f64) -> LinearStokes {
        let ratio = self.scattered_energy(e_in, theta) / e_in;
        let (sin, cos) = theta.sin_cos();
        let sin2 = sin * sin;
        let gamma = gamma_of_ratio(ratio);
        let r2 = ratio * ratio;
        LinearStokes {
            i: r2 * ((gamma - sin2) * stokes.i + sin2 * stokes.q),
            q: r2 * (sin2 * stokes.i + (1.0 + cos * cos) * stokes.q),
            u: r2 * (2.0 * cos * stokes.u),
        }
    }

    /// Polarization of a photon scattered by `(theta, phi)`.
    ///
    /// `pol_in` and `phi` are given in the incident photon's transverse basis;
    /// the result is expressed in the outgoing basis obtained by rotating the
    /// incident basis about the normal of the scattering plane.
    pub fn scatter_polarization(
        &self,
        pol_in: LinearPolarization,
        theta: f64,
        phi: f64,
        e_in: f64,
    ) -> LinearPolarization {
        let stokes_in = LinearStokes::from_polarization(pol_in, phi);
        let out = self.scatter_stokes(stokes_in, e_in, theta);
        out.to_polarization(phi)
    }

    /// Pre-scattering angle reconstructed from the recoil energy `delta_e`
    /// deposited by a photon of energy `e_in`.
    pub fn theta_from_deposit(&self, e_in: f64, delta_e: f64) -> Result<f64> {
        let max = e_in - self.min_scattered_energy(e_in);
        if !(delta_e >= 0.0) || delta_e > max * (1.0 + KINEMATIC_SLACK) {
            return Err(Error::InvalidDeposit { delta_e, max });
        }
        let e_out = (e_in - delta_e).max(self.min_scattered_energy(e_in));
        Ok(self.cos_theta_from_energies(e_in, e_out).clamp(-1.0, 1.0).acos())
    }

    /// `cos θ = (m_e − 2ΔE)/(m_e − ΔE)`: the reconstruction for `E_i = m_e`.
    pub fn theta_from_energy_deposit(&self, delta_e: f64) -> Result<f64> {
        self.theta_from_deposit(self.electron_mass, delta_e)
    }
}

#[inline]
fn gamma_of_ratio(ratio: f64) -> f64 {
    ratio + 1.0 / ratio
}

pub fn scattered_energy(e_in: f64, theta: f64) -> f64 {
    Compton::STANDARD.scattered_energy(e_in, theta)
}

pub fn gamma_factor(e_in: f64, e_out: f64) -> Result<f64> {
    Compton::STANDARD.gamma_factor(e_in, e_out)
}

pub fn klein_nishina_weight(e_in: f64, theta: f64, phi: f64, pol: LinearPolarization) -> f64 {
    Compton::STANDARD.klein_nishina_weight(e_in, theta, phi, pol)
}

pub fn analyzing_power(e_in: f64, theta: f64) -> f64 {
    Compton::STANDARD.analyzing_power(e_in, theta)
}

pub fn transition_probabilities(e_in: f64, theta: f64) -> TransitionProbabilities {
    Compton::STANDARD.transition_probabilities(e_in, theta)
}

pub fn scatter_polarization(
    pol_in: LinearPolarization,
    theta: f64,
    phi: f64,
    e_in: f64,
) -> LinearPolarization {
    Compton::STANDARD.scatter_polarization(pol_in, theta, phi, e_in)
}

pub fn theta_from_energy_deposit(delta_e: f64) -> Result<f64> {
    Compton::STANDARD.theta_from_energy_deposit(delta_e)
}

/// Relative angular resolution `Δθ/θ = coeff / √(E/30 keV)` of the
/// pre-scatterer, with the default coefficient 0.05.
pub fn angle_resolution(e_deposit: f64) -> f64 {
    angle_resolution_with(DEFAULT_GAGG_COEFF, e_deposit)
}

pub const DEFAULT_GAGG_COEFF: f64 = 0.05;

pub fn angle_resolution_with(coeff: f64, e_deposit: f64) -> f64 {
    coeff / (e_deposit / 30.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    const M: f64 = ELECTRON_MASS_KEV;

    #[test]
    fn scattered_energy_examples() {
        assert_relative_eq!(scattered_energy(M, FRAC_PI_2), 255.5, max_relative = 1e-14);
        assert_eq!(scattered_energy(123.0, 0.0), 123.0);
        assert_relative_eq!(scattered_energy(M, PI), 511.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_factor(300.0, 300.0).unwrap(), 2.0);
        assert_relative_eq!(gamma_factor(M, 255.5).unwrap(), 2.5, max_relative = 1e-14);
        assert_relative_eq!(gamma_factor(M, M / 3.0).unwrap(), 10.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn gamma_rejects_impossible_pairs() {
        assert!(matches!(gamma_factor(M, 600.0), Err(Error::Kinematics { .. })));
        assert!(gamma_factor(M, 160.0).is_err());
        assert!(gamma_factor(M, 0.0).is_err());
    }

    #[test]
    fn weight_examples() {
        let full = LinearPolarization::fully(0.3);
        assert_relative_eq!(
            klein_nishina_weight(M, FRAC_PI_2, 0.3, full),
            0.125,
            max_relative = 1e-13
        );
        let unpol = LinearPolarization::unpolarized();
        let w0 = klein_nishina_weight(M, 1.1, 0.0, unpol);
        for phi in [0.4, 1.3, 2.9, 5.0] {
            assert_relative_eq!(klein_nishina_weight(M, 1.1, phi, unpol), w0, max_relative = 1e-14);
        }
        for phi in [0.0, 1.0, 2.0] {
            assert_eq!(klein_nishina_weight(M, 0.0, phi, full), 2.0);
        }
    }

    #[test]
    fn analyzing_power_examples() {
        assert!((analyzing_power(M, 82f64.to_radians()) - 0.69).abs() < 0.005);
        assert_relative_eq!(analyzing_power(M, FRAC_PI_2), 2.0 / 3.0, max_relative = 1e-14);
        assert_eq!(analyzing_power(700.0, 0.0), 0.0);
    }

    #[test]
    fn analyzing_power_peak() {
        let (arg, max) = (0..=180_000)
            .map(|i| (i as f64 * 1e-3).to_radians())
            .map(|t| (t, analyzing_power(M, t)))
            .fold((0.0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
        assert!((arg.to_degrees() - 82.0).abs() <= 0.5, "argmax {}", arg.to_degrees());
        assert!((max - 0.69).abs() <= 0.005, "max {max}");
    }

    #[test]
    fn transition_examples() {
        let t = transition_probabilities(M, 0.0);
        assert_eq!((t.p_v_to_h, t.p_h_to_v), (0.0, 0.0));
        let t = transition_probabilities(M, FRAC_PI_2);
        assert_relative_eq!(t.p_v_to_h, 0.1, max_relative = 1e-13);
        assert_relative_eq!(t.p_h_to_v, 1.0 / 6.0, max_relative = 1e-13);
        let t = transition_probabilities(M, PI);
        assert_relative_eq!(t.p_v_to_h, 0.2, max_relative = 1e-12);
        assert_relative_eq!(t.p_h_to_v, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn forward_scatter_keeps_polarization() {
        let pol = LinearPolarization::new(1.2, 0.7).unwrap();
        let out = scatter_polarization(pol, 0.0, 0.4, M);
        assert_relative_eq!(out.angle(), pol.angle(), epsilon = 1e-12);
        assert_relative_eq!(out.degree(), pol.degree(), epsilon = 1e-12);
    }

    /// Fraction of the scattered intensity an ideal analyzer finds polarized
    /// in the scattering plane.
    fn in_plane_fraction(pol_in: LinearPolarization, theta: f64, phi: f64) -> f64 {
        let out = scatter_polarization(pol_in, theta, phi, M);
        // in-plane axis of the outgoing scattering-plane basis sits at azimuth `phi`
        0.5 * (1.0 + out.degree() * (2.0 * (out.angle() - phi)).cos())
    }

    #[test]
    fn vertical_input_reproduces_v_to_h() {
        let phi = 0.7;
        let v = LinearPolarization::fully(phi + FRAC_PI_2);
        assert_relative_eq!(in_plane_fraction(v, FRAC_PI_2, phi), 0.1, max_relative = 1e-12);
        for theta in [0.3, 1.0, 2.0, 2.8] {
            let t = transition_probabilities(M, theta);
            assert_relative_eq!(in_plane_fraction(v, theta, phi), t.p_v_to_h, epsilon = 1e-12);
        }
    }

    #[test]
    fn horizontal_input_transfer() {
        // Normalized by the H-input intensity the transfer gives (γ−2)/(2(γ−2sin²θ));
        // normalized by the unpolarized intensity it is the tabulated P(H→V).
        let phi = 1.9;
        let h = LinearPolarization::fully(phi);
        for theta in [0.2, 0.9, FRAC_PI_2, 2.4, PI] {
            let gamma = Compton::STANDARD.gamma_at(M, theta);
            let sin2 = theta.sin().powi(2);
            let to_v = 1.0 - in_plane_fraction(h, theta, phi);
            assert_relative_eq!(
                to_v,
                (gamma - 2.0) / (2.0 * (gamma - 2.0 * sin2)),
                epsilon = 1e-12
            );
            let w_h = klein_nishina_weight(M, theta, phi, h);
            let w_unpol = klein_nishina_weight(M, theta, phi, LinearPolarization::unpolarized());
            let p = transition_probabilities(M, theta).p_h_to_v;
            assert_relative_eq!(to_v * w_h / w_unpol, p, epsilon = 1e-12);
        }
    }

    #[test]
    fn theta_from_deposit_examples() {
        assert_eq!(theta_from_energy_deposit(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            theta_from_energy_deposit(M / 4.0).unwrap(),
            (2.0f64 / 3.0).acos(),
            max_relative = 1e-13
        );
        assert_relative_eq!(theta_from_energy_deposit(2.0 * M / 3.0).unwrap(), PI, epsilon = 1e-7);
        assert!(matches!(
            theta_from_energy_deposit(341.0),
            Err(Error::InvalidDeposit { .. })
        ));
        assert!(theta_from_energy_deposit(-1.0).is_err());
    }

    #[test]
    fn angle_resolution_examples() {
        assert_relative_eq!(angle_resolution(30.0), 0.05, max_relative = 1e-15);
        assert_relative_eq!(angle_resolution(120.0), 0.025, max_relative = 1e-15);
        assert_relative_eq!(angle_resolution(7.5), 0.10, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn kinematic_round_trip(e in 10.0..5000.0f64, theta in 0.0..PI) {
            let c = Compton::STANDARD;
            let ef = c.scattered_energy(e, theta);
            let gamma = c.gamma_factor(e, ef).unwrap();
            prop_assert!(gamma >= 2.0);
            prop_assert!((c.cos_theta_from_energies(e, ef) - theta.cos()).abs() < 1e-12);
            prop_assert!((gamma - (ef / e + e / ef)).abs() < 1e-12);
        }

        #[test]
        fn analyzing_power_is_ratio_of_weights(e in 10.0..5000.0f64, theta in 0.0..PI, pol_angle in 0.0..PI) {
            let pol = LinearPolarization::fully(pol_angle);
            let perp = klein_nishina_weight(e, theta, pol_angle + FRAC_PI_2, pol);
            let par = klein_nishina_weight(e, theta, pol_angle, pol);
            let ratio = (perp - par) / (perp + par);
            prop_assert!((ratio - analyzing_power(e, theta)).abs() < 1e-12);
        }

        #[test]
        fn transition_ordering(e in 10.0..5000.0f64, theta in 0.0..PI) {
            let c = Compton::STANDARD;
            let t = c.transition_probabilities(e, theta);
            let gamma = c.gamma_at(e, theta);
            let sin2 = theta.sin().powi(2);
            prop_assert!(t.p_h_to_v >= t.p_v_to_h);
            prop_assert!((0.0..=0.5).contains(&t.p_v_to_h) && (0.0..=0.5).contains(&t.p_h_to_v));
            let diff = (gamma - 2.0) * sin2 / (2.0 * gamma * (gamma - sin2));
            prop_assert!((t.p_h_to_v - t.p_v_to_h - diff).abs() < 1e-12);
        }

        #[test]
        fn unpolarized_input_acquires_analyzing_power(e in 10.0..5000.0f64, theta in 0.0..PI, phi in 0.0..TAU) {
            let out = Compton::STANDARD.scatter_polarization(LinearPolarization::unpolarized(), theta, phi, e);
            prop_assert!((out.degree() - analyzing_power(e, theta)).abs() < 1e-12);
        }

        #[test]
        fn deposit_inverts_scattering(theta in 0.05..3.09f64) {
            let de = M - scattered_energy(M, theta);
            let back = theta_from_energy_deposit(de).unwrap();
            prop_assert!((back - theta).abs() < 1e-10);
        }

        #[test]
        fn deposit_reconstruction_is_monotone(a in 0.0..340.0f64, b in 0.0..340.0f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(theta_from_energy_deposit(lo).unwrap() <= theta_from_energy_deposit(hi).unwrap());
        }
    }
}
