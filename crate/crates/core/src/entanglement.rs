//! Entanglement measures of a photon pair after one photon Compton-scatters,
//! and numerical checks of how the pair visibility factorizes.
//!
//! The 3-Compton probability is evaluated only up to terms linear in a single
//! `cos 2φ_a` or `cos 2φ_b`. Those vanish in the azimuthal average that defines
//! the correlation function `R(φ)`, so [`ThreeComptonModel::probability`] is
//! meant for computing `R(φ)` and the visibility, not as a differential cross
//! section in its own right.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::Result;
use crate::physics::Compton;
use crate::quadrature::CheckedQuadrature;

/// Number of equally spaced azimuths used to project `R(φ)` onto `cos 2φ`.
pub const PROJECTION_POINTS: usize = 64;

impl Compton {
    /// Concurrence after one photon of a maximally entangled pair scatters by
    /// `theta`: `(1 + |cos θ|)² / (2(γ − sin²θ))`.
    pub fn concurrence_qft(&self, e_in: f64, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let gamma = self.gamma_at(e_in, theta);
        (1.0 + c.abs()).powi(2) / (2.0 * (gamma - s * s))
    }

    /// Concurrence of the pure-state model built from the transition
    /// probabilities: `|√(P_HH P_VV) − √(P_HV P_VH)|`.
    pub fn concurrence_pure_model(&self, e_in: f64, theta: f64) -> f64 {
        let t = self.transition_probabilities(e_in, theta);
        ((t.p_h_to_h() * t.p_v_to_v()).sqrt() - (t.p_h_to_v * t.p_v_to_h).sqrt()).abs()
    }

    /// `A(E_ai, θ_a) · A(E_bi, θ_b)`: visibility of a maximally entangled pair.
    pub fn visibility_entangled(&self, e_ai: f64, theta_a: f64, e_bi: f64, theta_b: f64) -> f64 {
        self.analyzing_power(e_ai, theta_a) * self.analyzing_power(e_bi, theta_b)
    }

    /// Half the entangled visibility: pairs with random mutually orthogonal
    /// linear polarizations.
    pub fn visibility_classical(&self, e_ai: f64, theta_a: f64, e_bi: f64, theta_b: f64) -> f64 {
        0.5 * self.visibility_entangled(e_ai, theta_a, e_bi, theta_b)
    }
}

pub fn concurrence_qft(e_in: f64, theta: f64) -> f64 {
    Compton::STANDARD.concurrence_qft(e_in, theta)
}

pub fn concurrence_pure_model(e_in: f64, theta: f64) -> f64 {
    Compton::STANDARD.concurrence_pure_model(e_in, theta)
}

pub fn visibility_entangled(e_ai: f64, theta_a: f64, e_bi: f64, theta_b: f64) -> f64 {
    Compton::STANDARD.visibility_entangled(e_ai, theta_a, e_bi, theta_b)
}

pub fn visibility_classical(e_ai: f64, theta_a: f64, e_bi: f64, theta_b: f64) -> f64 {
    Compton::STANDARD.visibility_classical(e_ai, theta_a, e_bi, theta_b)
}

/// `S(φ) = ν (cos 6φ − 3 cos 2φ)`.
pub fn chsh_s_curve(phi: f64, nu: f64) -> f64 {
    nu * ((6.0 * phi).cos() - 3.0 * (2.0 * phi).cos())
}

/// Sampled concurrence curve `C(θ)` at fixed incident energy.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcurrenceCurve {
    pub e_in: f64,
    pub samples: Vec<(f64, f64)>,
}

impl ConcurrenceCurve {
    /// `points` equally spaced angles covering `[0, π]`.
    pub fn qft(compton: &Compton, e_in: f64, points: usize) -> Self {
        let n = points.max(2);
        let samples = (0..n)
            .map(|i| PI * i as f64 / (n - 1) as f64)
            .map(|t| (t, compton.concurrence_qft(e_in, t)))
            .collect();
        Self { e_in, samples }
    }
}

/// Polarized-pair integrals for classically correlated photons:
/// `P_⊥` (scattering planes orthogonal) and `P_∥` (parallel).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalIntegrals {
    pub p_perp: f64,
    pub p_par: f64,
}

impl ClassicalIntegrals {
    pub fn visibility(&self) -> f64 {
        (self.p_perp - self.p_par) / (self.p_perp + self.p_par)
    }
}

/// Evaluates `P_⊥` and `P_∥` by quadrature over the azimuth.
pub fn classical_integrals(
    compton: &Compton,
    theta_a: f64,
    theta_b: f64,
    e_ai: f64,
    e_bi: f64,
) -> Result<ClassicalIntegrals> {
    let q = CheckedQuadrature::default();
    let ga = compton.gamma_at(e_ai, theta_a);
    let gb = compton.gamma_at(e_bi, theta_b);
    let sa = theta_a.sin().powi(2);
    let sb = theta_b.sin().powi(2);
    let pa = |phi: f64| ga - 2.0 * sa * phi.cos().powi(2);
    let par = q.integrate(|phi| pa(phi) * (gb - 2.0 * sb * phi.sin().powi(2)), 0.0, TAU)?;
    let perp = q.integrate(|phi| pa(phi) * (gb - 2.0 * sb * phi.cos().powi(2)), 0.0, TAU)?;
    Ok(ClassicalIntegrals { p_perp: perp.value / PI, p_par: par.value / PI })
}

/// Closed forms `P_⊥ − P_∥ = 2 sin²θ_a sin²θ_b` and
/// `P_⊥ + P_∥ = 4 (γ_a − sin²θ_a)(γ_b − sin²θ_b)`.
pub fn classical_integrals_closed_form(
    compton: &Compton,
    theta_a: f64,
    theta_b: f64,
    e_ai: f64,
    e_bi: f64,
) -> (f64, f64) {
    let sa = theta_a.sin().powi(2);
    let sb = theta_b.sin().powi(2);
    let ga = compton.gamma_at(e_ai, theta_a);
    let gb = compton.gamma_at(e_bi, theta_b);
    (2.0 * sa * sb, 4.0 * (ga - sa) * (gb - sb))
}

/// Scattering angles of the 3-Compton chain: photon `a` pre-scatters by
/// `theta` and is then analyzed at `theta_a`; photon `b` is analyzed at
/// `theta_b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeComptonConfig {
    pub e_in: f64,
    pub theta: f64,
    pub theta_a: f64,
    pub theta_b: f64,
    /// Incident energy of photon `b`; equals `e_in` for a pair of equal energies
    /// (the annihilation case has `e_in = e_b = m_e`).
    pub e_b: f64,
}

/// Energies along the scattering chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainEnergies {
    pub e_ai: f64,
    pub e_af: f64,
    pub e_bi: f64,
    pub e_bf: f64,
}

impl ThreeComptonConfig {
    pub fn new(e_in: f64, theta: f64, theta_a: f64, theta_b: f64) -> Self {
        Self { e_in, theta, theta_a, theta_b, e_b: e_in }
    }

    pub fn energies(&self, compton: &Compton) -> ChainEnergies {
        let e_ai = compton.scattered_energy(self.e_in, self.theta);
        ChainEnergies {
            e_ai,
            e_af: compton.scattered_energy(e_ai, self.theta_a),
            e_bi: self.e_b,
            e_bf: compton.scattered_energy(self.e_b, self.theta_b),
        }
    }
}

/// Diagonal transfer element `1 + cos²θ + (ΔE/m_e)(1 − cos θ)` of a single
/// scattering that takes the photon from `e_before` to `e_after`.
fn transfer_diagonal(compton: &Compton, e_before: f64, e_after: f64, theta: f64) -> f64 {
    let c = theta.cos();
    1.0 + c * c + (e_before - e_after) / compton.electron_mass() * (1.0 - c)
}

/// Which azimuth combination the correlation function integrates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `φ = φ_a + φ_b`
    Forward,
    /// `φ = φ_b − φ_a`, keeping the basis orientation for backscattering.
    Backward,
}

impl Direction {
    pub fn for_theta(theta: f64) -> Self {
        if theta <= FRAC_PI_2 {
            Direction::Forward
        } else {
            Direction::Backward
        }
    }
}

/// The 3-Compton probability `A − B·C(φ_b, φ_a; θ) + D(…)`.
///
/// The two knobs exist so that tests can break the model on purpose and
/// confirm the factorization check notices; [`Default`] is the physical model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeComptonModel {
    /// Sign in front of `cos θ sin 2φ_b sin 2φ_a` inside `C` (physical: `-1`).
    pub interference_sign: f64,
    /// Coefficient of `B sin²θ cos 2φ_b cos 2φ_a` in `D` (physical: `½`).
    pub d_term_coeff: f64,
    pub compton: Compton,
}

impl Default for ThreeComptonModel {
    fn default() -> Self {
        Self { interference_sign: -1.0, d_term_coeff: 0.5, compton: Compton::STANDARD }
    }
}

/// Angle-dependent prefactors of the 3-Compton probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeComptonTerms {
    /// `A = t¹¹₁₁ t²¹₁₁ t²²₁₁`
    pub a: f64,
    /// `B = 2 sin²θ_b sin²θ_a`
    pub b: f64,
}

impl ThreeComptonModel {
    pub fn with_compton(compton: Compton) -> Self {
        Self { compton, ..Self::default() }
    }

    pub fn terms(&self, cfg: &ThreeComptonConfig) -> ThreeComptonTerms {
        let c = &self.compton;
        let en = cfg.energies(c);
        let t_b = transfer_diagonal(c, en.e_bi, en.e_bf, cfg.theta_b);
        let t_pre = transfer_diagonal(c, cfg.e_in, en.e_ai, cfg.theta);
        let t_a = transfer_diagonal(c, en.e_ai, en.e_af, cfg.theta_a);
        ThreeComptonTerms {
            a: t_b * t_pre * t_a,
            b: 2.0 * cfg.theta_b.sin().powi(2) * cfg.theta_a.sin().powi(2),
        }
    }

    pub fn probability(&self, cfg: &ThreeComptonConfig, phi_a: f64, phi_b: f64) -> f64 {
        let t = self.terms(cfg);
        let (s2a, c2a) = (2.0 * phi_a).sin_cos();
        let (s2b, c2b) = (2.0 * phi_b).sin_cos();
        let (sin, cos) = cfg.theta.sin_cos();
        let c_term = c2b * c2a + self.interference_sign * cos * s2b * s2a;
        let d_term = self.d_term_coeff * t.b * sin * sin * c2b * c2a;
        t.a - t.b * c_term + d_term
    }

    /// `R(φ) = (1/π) ∫₀^π dφ_b P(φ_a(φ, φ_b), φ_b)`.
    pub fn correlation_r(
        &self,
        cfg: &ThreeComptonConfig,
        phi: f64,
        direction: Direction,
    ) -> Result<f64> {
        let q = CheckedQuadrature::default();
        let integral = match direction {
            Direction::Forward => q.integrate(|pb| self.probability(cfg, phi - pb, pb), 0.0, PI)?,
            Direction::Backward => q.integrate(|pb| self.probability(cfg, pb - phi, pb), 0.0, PI)?,
        };
        Ok(integral.value / PI)
    }

    /// `A − B [1 + |cos θ| − ½ sin²θ] cos 2φ / 2`.
    pub fn correlation_r_closed_form(&self, cfg: &ThreeComptonConfig, phi: f64) -> f64 {
        let t = self.terms(cfg);
        t.a - t.b * bracket(cfg.theta) * (2.0 * phi).cos() / 2.0
    }

    /// Visibility from the closed form `ν = B/(2A) [1 + |cos θ| − ½ sin²θ]`.
    pub fn visibility_closed_form(&self, cfg: &ThreeComptonConfig) -> f64 {
        let t = self.terms(cfg);
        t.b / (2.0 * t.a) * bracket(cfg.theta)
    }

    /// Visibility obtained by projecting the quadrature `R(φ)` onto `cos 2φ`
    /// over [`PROJECTION_POINTS`] equally spaced azimuths.
    pub fn visibility_quadrature(&self, cfg: &ThreeComptonConfig, direction: Direction) -> Result<f64> {
        let n = PROJECTION_POINTS;
        let mut mean = 0.0;
        let mut cos2 = 0.0;
        for k in 0..n {
            let phi = TAU * k as f64 / n as f64;
            let r = self.correlation_r(cfg, phi, direction)?;
            mean += r;
            cos2 += r * (2.0 * phi).cos();
        }
        mean /= n as f64;
        cos2 *= 2.0 / n as f64;
        Ok(-cos2 / mean)
    }

    pub fn factorization(&self, cfg: &ThreeComptonConfig) -> Result<FactorizationReport> {
        let c = &self.compton;
        let en = cfg.energies(c);
        let nu_quadrature = self.visibility_quadrature(cfg, Direction::for_theta(cfg.theta))?;
        let nu_closed_form = self.visibility_closed_form(cfg);
        let concurrence = c.concurrence_qft(cfg.e_in, cfg.theta);
        let a_a = c.analyzing_power(en.e_ai, cfg.theta_a);
        let a_b = c.analyzing_power(en.e_bi, cfg.theta_b);
        let nu_factorized = concurrence * a_a * a_b;
        Ok(FactorizationReport {
            nu_quadrature,
            nu_closed_form,
            nu_factorized,
            concurrence,
            a_a,
            a_b,
        })
    }
}

fn bracket(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    1.0 + c.abs() - 0.5 * s * s
}

/// Visibilities of one configuration computed three ways.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorizationReport {
    pub nu_quadrature: f64,
    pub nu_closed_form: f64,
    /// `C(E_i, θ) · A(E_ai, θ_a) · A(E_bi, θ_b)`
    pub nu_factorized: f64,
    pub concurrence: f64,
    pub a_a: f64,
    pub a_b: f64,
}

impl FactorizationReport {
    pub fn residual_factorized(&self) -> f64 {
        (self.nu_quadrature - self.nu_factorized).abs()
    }

    pub fn residual_closed_form(&self) -> f64 {
        (self.nu_quadrature - self.nu_closed_form).abs()
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_factorized().max(self.residual_closed_form())
    }
}

pub fn three_compton_probability(cfg: &ThreeComptonConfig, phi_a: f64, phi_b: f64) -> f64 {
    ThreeComptonModel::default().probability(cfg, phi_a, phi_b)
}

pub fn correlation_r(cfg: &ThreeComptonConfig, phi: f64, direction: Direction) -> Result<f64> {
    ThreeComptonModel::default().correlation_r(cfg, phi, direction)
}

/// `|ν_quadrature − C·A_a·A_b|` for the physical model.
pub fn factorization_residual(cfg: &ThreeComptonConfig) -> Result<f64> {
    Ok(ThreeComptonModel::default().factorization(cfg)?.residual_factorized())
}

/// Deterministic pseudo-random grid of configurations with
/// `E_i ∈ [0.05, 5]·m_e` and all angles in `(0, π)`, for the factorization
/// oracle. Uses a SplitMix64 sequence so the grid never depends on RNG crates.
pub fn factorization_grid(count: usize, seed: u64) -> Vec<ThreeComptonConfig> {
    let mut state = seed;
    let mut next = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    };
    let m = crate::physics::ELECTRON_MASS_KEV;
    (0..count)
        .map(|_| {
            let e = m * (0.05 + 4.95 * next());
            let angle = |u: f64| 0.01 + (PI - 0.02) * u;
            ThreeComptonConfig::new(e, angle(next()), angle(next()), angle(next()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ELECTRON_MASS_KEV as M;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const DEG: f64 = PI / 180.0;

    #[test]
    fn concurrence_qft_examples() {
        assert_relative_eq!(concurrence_qft(M, 0.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(concurrence_qft(M, PI), 0.6, max_relative = 1e-12);
        assert_relative_eq!(concurrence_qft(M, FRAC_PI_2), 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn concurrence_qft_matches_explicit_m_e_form() {
        for deg in (0..=180).step_by(5) {
            let t = deg as f64 * DEG;
            let c = t.cos();
            let explicit = (1.0 + c.abs() - 0.5 * t.sin().powi(2))
                / (1.0 + c * c + (1.0 - c).powi(2) / (2.0 - c));
            assert_relative_eq!(concurrence_qft(M, t), explicit, max_relative = 1e-12);
        }
    }

    #[test]
    fn pure_model_examples() {
        assert_relative_eq!(concurrence_pure_model(300.0, 0.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(concurrence_pure_model(M, PI), 0.6, max_relative = 1e-12);
        let expected = 0.75f64.sqrt() - (1.0f64 / 60.0).sqrt();
        assert_relative_eq!(concurrence_pure_model(M, FRAC_PI_2), expected, max_relative = 1e-12);
        assert!((concurrence_pure_model(M, FRAC_PI_2) - 0.7369).abs() < 1e-4);
    }

    #[test]
    fn visibility_examples() {
        assert_relative_eq!(visibility_entangled(M, FRAC_PI_2, M, FRAC_PI_2), 4.0 / 9.0, max_relative = 1e-13);
        assert_eq!(visibility_entangled(M, 0.0, M, 1.0), 0.0);
        let peak = visibility_entangled(M, 82.0 * DEG, M, 82.0 * DEG);
        assert!((peak - 0.476).abs() < 0.01);
        assert_relative_eq!(visibility_classical(M, FRAC_PI_2, M, FRAC_PI_2), 2.0 / 9.0, max_relative = 1e-13);
        assert_eq!(visibility_classical(M, 0.0, M, FRAC_PI_2), 0.0);
        let mixed = visibility_classical(M, 82.0 * DEG, M, FRAC_PI_2);
        assert!((mixed - 0.23).abs() < 0.002, "{mixed}");
    }

    #[test]
    fn chsh_examples() {
        assert!(chsh_s_curve(45.0 * DEG, 0.7).abs() < 1e-15);
        assert_relative_eq!(chsh_s_curve(0.0, 0.3), -0.6, max_relative = 1e-15);
        assert_relative_eq!(chsh_s_curve(22.5 * DEG, 0.3), -2.0 * 2f64.sqrt() * 0.3, max_relative = 1e-14);
    }

    #[test]
    fn classical_integral_examples() {
        let c = Compton::STANDARD;
        let r = classical_integrals(&c, FRAC_PI_2, FRAC_PI_2, M, M).unwrap();
        assert_relative_eq!(r.p_perp - r.p_par, 2.0, max_relative = 1e-12);
        let r = classical_integrals(&c, 1e-9, 1.2, M, M).unwrap();
        assert!((r.p_perp - r.p_par).abs() < 1e-12);
        for cfg in factorization_grid(10, 7) {
            let e_ai = c.scattered_energy(cfg.e_in, cfg.theta);
            let r = classical_integrals(&c, cfg.theta_a, cfg.theta_b, e_ai, cfg.e_b).unwrap();
            let nu_cc = c.visibility_classical(e_ai, cfg.theta_a, cfg.e_b, cfg.theta_b);
            assert_relative_eq!(r.visibility(), nu_cc, epsilon = 1e-12);
            let (diff, sum) = classical_integrals_closed_form(&c, cfg.theta_a, cfg.theta_b, e_ai, cfg.e_b);
            assert!((r.p_perp - r.p_par - diff).abs() < 1e-10);
            assert!((r.p_perp + r.p_par - sum).abs() < 1e-10);
        }
    }

    #[test]
    fn transfer_diagonal_reduces_to_gamma_minus_sin2() {
        let c = Compton::STANDARD;
        for (e, t) in [(M, 0.4), (50.0, 2.0), (2000.0, 1.3)] {
            let ef = c.scattered_energy(e, t);
            assert_relative_eq!(
                transfer_diagonal(&c, e, ef, t),
                c.gamma_at(e, t) - t.sin().powi(2),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn three_compton_right_angles() {
        let cfg = ThreeComptonConfig::new(M, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2);
        let model = ThreeComptonModel::default();
        let t = model.terms(&cfg);
        assert_relative_eq!(t.b, 2.0, max_relative = 1e-15);
        let c = Compton::STANDARD;
        let en = cfg.energies(&c);
        let expected = (c.gamma_at(M, FRAC_PI_2) - 1.0)
            * (c.gamma_at(M, FRAC_PI_2) - 1.0)
            * (c.gamma_at(en.e_ai, FRAC_PI_2) - 1.0);
        assert_relative_eq!(t.a, expected, max_relative = 1e-12);
        // ν = B/(2A)·[1 + 0 − ½]
        let nu = model.visibility_quadrature(&cfg, Direction::Forward).unwrap();
        assert_relative_eq!(nu, 2.0 / (2.0 * t.a) * 0.5, max_relative = 1e-10);
        let report = model.factorization(&cfg).unwrap();
        assert_relative_eq!(report.a_a, c.analyzing_power(255.5, FRAC_PI_2), max_relative = 1e-12);
        assert!(report.max_residual() < 1e-9);
    }

    #[test]
    fn forward_limit_reproduces_unscattered_pair() {
        let model = ThreeComptonModel::default();
        let cfg = ThreeComptonConfig::new(M, 1e-7, FRAC_PI_2, FRAC_PI_2);
        let r = model.factorization(&cfg).unwrap();
        assert!((r.nu_quadrature - 4.0 / 9.0).abs() < 1e-9);
        assert!(r.residual_factorized() < 1e-9);
        // R reduces to A − (B/2)·cos 2φ·(1 + 1)/... i.e. the cos 2(φ_a + φ_b) shape
        for phi in [0.0, 0.4, 1.1] {
            let quad = model.correlation_r(&cfg, phi, Direction::Forward).unwrap();
            let closed = model.correlation_r_closed_form(&cfg, phi);
            assert!((quad - closed).abs() <= 1e-9 * closed.abs());
        }
    }

    #[test]
    fn backward_limit() {
        let model = ThreeComptonModel::default();
        let cfg = ThreeComptonConfig::new(M, PI - 1e-7, FRAC_PI_2, FRAC_PI_2);
        let r = model.factorization(&cfg).unwrap();
        let en = cfg.energies(&Compton::STANDARD);
        assert!((en.e_ai - M / 3.0).abs() < 1e-6);
        let expected = 0.6 * r.a_a * r.a_b;
        assert!((r.nu_quadrature - expected).abs() < 1e-9);
        // backward at θ → π and forward at θ → 0 share the bracket 1 + |cos θ| − ½sin²θ
        let fwd = ThreeComptonConfig::new(M, 1e-7, FRAC_PI_2, FRAC_PI_2);
        let ratio_b = r.nu_quadrature / model.terms(&cfg).b * (2.0 * model.terms(&cfg).a);
        let ratio_f = model.visibility_quadrature(&fwd, Direction::Forward).unwrap()
            / model.terms(&fwd).b
            * (2.0 * model.terms(&fwd).a);
        assert!((ratio_b - ratio_f).abs() < 1e-9);
    }

    #[test]
    fn perpendicular_planes_are_favoured() {
        let model = ThreeComptonModel::default();
        for cfg in factorization_grid(20, 3) {
            let dir = Direction::for_theta(cfg.theta);
            let r0 = model.correlation_r(&cfg, 0.0, dir).unwrap();
            let r90 = model.correlation_r(&cfg, FRAC_PI_2, dir).unwrap();
            assert!(r0 < r90, "{cfg:?}");
        }
    }

    #[test]
    fn closed_form_r_matches_quadrature() {
        let model = ThreeComptonModel::default();
        for cfg in factorization_grid(20, 11) {
            let dir = Direction::for_theta(cfg.theta);
            for k in 0..8 {
                let phi = k as f64 * PI / 8.0;
                let quad = model.correlation_r(&cfg, phi, dir).unwrap();
                let closed = model.correlation_r_closed_form(&cfg, phi);
                assert!((quad - closed).abs() <= 1e-9 * closed.abs(), "{cfg:?} {phi}");
            }
        }
    }

    #[test]
    fn factorization_holds_on_grid() {
        let model = ThreeComptonModel::default();
        let worst = factorization_grid(100, 2024)
            .iter()
            .map(|cfg| model.factorization(cfg).unwrap().max_residual())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "worst residual {worst:e}");
    }

    #[test]
    fn broken_models_fail_factorization() {
        let grid = factorization_grid(100, 2024);
        for broken in [
            ThreeComptonModel { interference_sign: 1.0, ..Default::default() },
            ThreeComptonModel { d_term_coeff: -0.5, ..Default::default() },
        ] {
            let worst = grid
                .iter()
                .map(|cfg| broken.factorization(cfg).unwrap().max_residual())
                .fold(0.0, f64::max);
            assert!(worst > 1e-3, "{broken:?}: {worst:e}");
        }
    }

    #[test]
    fn perturbed_electron_mass_stays_consistent() {
        let model = ThreeComptonModel::with_compton(Compton::with_electron_mass(512.0));
        for cfg in factorization_grid(20, 5) {
            assert!(model.factorization(&cfg).unwrap().max_residual() < 1e-9);
        }
        let shifted = Compton::with_electron_mass(512.0).concurrence_qft(M, PI);
        assert!((shifted - 0.6).abs() > 1e-4);
    }

    #[test]
    fn qft_curve_shape() {
        let curve = ConcurrenceCurve::qft(&Compton::STANDARD, M, 181);
        assert_eq!(curve.samples.first().unwrap().1, 1.0);
        for w in curve.samples.windows(2) {
            let (t0, c0) = w[0];
            let (t1, c1) = w[1];
            if t1 <= FRAC_PI_2 + 1e-12 {
                assert!(c1 < c0, "not decreasing at {t1}");
            } else if t0 >= FRAC_PI_2 - 1e-12 {
                assert!(c1 > c0, "not increasing at {t1}");
            }
        }
    }

    #[test]
    fn low_energy_limit_form() {
        let e = 0.1 * M;
        for deg in 0..=180 {
            let t = deg as f64 * DEG;
            let s2 = t.sin().powi(2);
            let limit = (1.0 + t.cos().abs()).powi(2) / (2.0 * (2.0 - s2));
            let c = concurrence_qft(e, t);
            assert!((c - limit).abs() / limit < 0.02, "{deg}° {c} {limit}");
        }
    }

    proptest! {
        #[test]
        fn endpoints_agree(f in 0.05..5.0f64) {
            let c = Compton::STANDARD;
            let e = f * M;
            prop_assert!((c.concurrence_qft(e, 0.0) - 1.0).abs() < 1e-12);
            prop_assert!((c.concurrence_pure_model(e, 0.0) - 1.0).abs() < 1e-12);
            let g = c.gamma_at(e, PI);
            prop_assert!((c.concurrence_qft(e, PI) - 2.0 / g).abs() < 1e-12);
            prop_assert!((c.concurrence_pure_model(e, PI) - 2.0 / g).abs() < 1e-12);
        }

        #[test]
        fn concurrence_never_collapses(f in 0.05..5.0f64, theta in 0.0..PI) {
            let cq = concurrence_qft(f * M, theta);
            let cp = concurrence_pure_model(f * M, theta);
            prop_assert!(cq > 0.0 && cq <= 1.0 + 1e-15);
            prop_assert!((0.0..=1.0 + 1e-15).contains(&cp));
        }
    }
}
