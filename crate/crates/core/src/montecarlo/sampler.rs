use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::physics::{Compton, LinearPolarization, PhotonState};

/// Proposal and acceptance counts of the rejection sampler.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SamplerStats {
    pub proposals: u64,
    pub accepted: u64,
}

impl SamplerStats {
    pub fn merge(&mut self, other: SamplerStats) {
        self.proposals += other.proposals;
        self.accepted += other.accepted;
    }

    pub fn acceptance(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposals as f64
        }
    }
}

/// Rejection sampler for `(θ, φ)` with density `∝ w(θ, φ) sin θ`, where `w`
/// is the polarized Klein–Nishina weight.
///
/// Proposals are uniform in `cos θ` over the window and uniform in `φ`. The
/// envelope is `ε + ε³` evaluated at the smallest angle of the window:
/// `w ≤ ε² γ = ε + ε³`, and `ε` decreases with `θ`.
#[derive(Clone, Copy, Debug)]
pub struct ComptonSampler {
    pub compton: Compton,
}

impl Default for ComptonSampler {
    fn default() -> Self {
        Self { compton: Compton::STANDARD }
    }
}

impl ComptonSampler {
    pub fn new(compton: Compton) -> Self {
        Self { compton }
    }

    fn envelope(&self, e_in: f64, theta_min: f64) -> f64 {
        let eps = self.compton.scattered_energy(e_in, theta_min) / e_in;
        eps + eps * eps * eps
    }

    /// Draws `(θ, φ)` with `θ ∈ [theta_lo, theta_hi]` and `φ ∈ [0, 2π)` in the
    /// basis of `pol`. Equal bounds force `θ` and sample only the azimuth.
    pub fn sample_angles<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        e_in: f64,
        pol: LinearPolarization,
        (theta_lo, theta_hi): (f64, f64),
        stats: &mut SamplerStats,
    ) -> (f64, f64) {
        if theta_hi <= theta_lo {
            return (theta_lo, self.sample_azimuth(rng, e_in, theta_lo, pol, stats));
        }
        let envelope = self.envelope(e_in, theta_lo);
        let (c_lo, c_hi) = (theta_hi.cos(), theta_lo.cos());
        loop {
            stats.proposals += 1;
            let cos = c_lo + (c_hi - c_lo) * rng.random::<f64>();
            let theta = cos.clamp(-1.0, 1.0).acos();
            let phi = TAU * rng.random::<f64>();
            let w = self.compton.klein_nishina_weight(e_in, theta, phi, pol);
            if rng.random::<f64>() * envelope < w {
                stats.accepted += 1;
                return (theta, phi);
            }
        }
    }

    /// Azimuth at fixed `theta`, density `∝ γ − sin²θ (1 + P cos 2(φ − φ_pol))`.
    pub fn sample_azimuth<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        e_in: f64,
        theta: f64,
        pol: LinearPolarization,
        stats: &mut SamplerStats,
    ) -> f64 {
        let eps = self.compton.scattered_energy(e_in, theta) / e_in;
        let sin2 = theta.sin().powi(2);
        let envelope = eps * eps * (eps + 1.0 / eps - sin2 * (1.0 - pol.degree()));
        loop {
            stats.proposals += 1;
            let phi = TAU * rng.random::<f64>();
            let w = self.compton.klein_nishina_weight(e_in, theta, phi, pol);
            if envelope <= 0.0 || rng.random::<f64>() * envelope < w {
                stats.accepted += 1;
                return phi;
            }
        }
    }

    /// Scatters `photon` once, with `θ` restricted to `window`.
    pub fn sample_compton<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        photon: &PhotonState,
        window: (f64, f64),
        stats: &mut SamplerStats,
    ) -> (f64, f64, PhotonState) {
        let (theta, phi) = self.sample_angles(rng, photon.energy, photon.polarization, window, stats);
        (theta, phi, photon.scattered(&self.compton, theta, phi))
    }
}

/// The full polar range.
pub const FULL_SPHERE: (f64, f64) = (0.0, PI);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::ELECTRON_MASS_KEV as M;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn envelope_bounds_weight() {
        let s = ComptonSampler::default();
        let pol = LinearPolarization::fully(0.0);
        for &e in &[0.1 * M, M, 3.0 * M] {
            for lo in [0.0, 0.5, 1.5] {
                let env = s.envelope(e, lo);
                for i in 0..200 {
                    let t = lo + (PI - lo) * i as f64 / 199.0;
                    for j in 0..32 {
                        let phi = TAU * j as f64 / 32.0;
                        assert!(s.compton.klein_nishina_weight(e, t, phi, pol) <= env * (1.0 + 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn forced_angle() {
        let s = ComptonSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut st = SamplerStats::default();
        let (t, _) = s.sample_angles(&mut rng, M, LinearPolarization::fully(0.2), (0.7, 0.7), &mut st);
        assert_eq!(t, 0.7);
        let p = PhotonState::along_plus_z(M, LinearPolarization::fully(0.0));
        let (t, _, out) = s.sample_compton(&mut rng, &p, (FRAC_PI_2, FRAC_PI_2), &mut st);
        assert_eq!(t, FRAC_PI_2);
        assert!((out.energy - 255.5).abs() < 1e-12);
        let (_, _, same) = s.sample_compton(&mut rng, &p, (0.0, 0.0), &mut st);
        assert_eq!(same.energy, M);
        assert!((same.direction() - p.direction()).norm() < 1e-15);
        assert_eq!(same.polarization, p.polarization);
    }

    #[test]
    fn window_respected() {
        let s = ComptonSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut st = SamplerStats::default();
        for _ in 0..10_000 {
            let (t, p) = s.sample_angles(&mut rng, M, LinearPolarization::unpolarized(), (1.2, 1.4), &mut st);
            assert!((1.2..=1.4).contains(&t) && (0.0..TAU).contains(&p));
        }
        assert!(st.acceptance() > 0.3, "{}", st.acceptance());
    }

    #[test]
    fn polarized_azimuth_minimum_at_polarization() {
        // photons scatter away from the polarization plane
        let s = ComptonSampler::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut st = SamplerStats::default();
        let pol = LinearPolarization::fully(0.6);
        let mut hist = [0u32; 36];
        for _ in 0..200_000 {
            let (_, phi) = s.sample_angles(&mut rng, M, pol, FULL_SPHERE, &mut st);
            hist[((phi / TAU * 36.0) as usize).min(35)] += 1;
        }
        let folded: Vec<u32> = (0..18).map(|k| hist[k] + hist[k + 18]).collect();
        let min_bin = (0..18).min_by_key(|&k| folded[k]).unwrap();
        let expected = (0.6 / TAU * 36.0) as usize;
        assert!(min_bin.abs_diff(expected) <= 1, "min at bin {min_bin}, expected {expected}");
    }
}
