use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use super::sampler::{ComptonSampler, SamplerStats, FULL_SPHERE};
use super::{GeometryConfig, Mode, PairSample, PrescatterArm};
use crate::events::{EventRecord, ScatteredArm, Truth};
use crate::physics::{angle_resolution_with, Compton, PhotonState};

/// Carries a pair through pre-scatterer, main scatterers and counters.
#[derive(Clone, Debug)]
pub struct Transport {
    geom: GeometryConfig,
    sampler: ComptonSampler,
    prescatter_window: (f64, f64),
    main_window: Option<(f64, f64)>,
    step: f64,
    halfwidth: f64,
}

struct ArmOutcome {
    de_pre: f64,
    e_main: f64,
    counter: u32,
    e_counter: f64,
    theta_main: f64,
    prescatter: Option<(f64, f64)>,
    lost: bool,
}

impl Transport {
    pub fn new(geom: &GeometryConfig) -> Self {
        Self::with_compton(geom, Compton::STANDARD)
    }

    pub fn with_compton(geom: &GeometryConfig, compton: Compton) -> Self {
        let [lo, hi] = geom.prescatter_theta_range_deg;
        Self {
            geom: geom.clone(),
            sampler: ComptonSampler::new(compton),
            prescatter_window: (lo.to_radians(), hi.to_radians()),
            main_window: geom.main_scatter_theta_accept_deg.map(|w| w.bounds_rad()),
            step: geom.counter_step(),
            halfwidth: geom.counter_halfwidth_deg.to_radians(),
        }
    }

    /// Dispatches on the configured mode.
    pub fn transport<R: Rng + ?Sized>(
        &self,
        pair: &PairSample,
        event_id: u64,
        rng: &mut R,
        stats: &mut SamplerStats,
    ) -> EventRecord {
        let p = self.geom.prescatter_interaction_prob;
        let (hit_a, hit_b) = match self.geom.prescatter_arm {
            PrescatterArm::None => (false, false),
            PrescatterArm::A => (rng.random::<f64>() < p, false),
            PrescatterArm::B => (false, rng.random::<f64>() < p),
            PrescatterArm::Random => (rng.random::<f64>() < 0.5 * p, rng.random::<f64>() < 0.5 * p),
        };
        let a = self.arm(pair.photon_a, hit_a, 1.0, rng, stats);
        let b = self.arm(pair.photon_b, hit_b, -1.0, rng, stats);
        let which_arm = match (hit_a, hit_b) {
            (true, true) => Some(ScatteredArm::Both),
            (true, false) => Some(ScatteredArm::A),
            (false, true) => Some(ScatteredArm::B),
            (false, false) => None,
        };
        let pre = a.prescatter.or(b.prescatter);
        EventRecord {
            event_id,
            de_pre_a: a.de_pre,
            de_pre_b: b.de_pre,
            e_main_a: a.e_main,
            e_main_b: b.e_main,
            counter_a: a.counter,
            counter_b: b.counter,
            e_counter_a: a.e_counter,
            e_counter_b: b.e_counter,
            lost: a.lost || b.lost,
            truth: Some(Truth {
                prescatter_theta: pre.map(|(t, _)| t),
                prescatter_phi: pre.map(|(_, p)| p),
                which_arm,
                theta_a: a.theta_main,
                theta_b: b.theta_main,
            }),
        }
    }

    /// `mirror` is `+1` for the arm along `+z` and `−1` for the arm along `−z`,
    /// whose transverse basis is reflected relative to the lab.
    fn arm<R: Rng + ?Sized>(
        &self,
        photon: PhotonState,
        interacts: bool,
        mirror: f64,
        rng: &mut R,
        stats: &mut SamplerStats,
    ) -> ArmOutcome {
        let ideal = self.geom.mode == Mode::Ideal;
        let e0 = photon.energy;
        let mut lost = false;

        let (photon, prescatter) = if interacts {
            let window = if ideal { self.prescatter_window } else { FULL_SPHERE };
            let (theta, phi, out) = self.sampler.sample_compton(rng, &photon, window, stats);
            if !ideal {
                let deg = theta.to_degrees();
                lost |= deg > self.geom.prescatter_forward_max_deg
                    && deg < self.geom.prescatter_backward_min_deg;
            }
            (out, Some((theta, phi)))
        } else {
            (photon, None)
        };

        let window = match (ideal, self.main_window) {
            (true, Some(w)) => w,
            _ => FULL_SPHERE,
        };
        let (theta_main, phi_main, scattered) = self.sampler.sample_compton(rng, &photon, window, stats);
        if let (false, Some((lo, hi))) = (ideal, self.main_window) {
            lost |= theta_main < lo || theta_main > hi;
        }

        // Past 90° the pre-scattered photon travels backwards; its azimuth is
        // re-expressed in the frame that keeps the lab orientation.
        let rho = match prescatter {
            Some((t0, phi0)) if t0 > FRAC_PI_2 => PI - phi_main + 2.0 * phi0,
            _ => phi_main,
        };
        let x = mirror * rho / self.step;
        let nearest = x.round();
        if !ideal && ((x - nearest) * self.step).abs() > self.halfwidth {
            lost = true;
        }
        let n = self.geom.counter_count as i64;
        let counter = (nearest as i64).rem_euclid(n) as u32;

        let mut de_pre = e0 - photon.energy;
        let mut e_main = photon.energy - scattered.energy;
        let mut e_counter = scattered.energy;
        if !ideal {
            de_pre = self.smear_prescatter(rng, de_pre, prescatter.map(|(t, _)| t), photon.energy);
            e_main = smear(rng, e_main, self.geom.main_resolution_at_511);
            e_counter = smear(rng, e_counter, self.geom.nai_resolution_at_511);
        }
        ArmOutcome { de_pre, e_main, counter, e_counter, theta_main, prescatter, lost }
    }

    /// Deposit resolution follows from the relative angular resolution:
    /// `σ_E = (Δθ/θ)·θ·dΔE/dθ`, with `dΔE/dθ = E_f² sin θ / m_e`; electronic
    /// noise adds in quadrature.
    fn smear_prescatter<R: Rng + ?Sized>(&self, rng: &mut R, de: f64, theta: Option<f64>, e_f: f64) -> f64 {
        let sigma_kin = match theta {
            Some(t) if de > 0.0 => {
                let m = self.sampler.compton.electron_mass();
                angle_resolution_with(self.geom.gagg_resolution_coeff, de) * t * e_f * e_f * t.sin() / m
            }
            _ => 0.0,
        };
        let sigma = sigma_kin.hypot(self.geom.gagg_noise_kev);
        let z: f64 = rng.sample(StandardNormal);
        (de + sigma * z).max(0.0)
    }
}

/// Gaussian smearing with `σ = r·√(511 keV · E)`, i.e. relative resolution
/// `r` at 511 keV scaling as `1/√E`.
fn smear<R: Rng + ?Sized>(rng: &mut R, e: f64, r: f64) -> f64 {
    if r == 0.0 {
        return e;
    }
    let z: f64 = rng.sample(StandardNormal);
    (e + r * (511.0 * e).sqrt() * z).max(0.0)
}
