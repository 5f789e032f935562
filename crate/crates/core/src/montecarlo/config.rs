use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::ELECTRON_MASS_KEV;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    pub energy_kev: f64,
    pub pairs: u64,
    pub seed: u64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { energy_kev: ELECTRON_MASS_KEV, pairs: 1_000_000, seed: 1 }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.energy_kev > 0.0 && self.energy_kev.is_finite()) {
            return Err(Error::config("source.energy_kev", "must be a positive finite energy"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// 4π geometry, exact energies, contiguous counter segments.
    Ideal,
    /// Finite counters, acceptance windows and detector resolution.
    Realistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrescatterArm {
    A,
    B,
    None,
    /// Each arm interacts independently with half the interaction probability.
    Random,
}

/// Polar-angle window `center ± halfwidth`, in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub center: f64,
    pub halfwidth: f64,
}

impl Window {
    pub fn bounds_rad(&self) -> (f64, f64) {
        let lo = (self.center - self.halfwidth).max(0.0);
        let hi = (self.center + self.halfwidth).min(180.0);
        (lo.to_radians(), hi.to_radians())
    }
}

/// Halfwidth of the default analyzer window around 90°. Chosen so that the
/// Klein–Nishina-weighted mean analyzing power of 511 keV photons scattered
/// inside it is 0.661 (see `examples/tune_acceptance.rs`).
pub const DEFAULT_ACCEPT_HALFWIDTH_DEG: f64 = 8.19;

/// Detector geometry and response.
///
/// Physical dimensions are not modelled; the arms are described only by the
/// angular acceptances they imply. The NaI resolution, the noise level and the
/// counter width are assumptions, not measured values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub mode: Mode,
    pub prescatter_arm: PrescatterArm,
    pub prescatter_interaction_prob: f64,
    /// Ideal mode only: pre-scattering angles are drawn from Klein–Nishina
    /// restricted to this range; equal bounds force the angle.
    pub prescatter_theta_range_deg: [f64; 2],
    /// Realistic mode only: largest forward angle that still reaches the main scatterer.
    pub prescatter_forward_max_deg: f64,
    /// Realistic mode only: smallest backward angle that reaches the main scatterer.
    pub prescatter_backward_min_deg: f64,
    pub counter_count: u32,
    pub counter_azimuth_step_deg: f64,
    /// Realistic mode only: angular half-size of each counter.
    pub counter_halfwidth_deg: f64,
    /// Main-scatterer polar-angle window. Realistic mode rejects photons
    /// outside it; ideal mode samples inside it; `None` accepts 4π.
    pub main_scatter_theta_accept_deg: Option<Window>,
    /// `Δθ/θ` of the pre-scatterer at 30 keV, scaling as `1/√E`.
    pub gagg_resolution_coeff: f64,
    /// Gaussian electronic noise on the pre-scatterer deposit.
    pub gagg_noise_kev: f64,
    /// Relative counter resolution at 511 keV, scaling as `1/√E`.
    pub nai_resolution_at_511: f64,
    /// Relative main-scatterer resolution at 511 keV, scaling as `1/√E`.
    pub main_resolution_at_511: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Realistic,
            prescatter_arm: PrescatterArm::Random,
            prescatter_interaction_prob: 0.3,
            prescatter_theta_range_deg: [0.0, 180.0],
            prescatter_forward_max_deg: 35.0,
            prescatter_backward_min_deg: 160.0,
            counter_count: 16,
            counter_azimuth_step_deg: 22.5,
            counter_halfwidth_deg: 8.0,
            main_scatter_theta_accept_deg: Some(Window {
                center: 90.0,
                halfwidth: DEFAULT_ACCEPT_HALFWIDTH_DEG,
            }),
            gagg_resolution_coeff: crate::physics::DEFAULT_GAGG_COEFF,
            gagg_noise_kev: 2.0,
            nai_resolution_at_511: 0.10,
            main_resolution_at_511: 0.0,
        }
    }
}

impl GeometryConfig {
    pub fn ideal() -> Self {
        Self { mode: Mode::Ideal, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.prescatter_interaction_prob;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config("geometry.prescatter_interaction_prob", "must lie in [0, 1]"));
        }
        let [lo, hi] = self.prescatter_theta_range_deg;
        if !(0.0 <= lo && lo <= hi && hi <= 180.0) {
            return Err(Error::config(
                "geometry.prescatter_theta_range_deg",
                "must satisfy 0 <= low <= high <= 180",
            ));
        }
        if !(0.0 < self.prescatter_forward_max_deg
            && self.prescatter_forward_max_deg < self.prescatter_backward_min_deg
            && self.prescatter_backward_min_deg < 180.0)
        {
            return Err(Error::config(
                "geometry.prescatter_forward_max_deg",
                "need 0 < forward_max < backward_min < 180",
            ));
        }
        if self.counter_count == 0 {
            return Err(Error::config("geometry.counter_count", "must be positive"));
        }
        let span = self.counter_count as f64 * self.counter_azimuth_step_deg;
        if (span - 360.0).abs() > 1e-9 {
            return Err(Error::config(
                "geometry.counter_azimuth_step_deg",
                format!("counter_count × step must be 360°, got {span}°"),
            ));
        }
        if !(self.counter_halfwidth_deg > 0.0
            && self.counter_halfwidth_deg <= 0.5 * self.counter_azimuth_step_deg)
        {
            return Err(Error::config(
                "geometry.counter_halfwidth_deg",
                "must be positive and at most half the counter step",
            ));
        }
        if let Some(w) = self.main_scatter_theta_accept_deg {
            let (lo, hi) = w.bounds_rad();
            if !(w.halfwidth > 0.0 && hi > lo) {
                return Err(Error::config(
                    "geometry.main_scatter_theta_accept_deg",
                    "window must be non-empty",
                ));
            }
        }
        for (path, v) in [
            ("geometry.gagg_resolution_coeff", self.gagg_resolution_coeff),
            ("geometry.gagg_noise_kev", self.gagg_noise_kev),
            ("geometry.nai_resolution_at_511", self.nai_resolution_at_511),
            ("geometry.main_resolution_at_511", self.main_resolution_at_511),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(path, "must be a non-negative number"));
            }
        }
        Ok(())
    }

    pub fn counter_step(&self) -> f64 {
        self.counter_azimuth_step_deg.to_radians()
    }

    /// Factor by which azimuthal quantization into counters shrinks a
    /// `cos 2Δφ` modulation in the counter-pair histogram.
    ///
    /// Each arm averages `cos 2φ` over the azimuths a counter collects:
    /// a full segment of width `step` in ideal mode, `±halfwidth` in realistic
    /// mode. The two arms are independent, so the factor is squared.
    pub fn modulation_response(&self) -> f64 {
        let width = match self.mode {
            Mode::Ideal => self.counter_step(),
            Mode::Realistic => 2.0 * self.counter_halfwidth_deg.to_radians(),
        };
        let single = if width > 0.0 { width.sin() / width } else { 1.0 };
        single * single
    }
}
