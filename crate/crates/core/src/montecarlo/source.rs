use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SourceConfig;
use crate::physics::{LinearPolarization, PhotonState};

/// Independent random stream `(seed, stream_id)`.
///
/// Each simulation chunk uses its index as the stream id, so every variate is
/// a function of the seed, the chunk and the draw position alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// A back-to-back pair with random, mutually orthogonal linear polarizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSample {
    /// Moves along `+z`, basis `(x̂, ŷ)`.
    pub photon_a: PhotonState,
    /// Moves along `−z`, basis `(x̂, −ŷ)`.
    pub photon_b: PhotonState,
    /// Lab polarization angle of photon `b`, measured from `x̂` towards `ŷ`.
    pub psi_b: f64,
}

/// Draws `ψ_b` uniformly on `[0, π)`; photon `a` is polarized at `ψ_b + 90°`.
pub fn generate_pair<R: Rng + ?Sized>(src: &SourceConfig, rng: &mut R) -> PairSample {
    let psi_b = PI * rng.random::<f64>();
    let psi_a = psi_b + FRAC_PI_2;
    // photon b's basis mirrors the lab y axis, so its frame angle is −ψ_b
    PairSample {
        photon_a: PhotonState::along_plus_z(src.energy_kev, LinearPolarization::fully(psi_a)),
        photon_b: PhotonState::along_minus_z(src.energy_kev, LinearPolarization::fully(-psi_b)),
        psi_b,
    }
}
