use crate::error::{Error, Result};
use crate::montecarlo::GeometryConfig;

/// Counts binned by the folded azimuthal angle between the two counters.
///
/// `multiplicity[k]` is the relative number of counter pairs that map to bin
/// `k` (1 at 0° and 180°, 2 elsewhere for a full ring), so `counts / multiplicity`
/// is proportional to the coincidence rate per counter pair.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleHistogram {
    pub bin_centers: Vec<f64>,
    pub counts: Vec<f64>,
    pub multiplicity: Vec<f64>,
    /// Factor by which the counters' finite azimuthal acceptance shrinks the
    /// `cos 2φ` amplitude; fits divide it out.
    pub modulation_response: f64,
}

impl AngleHistogram {
    /// Empty histogram for a ring of `geom.counter_count` counters.
    pub fn for_geometry(geom: &GeometryConfig) -> Self {
        let n = geom.counter_count as usize;
        let half = n / 2;
        let step = geom.counter_step();
        let multiplicity = (0..=half)
            .map(|k| if k == 0 || (n.is_multiple_of(2) && k == half) { 1.0 } else { 2.0 })
            .collect();
        Self {
            bin_centers: (0..=half).map(|k| k as f64 * step).collect(),
            counts: vec![0.0; half + 1],
            multiplicity,
            modulation_response: geom.modulation_response(),
        }
    }

    /// Histogram from explicit counts, unit multiplicities and no acceptance
    /// correction.
    pub fn from_counts(bin_centers: Vec<f64>, counts: Vec<f64>) -> Self {
        assert_eq!(bin_centers.len(), counts.len());
        let multiplicity = vec![1.0; counts.len()];
        Self { bin_centers, counts, multiplicity, modulation_response: 1.0 }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn fill(&mut self, bin: usize) {
        self.counts[bin] += 1.0;
    }

    pub fn merge(&mut self, other: &AngleHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { counts: self.counts.iter().map(|c| c * k).collect(), ..self.clone() }
    }

    /// Index of the bin centred at `angle` (radians), if any.
    pub fn bin_at(&self, angle: f64) -> Option<usize> {
        self.bin_centers.iter().position(|&c| (c - angle).abs() < 1e-9)
    }

    /// Counts per unit multiplicity.
    pub fn rate(&self, k: usize) -> f64 {
        self.counts[k] / self.multiplicity[k]
    }

    /// Poisson variance of [`rate`](Self::rate), using `max(count, 1)`.
    pub fn rate_variance(&self, k: usize) -> f64 {
        self.counts[k].max(1.0) / self.multiplicity[k].powi(2)
    }

    /// Ratio estimator `(N(90°) − N(0°)) / (N(90°) + N(0°))` on rates, corrected
    /// for the modulation response, with its Poisson error.
    pub fn contrast(&self) -> Result<(f64, f64)> {
        let i0 = self.bin_at(0.0).ok_or(Error::MissingBin { angle_deg: 0.0 })?;
        let i90 = self
            .bin_at(std::f64::consts::FRAC_PI_2)
            .ok_or(Error::MissingBin { angle_deg: 90.0 })?;
        let (r0, r90) = (self.rate(i0), self.rate(i90));
        let sum = r0 + r90;
        if sum <= 0.0 {
            return Err(Error::Empty("no counts at 0° and 90°".into()));
        }
        let k = self.modulation_response;
        let value = (r90 - r0) / sum / k;
        // ∂/∂r90 = 2 r0/sum², ∂/∂r0 = −2 r90/sum²
        let var = (2.0 * r0 / (sum * sum)).powi(2) * self.rate_variance(i90)
            + (2.0 * r90 / (sum * sum)).powi(2) * self.rate_variance(i0);
        Ok((value, var.sqrt() / k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_layout() {
        let h = AngleHistogram::for_geometry(&GeometryConfig::default());
        assert_eq!(h.len(), 9);
        assert!((h.bin_centers[8].to_degrees() - 180.0).abs() < 1e-12);
        assert_eq!(h.multiplicity, vec![1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 1.0]);
        assert_eq!(h.total(), 0.0);
        // 16 × 16 counter pairs
        assert_eq!(h.multiplicity.iter().sum::<f64>() * 16.0, 256.0);
    }

    #[test]
    fn contrast_of_exact_model() {
        let centers: Vec<f64> = (0..9).map(|k| (k as f64 * 22.5f64).to_radians()).collect();
        let counts = centers.iter().map(|p| 1000.0 * (1.0 - 0.3 * (2.0 * p).cos())).collect();
        let h = AngleHistogram::from_counts(centers, counts);
        let (c, s) = h.contrast().unwrap();
        assert!((c - 0.3).abs() < 1e-12);
        assert!(s > 0.0);
    }
}
