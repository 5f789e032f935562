//! Event records, classification by reconstructed pre-scattering angle, and
//! the azimuthal angle between the triggered counters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::GeometryConfig;
use crate::physics::{Compton, ELECTRON_MASS_KEV};
use crate::quadrature::GaussLegendre;

/// One detected (or lost) photon pair. Energies in keV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub event_id: u64,
    pub de_pre_a: f64,
    pub de_pre_b: f64,
    pub e_main_a: f64,
    pub e_main_b: f64,
    pub counter_a: u32,
    pub counter_b: u32,
    pub e_counter_a: f64,
    pub e_counter_b: f64,
    /// The pair missed the detector acceptance; kept only for efficiency accounting.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lost: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
}

/// Generator-level information. Never read by classification or analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub prescatter_theta: Option<f64>,
    pub prescatter_phi: Option<f64>,
    pub which_arm: Option<ScatteredArm>,
    pub theta_a: f64,
    pub theta_b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScatteredArm {
    A,
    B,
    Both,
}

impl EventRecord {
    pub fn de_pre(&self, arm: Arm) -> f64 {
        match arm {
            Arm::A => self.de_pre_a,
            Arm::B => self.de_pre_b,
        }
    }

    pub fn e_main(&self, arm: Arm) -> f64 {
        match arm {
            Arm::A => self.e_main_a,
            Arm::B => self.e_main_b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassTag {
    Direct,
    PreScattered(usize),
    Backscatter,
    Rejected,
}

impl ClassTag {
    pub fn label(&self) -> String {
        match self {
            ClassTag::Direct => "direct".into(),
            ClassTag::PreScattered(k) => format!("forward{k}"),
            ClassTag::Backscatter => "backscatter".into(),
            ClassTag::Rejected => "rejected".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventClass {
    pub tag: ClassTag,
    /// Arm whose pre-scatterer fired, if exactly one did.
    pub scattered_arm: Option<Arm>,
    pub reconstructed_theta: Option<f64>,
}

impl EventClass {
    fn simple(tag: ClassTag) -> Self {
        Self { tag, scattered_arm: None, reconstructed_theta: None }
    }
}

/// Partition of reconstructed pre-scattering angles into analysis classes.
/// Angles in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinningScheme {
    pub noise_threshold_kev: f64,
    /// Ascending bin edges; `n + 1` edges define `n` pre-scattered bins.
    pub forward_edges_deg: Vec<f64>,
    pub backscatter_window_deg: Option<[f64; 2]>,
}

pub const DEFAULT_NOISE_THRESHOLD_KEV: f64 = 10.0;
pub const DEFAULT_FORWARD_MAX_DEG: f64 = 35.0;
pub const DEFAULT_FORWARD_BINS: usize = 5;
pub const DEFAULT_BACKSCATTER_WINDOW_DEG: [f64; 2] = [160.0, 180.0];

impl Default for BinningScheme {
    /// Five forward bins of equal Klein–Nishina probability at 511 keV between
    /// the threshold angle and 35°, plus the 160°–180° backscatter bin.
    fn default() -> Self {
        Self::klein_nishina(&Compton::STANDARD, ELECTRON_MASS_KEV, DEFAULT_NOISE_THRESHOLD_KEV)
            .expect("default binning is well defined")
    }
}

impl BinningScheme {
    /// Default layout for a given source energy and noise threshold.
    pub fn klein_nishina(compton: &Compton, e_in: f64, noise_threshold_kev: f64) -> Result<Self> {
        let lo = compton.theta_from_deposit(e_in, noise_threshold_kev)?.to_degrees();
        let cdf = klein_nishina_cdf(compton, e_in);
        default_binning(
            ThetaDistribution::Cdf(&|deg: f64| cdf(deg.to_radians())),
            (lo, DEFAULT_FORWARD_MAX_DEG),
            DEFAULT_FORWARD_BINS,
        )
        .map(|edges| Self {
            noise_threshold_kev,
            forward_edges_deg: edges,
            backscatter_window_deg: Some(DEFAULT_BACKSCATTER_WINDOW_DEG),
        })
    }

    /// `bins` equal-width bins over `[lo, hi]` degrees, no backscatter window.
    pub fn uniform(noise_threshold_kev: f64, lo: f64, hi: f64, bins: usize) -> Self {
        let edges = (0..=bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect();
        Self { noise_threshold_kev, forward_edges_deg: edges, backscatter_window_deg: None }
    }

    pub fn forward_bins(&self) -> usize {
        self.forward_edges_deg.len().saturating_sub(1)
    }

    /// Angular range of a class in radians.
    pub fn bin_range(&self, tag: ClassTag) -> Option<(f64, f64)> {
        match tag {
            ClassTag::Direct => Some((0.0, 0.0)),
            ClassTag::PreScattered(k) if k < self.forward_bins() => Some((
                self.forward_edges_deg[k].to_radians(),
                self.forward_edges_deg[k + 1].to_radians(),
            )),
            ClassTag::Backscatter => self.backscatter_window_deg.map(|[l, h]| (l.to_radians(), h.to_radians())),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_threshold_kev >= 0.0 && self.noise_threshold_kev.is_finite()) {
            return Err(Error::config("binning.noise_threshold_kev", "must be a non-negative number"));
        }
        let e = &self.forward_edges_deg;
        if e.len() == 1 || e.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config(
                "binning.forward_edges_deg",
                "need at least two strictly ascending edges (or none)",
            ));
        }
        if e.iter().any(|x| !(0.0..=180.0).contains(x)) {
            return Err(Error::config("binning.forward_edges_deg", "edges must lie in [0, 180]"));
        }
        if let Some([l, h]) = self.backscatter_window_deg {
            if !(l < h && (0.0..=180.0).contains(&l) && h <= 180.0) {
                return Err(Error::config("binning.backscatter_window_deg", "need low < high within [0, 180]"));
            }
        }
        Ok(())
    }

    /// Class tag of a reconstructed angle (radians).
    pub fn tag_for_theta(&self, theta: f64) -> ClassTag {
        let deg = theta.to_degrees();
        let e = &self.forward_edges_deg;
        if let (Some(&first), Some(&last)) = (e.first(), e.last()) {
            if deg >= first && deg <= last {
                let k = e.partition_point(|&edge| edge <= deg).saturating_sub(1);
                return ClassTag::PreScattered(k.min(self.forward_bins() - 1));
            }
        }
        match self.backscatter_window_deg {
            Some([l, h]) if deg >= l && deg <= h => ClassTag::Backscatter,
            _ => ClassTag::Rejected,
        }
    }
}

/// Classifies records by their measured pre-scatterer deposits.
#[derive(Clone, Debug)]
pub struct Classifier {
    pub scheme: BinningScheme,
    pub source_energy: f64,
    pub compton: Compton,
}

impl Classifier {
    pub fn new(scheme: BinningScheme, source_energy: f64) -> Self {
        Self { scheme, source_energy, compton: Compton::STANDARD }
    }

    pub fn classify(&self, rec: &EventRecord) -> EventClass {
        if rec.lost {
            return EventClass::simple(ClassTag::Rejected);
        }
        let thr = self.scheme.noise_threshold_kev;
        let arm = match (rec.de_pre_a > thr, rec.de_pre_b > thr) {
            (false, false) => return EventClass::simple(ClassTag::Direct),
            (true, true) => return EventClass::simple(ClassTag::Rejected),
            (true, false) => Arm::A,
            (false, true) => Arm::B,
        };
        match self.compton.theta_from_deposit(self.source_energy, rec.de_pre(arm)) {
            Ok(theta) => EventClass {
                tag: self.scheme.tag_for_theta(theta),
                scattered_arm: Some(arm),
                reconstructed_theta: Some(theta),
            },
            Err(_) => EventClass { tag: ClassTag::Rejected, scattered_arm: Some(arm), reconstructed_theta: None },
        }
    }
}

/// Classification with 511 keV photons.
pub fn classify(rec: &EventRecord, scheme: &BinningScheme) -> EventClass {
    Classifier::new(scheme.clone(), ELECTRON_MASS_KEV).classify(rec)
}

/// Index of the folded counter separation, `0..=counter_count/2`.
pub fn folded_separation(rec: &EventRecord, counter_count: u32) -> u32 {
    let n = counter_count;
    let d = (rec.counter_b + n - rec.counter_a % n) % n;
    d.min(n - d)
}

/// Azimuthal angle between the triggered counters, folded to `[0, π]`.
/// `None` for rejected events.
///
/// Counter indices already follow each arm's orientation convention (the
/// generator labels a backscattered photon in the lab-oriented frame), so the
/// same difference applies to forward and backward classes.
pub fn azimuthal_angle(rec: &EventRecord, cls: &EventClass, geom: &GeometryConfig) -> Option<f64> {
    if cls.tag == ClassTag::Rejected {
        return None;
    }
    Some(folded_separation(rec, geom.counter_count) as f64 * geom.counter_step())
}

/// Source of the pre-scattering angle distribution used to place bin edges.
pub enum ThetaDistribution<'a> {
    /// Sampled angles in degrees.
    Samples(&'a [f64]),
    /// Monotone, not necessarily normalized, cumulative distribution in degrees.
    Cdf(&'a dyn Fn(f64) -> f64),
}

/// Edges splitting `range` (degrees) into `bins` bins of equal probability.
pub fn default_binning(dist: ThetaDistribution<'_>, range: (f64, f64), bins: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if bins == 0 || !(lo < hi) {
        return Err(Error::Empty(format!("no bins in [{lo}, {hi}]")));
    }
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(lo);
    match dist {
        ThetaDistribution::Samples(samples) => {
            let mut inside: Vec<f64> = samples.iter().copied().filter(|&t| t > lo && t <= hi).collect();
            if inside.is_empty() {
                return Err(Error::Empty(format!("no samples in ({lo}, {hi}]")));
            }
            inside.sort_by(f64::total_cmp);
            for k in 1..bins {
                edges.push(quantile_sorted(&inside, k as f64 / bins as f64));
            }
        }
        ThetaDistribution::Cdf(cdf) => {
            let (f_lo, f_hi) = (cdf(lo), cdf(hi));
            if !(f_hi > f_lo) {
                return Err(Error::Empty(format!("zero probability in ({lo}, {hi}]")));
            }
            for k in 1..bins {
                let target = f_lo + (f_hi - f_lo) * k as f64 / bins as f64;
                edges.push(bisect(|x| cdf(x) - target, lo, hi));
            }
        }
    }
    edges.push(hi);
    if edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Empty("distribution too concentrated for distinct edges".into()));
    }
    Ok(edges)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (sorted[j] - sorted[i]) * (pos - i as f64)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Unnormalized cumulative Klein–Nishina polar-angle distribution
/// `∫₀^θ ε²(γ − sin²θ') sin θ' dθ'` for unpolarized photons.
pub fn klein_nishina_cdf(compton: &Compton, e_in: f64) -> impl Fn(f64) -> f64 {
    let rule = GaussLegendre::new(16);
    let c = *compton;
    move |theta: f64| {
        let density = |t: f64| {
            let eps = c.scattered_energy(e_in, t) / e_in;
            eps * eps * (eps + 1.0 / eps - t.sin().powi(2)) * t.sin()
        };
        rule.integrate(density, 0.0, theta, 8)
    }
}
