use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{fit, AngleHistogram, FitMethod, FitResult};
use crate::error::{Error, Result};
use crate::events::{folded_separation, Arm, ClassTag, Classifier, EventClass, EventRecord};
use crate::montecarlo::GeometryConfig;

/// Classes with fewer events than this are flagged.
pub const LOW_STATISTICS: u64 = 100;

/// Below this `Ā_a·Ā_b` the extraction is refused.
pub const MIN_ANALYZING_PRODUCT: f64 = 1e-6;

/// A value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }
}

/// Which polarimeter of an event: the one behind the pre-scatterer that fired
/// (relabelled `a`), or the other one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Scattered,
    Unscattered,
}

/// `C = ν / (Ā_a Ā_b)`, with the uncertainties of `ν` and of both means
/// combined in quadrature.
pub fn extract_concurrence(fit: &FitResult, a_a: Estimate, a_b: Estimate) -> Result<Estimate> {
    let product = a_a.value * a_b.value;
    if !(product.abs() >= MIN_ANALYZING_PRODUCT) {
        return Err(Error::IllConditioned { product });
    }
    let c = fit.nu / product;
    let rel2 = (a_a.sigma / a_a.value).powi(2) + (a_b.sigma / a_b.value).powi(2);
    let sigma = ((fit.sigma_nu / product).powi(2) + c * c * rel2).sqrt();
    Ok(Estimate { value: c, sigma })
}

/// Running mean and sum of squared deviations (Welford; Chan et al. merge).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    fn estimate(&self) -> Option<Estimate> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        let var = if self.n > 1 { self.m2 / (n - 1.0) } else { 0.0 };
        Some(Estimate { value: self.mean, sigma: (var / n).sqrt() })
    }
}

/// Per-class sums: azimuthal histogram, analyzing powers, reconstructed angle.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassAccumulator {
    pub histogram: AngleHistogram,
    a_scattered: Moments,
    a_unscattered: Moments,
    theta: Moments,
}

impl ClassAccumulator {
    fn new(geom: &GeometryConfig) -> Self {
        Self {
            histogram: AngleHistogram::for_geometry(geom),
            a_scattered: Moments::default(),
            a_unscattered: Moments::default(),
            theta: Moments::default(),
        }
    }

    pub fn events(&self) -> u64 {
        self.a_scattered.n
    }

    pub fn mean_analyzing_power(&self, side: Side) -> Option<Estimate> {
        match side {
            Side::Scattered => self.a_scattered.estimate(),
            Side::Unscattered => self.a_unscattered.estimate(),
        }
    }

    pub fn mean_theta(&self) -> Option<f64> {
        self.theta.estimate().map(|e| e.value)
    }

    fn merge(&mut self, o: &ClassAccumulator) {
        self.histogram.merge(&o.histogram);
        self.a_scattered.merge(&o.a_scattered);
        self.a_unscattered.merge(&o.a_unscattered);
        self.theta.merge(&o.theta);
    }
}

/// One point of the extracted concurrence curve.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcurrencePoint {
    pub class: ClassTag,
    /// Radians; `(0, 0)` for the direct class.
    pub theta_bin: (f64, f64),
    pub theta_mean: f64,
    pub c: f64,
    pub sigma_c: f64,
    pub mean_a_a: Estimate,
    pub mean_a_b: Estimate,
    pub nu: FitResult,
    pub events: u64,
    pub low_statistics: bool,
}

/// Streams classified events into per-class accumulators.
#[derive(Clone, Debug)]
pub struct Analyzer {
    pub classifier: Classifier,
    pub geometry: GeometryConfig,
    classes: BTreeMap<ClassTag, ClassAccumulator>,
    pub total: u64,
}

impl Analyzer {
    pub fn new(classifier: Classifier, geometry: GeometryConfig) -> Self {
        Self { classifier, geometry, classes: BTreeMap::new(), total: 0 }
    }

    /// Analyzing power of one arm from its measured energies: the incident
    /// energy is the source energy minus any pre-scatterer deposit, the final
    /// energy is that minus the main-scatterer deposit.
    pub fn analyzing_power(&self, rec: &EventRecord, arm: Arm, scattered: bool) -> f64 {
        let e0 = self.classifier.source_energy;
        let e_in = if scattered { e0 - rec.de_pre(arm) } else { e0 };
        let e_out = e_in - rec.e_main(arm);
        self.classifier.compton.analyzing_power_from_energies(e_in, e_out)
    }

    pub fn add(&mut self, rec: &EventRecord) {
        let cls = self.classifier.classify(rec);
        self.add_classified(rec, &cls);
    }

    pub fn add_classified(&mut self, rec: &EventRecord, cls: &EventClass) {
        self.total += 1;
        if cls.tag == ClassTag::Rejected {
            return;
        }
        let (a, b) = match cls.scattered_arm {
            Some(Arm::B) => (Arm::B, Arm::A),
            _ => (Arm::A, Arm::B),
        };
        let scattered = cls.scattered_arm.is_some();
        let aa = self.analyzing_power(rec, a, scattered);
        let ab = self.analyzing_power(rec, b, false);
        let geom = &self.geometry;
        let acc = self.classes.entry(cls.tag).or_insert_with(|| ClassAccumulator::new(geom));
        acc.histogram.fill(folded_separation(rec, geom.counter_count) as usize);
        acc.a_scattered.push(aa);
        acc.a_unscattered.push(ab);
        acc.theta.push(cls.reconstructed_theta.unwrap_or(0.0));
    }

    /// Deterministic merge: callers combine partial analyzers in a fixed order.
    pub fn merge(&mut self, other: &Analyzer) {
        self.total += other.total;
        for (tag, acc) in &other.classes {
            match self.classes.get_mut(tag) {
                Some(mine) => mine.merge(acc),
                None => {
                    self.classes.insert(*tag, acc.clone());
                }
            }
        }
    }

    /// Analyzes a slice in parallel over fixed-size chunks merged in order.
    pub fn analyze(classifier: Classifier, geometry: GeometryConfig, records: &[EventRecord]) -> Self {
        let parts: Vec<Analyzer> = records
            .par_chunks(1 << 16)
            .map(|chunk| {
                let mut a = Analyzer::new(classifier.clone(), geometry.clone());
                chunk.iter().for_each(|r| a.add(r));
                a
            })
            .collect();
        let mut out = Analyzer::new(classifier, geometry);
        for p in &parts {
            out.merge(p);
        }
        out
    }

    pub fn class(&self, tag: ClassTag) -> Option<&ClassAccumulator> {
        self.classes.get(&tag)
    }

    pub fn classes(&self) -> impl Iterator<Item = (&ClassTag, &ClassAccumulator)> {
        self.classes.iter()
    }

    pub fn rejected(&self) -> u64 {
        self.total - self.classes.values().map(|c| c.events()).sum::<u64>()
    }

    pub fn point(&self, tag: ClassTag, method: FitMethod) -> Result<ConcurrencePoint> {
        let acc = self.classes.get(&tag).ok_or_else(|| Error::Empty(format!("class {}", tag.label())))?;
        let nu = fit(&acc.histogram, method)?;
        let a_a = acc.mean_analyzing_power(Side::Scattered).ok_or_else(|| Error::Empty(tag.label()))?;
        let a_b = acc.mean_analyzing_power(Side::Unscattered).ok_or_else(|| Error::Empty(tag.label()))?;
        let c = extract_concurrence(&nu, a_a, a_b)?;
        let events = acc.events();
        Ok(ConcurrencePoint {
            class: tag,
            theta_bin: self.classifier.scheme.bin_range(tag).unwrap_or((0.0, 0.0)),
            theta_mean: acc.mean_theta().unwrap_or(0.0),
            c: c.value,
            sigma_c: c.sigma,
            mean_a_a: a_a,
            mean_a_b: a_b,
            nu,
            events,
            low_statistics: events < LOW_STATISTICS,
        })
    }

    /// Direct point, one point per populated forward bin, and the backscatter
    /// point, in that order. Classes that are empty or cannot be fitted are
    /// skipped with a warning.
    pub fn concurrence_curve(&self, method: FitMethod) -> Vec<ConcurrencePoint> {
        let mut tags = vec![ClassTag::Direct];
        tags.extend((0..self.classifier.scheme.forward_bins()).map(ClassTag::PreScattered));
        tags.push(ClassTag::Backscatter);
        tags.into_iter()
            .filter(|t| self.classes.contains_key(t))
            .filter_map(|t| match self.point(t, method) {
                Ok(p) => {
                    if p.low_statistics {
                        log::warn!("class {} has only {} events", t.label(), p.events);
                    }
                    Some(p)
                }
                Err(e) => {
                    log::warn!("class {} omitted: {e}", t.label());
                    None
                }
            })
            .collect()
    }
}

/// Mean analyzing power of one side over the events whose class passes `filter`.
pub fn mean_analyzing_power(
    records: &[EventRecord],
    classifier: &Classifier,
    side: Side,
    filter: impl Fn(ClassTag) -> bool,
) -> Result<Estimate> {
    let analyzer = Analyzer::new(classifier.clone(), GeometryConfig::default());
    let mut m = Moments::default();
    for rec in records {
        let cls = classifier.classify(rec);
        if cls.tag == ClassTag::Rejected || !filter(cls.tag) {
            continue;
        }
        let scattered_arm = cls.scattered_arm.unwrap_or(Arm::A);
        let other = if scattered_arm == Arm::A { Arm::B } else { Arm::A };
        m.push(match side {
            Side::Scattered => analyzer.analyzing_power(rec, scattered_arm, cls.scattered_arm.is_some()),
            Side::Unscattered => analyzer.analyzing_power(rec, other, false),
        });
    }
    m.estimate().ok_or_else(|| Error::Empty("no events selected".into()))
}

/// Convenience pipeline: classify, accumulate, extract.
pub fn concurrence_curve(
    records: &[EventRecord],
    classifier: &Classifier,
    geometry: &GeometryConfig,
    method: FitMethod,
) -> Vec<ConcurrencePoint> {
    Analyzer::analyze(classifier.clone(), geometry.clone(), records).concurrence_curve(method)
}
