use serde::{Deserialize, Serialize};

use super::AngleHistogram;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    #[default]
    Direct,
    Chsh,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub nu: f64,
    /// Uncertainty under the method's own error model. For the CHSH fit each
    /// `S(φ)` point carries the Poisson error of its `N̄(φ)`, and the points are
    /// treated as independent.
    pub sigma_nu: f64,
    /// Uncertainty propagated linearly from the raw counts, including the
    /// correlations introduced by reusing bins and by the normalization.
    pub sigma_nu_correlated: f64,
    pub p0: f64,
    pub chi2_ndf: f64,
    pub method: FitMethod,
}

pub fn fit(hist: &AngleHistogram, method: FitMethod) -> Result<FitResult> {
    match method {
        FitMethod::Direct => fit_direct(hist),
        FitMethod::Chsh => fit_chsh(&build_s_function(hist)?),
    }
}

fn populated(hist: &AngleHistogram) -> usize {
    hist.counts.iter().filter(|&&c| c > 0.0).count()
}

/// Weighted least squares of `N(φ)/m = P₀ (1 − κν cos 2φ)` with Poisson
/// variances `max(N, 1)/m²`.
pub fn fit_direct(hist: &AngleHistogram) -> Result<FitResult> {
    if populated(hist) < 3 {
        return Err(Error::Fit(format!("need at least 3 populated bins, have {}", populated(hist))));
    }
    // normal equations for y = a + b x, x = cos 2φ
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..hist.len() {
        let w = 1.0 / hist.rate_variance(k);
        let x = (2.0 * hist.bin_centers[k]).cos();
        let y = hist.rate(k);
        s += w;
        sx += w * x;
        sxx += w * x * x;
        sy += w * y;
        sxy += w * x * y;
    }
    let det = s * sxx - sx * sx;
    if !(det.abs() > 1e-12 * s * sxx) {
        return Err(Error::Fit("degenerate design matrix".into()));
    }
    let a = (sxx * sy - sx * sxy) / det;
    let b = (s * sxy - sx * sy) / det;
    let (var_a, var_b, cov_ab) = (sxx / det, s / det, -sx / det);
    if a <= 0.0 {
        return Err(Error::Fit("non-positive normalization".into()));
    }
    let kappa = hist.modulation_response;
    let nu = -b / (a * kappa);
    let (da, db) = (b / (a * a * kappa), -1.0 / (a * kappa));
    let var_nu = da * da * var_a + db * db * var_b + 2.0 * da * db * cov_ab;
    let chi2: f64 = (0..hist.len())
        .map(|k| {
            let x = (2.0 * hist.bin_centers[k]).cos();
            (hist.rate(k) - a - b * x).powi(2) / hist.rate_variance(k)
        })
        .sum();
    let ndf = hist.len() as f64 - 2.0;
    let sigma = var_nu.max(0.0).sqrt();
    Ok(FitResult {
        nu,
        sigma_nu: sigma,
        sigma_nu_correlated: sigma,
        p0: a,
        chi2_ndf: if ndf > 0.0 { chi2 / ndf } else { 0.0 },
        method: FitMethod::Direct,
    })
}

/// One point of the S-function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SSample {
    pub phi: f64,
    /// `3N̄(φ) − N̄(3φ) − 2`
    pub s: f64,
    pub sigma: f64,
    /// Bin index of `φ` and of `3φ` (folded).
    pub bins: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SCurve {
    pub samples: Vec<SSample>,
    pub p0: f64,
    pub modulation_response: f64,
    /// `∂S_k/∂y_l` for the raw rates `y = N/m`.
    jacobian: Vec<Vec<f64>>,
    rate_variance: Vec<f64>,
}

/// Folds an angle (radians) into `[0, π]`.
fn fold(angle: f64) -> f64 {
    let x = angle.rem_euclid(std::f64::consts::TAU);
    x.min(std::f64::consts::TAU - x)
}

/// Builds `S(φ) = 3N̄(φ) − N̄(3φ) − 2` from normalized rates.
///
/// `N̄ = (N/m)/P̂₀`, where `P̂₀` is the trapezoid-weighted mean rate over the
/// folded range. The trapezoid weights make the mean of `cos 2φ` vanish, so for
/// `N ∝ 1 − ν cos 2φ` the normalized rates are exactly `1 − ν cos 2φ` and `S`
/// equals `ν (cos 6φ − 3 cos 2φ)`.
pub fn build_s_function(hist: &AngleHistogram) -> Result<SCurve> {
    let n = hist.len();
    if n < 2 {
        return Err(Error::Fit("histogram too small for an S-function".into()));
    }
    let t: Vec<f64> = (0..n).map(|k| if k == 0 || k == n - 1 { 1.0 } else { 2.0 }).collect();
    let t_sum: f64 = t.iter().sum();
    let y: Vec<f64> = (0..n).map(|k| hist.rate(k)).collect();
    let p0 = t.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / t_sum;
    if !(p0 > 0.0) {
        return Err(Error::Empty("histogram has no counts".into()));
    }
    let var: Vec<f64> = (0..n).map(|k| hist.rate_variance(k)).collect();
    // ∂N̄_i/∂y_l = δ_il/P̂₀ − y_i t_l /(P̂₀² Σt)
    let dnorm = |i: usize, l: usize| -> f64 {
        let d = if i == l { 1.0 / p0 } else { 0.0 };
        d - y[i] * t[l] / (p0 * p0 * t_sum)
    };
    let mut samples = Vec::with_capacity(n);
    let mut jacobian = Vec::with_capacity(n);
    for k in 0..n {
        let phi = hist.bin_centers[k];
        let j = hist
            .bin_at(fold(3.0 * phi))
            .ok_or(Error::MissingBin { angle_deg: fold(3.0 * phi).to_degrees() })?;
        let s = 3.0 * y[k] / p0 - y[j] / p0 - 2.0;
        samples.push(SSample { phi, s, sigma: var[k].sqrt() / p0, bins: (k, j) });
        jacobian.push((0..n).map(|l| 3.0 * dnorm(k, l) - dnorm(j, l)).collect());
    }
    Ok(SCurve {
        samples,
        p0,
        modulation_response: hist.modulation_response,
        jacobian,
        rate_variance: var,
    })
}

/// One-parameter weighted least squares of `S(φ) = κν (cos 6φ − 3 cos 2φ)`.
pub fn fit_chsh(curve: &SCurve) -> Result<FitResult> {
    let f = |phi: f64| (6.0 * phi).cos() - 3.0 * (2.0 * phi).cos();
    let (mut sff, mut sfs) = (0.0, 0.0);
    for p in &curve.samples {
        let w = 1.0 / (p.sigma * p.sigma);
        sff += w * f(p.phi).powi(2);
        sfs += w * f(p.phi) * p.s;
    }
    if curve.samples.len() < 2 || !(sff > 0.0) || !sff.is_finite() {
        return Err(Error::Fit("S-function carries no information on ν".into()));
    }
    let kappa = curve.modulation_response;
    let amp = sfs / sff;
    let chi2: f64 = curve
        .samples
        .iter()
        .map(|p| (p.s - amp * f(p.phi)).powi(2) / (p.sigma * p.sigma))
        .sum();
    // amp = Σ_k g_k S_k with g_k = w_k f_k / Σ w f²
    let g: Vec<f64> = curve
        .samples
        .iter()
        .map(|p| f(p.phi) / (p.sigma * p.sigma) / sff)
        .collect();
    let n = curve.rate_variance.len();
    let var_corr: f64 = (0..n)
        .map(|l| {
            let d: f64 = g.iter().zip(&curve.jacobian).map(|(gk, row)| gk * row[l]).sum();
            d * d * curve.rate_variance[l]
        })
        .sum();
    let ndf = curve.samples.len() as f64 - 1.0;
    Ok(FitResult {
        nu: amp / kappa,
        sigma_nu: (1.0 / sff).sqrt() / kappa,
        sigma_nu_correlated: var_corr.sqrt() / kappa,
        p0: curve.p0,
        chi2_ndf: if ndf > 0.0 { chi2 / ndf } else { 0.0 },
        method: FitMethod::Chsh,
    })
}
