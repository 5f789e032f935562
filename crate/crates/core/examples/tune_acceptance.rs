//! Derives the default main-scatterer window: the halfwidth δ of `90° ± δ`
//! for which the Klein–Nishina-weighted mean analyzing power of 511 keV
//! photons is 0.661.
//!
//!     cargo run -p polcorr --example tune_acceptance [target]

use polcorr::physics::{Compton, LinearPolarization, ELECTRON_MASS_KEV as M};
use polcorr::quadrature::GaussLegendre;

fn mean_analyzing_power(halfwidth_deg: f64) -> f64 {
    let c = Compton::STANDARD;
    let gl = GaussLegendre::new(16);
    let (lo, hi) = ((90.0 - halfwidth_deg).to_radians(), (90.0 + halfwidth_deg).to_radians());
    // unpolarized weight; the azimuthal average of the polarized one is the same
    let w = |t: f64| c.klein_nishina_weight(M, t, 0.0, LinearPolarization::unpolarized()) * t.sin();
    let num = gl.integrate(|t| w(t) * c.analyzing_power(M, t), lo, hi, 64);
    let den = gl.integrate(w, lo, hi, 64);
    num / den
}

fn main() {
    let target: f64 = std::env::args().nth(1).map_or(0.661, |s| s.parse().expect("target"));
    println!("halfwidth_deg,mean_a");
    for h in [1.0, 5.0, 10.0, 15.0, 20.0, 30.0] {
        println!("{h},{:.6}", mean_analyzing_power(h));
    }
    // mean A falls monotonically once the window reaches past the maximum
    let (mut lo, mut hi) = (1.0, 60.0);
    if (mean_analyzing_power(lo) - target) * (mean_analyzing_power(hi) - target) > 0.0 {
        eprintln!("target {target} not bracketed by halfwidths [{lo}, {hi}]");
        std::process::exit(1);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if (mean_analyzing_power(mid) - target) * (mean_analyzing_power(lo) - target) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = 0.5 * (lo + hi);
    println!("target {target}: halfwidth {h:.4}° (mean A at 8.19° = {:.5})", mean_analyzing_power(8.19));
}
