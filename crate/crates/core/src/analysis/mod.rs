//! Azimuthal histograms, visibility fits and concurrence extraction.

mod concurrence;
mod fit;
mod histogram;

use std::io::Write;

pub use concurrence::{
    concurrence_curve, extract_concurrence, mean_analyzing_power, Analyzer, ClassAccumulator,
    ConcurrencePoint, Estimate, Side, LOW_STATISTICS, MIN_ANALYZING_PRODUCT,
};
pub use fit::{build_s_function, fit, fit_chsh, fit_direct, FitMethod, FitResult, SCurve, SSample};
pub use histogram::AngleHistogram;

use crate::io::fmt_sig;

pub const CONCURRENCE_CSV_HEADER: &str =
    "class,theta_low_deg,theta_high_deg,theta_mean_deg,nu,sigma_nu,chi2_ndf,a_bar_a,a_bar_b,c,sigma_c,events,low_statistics";

pub fn write_concurrence_csv<W: Write>(points: &[ConcurrencePoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CONCURRENCE_CSV_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.class.label(),
            fmt_sig(p.theta_bin.0.to_degrees()),
            fmt_sig(p.theta_bin.1.to_degrees()),
            fmt_sig(p.theta_mean.to_degrees()),
            fmt_sig(p.nu.nu),
            fmt_sig(p.nu.sigma_nu),
            fmt_sig(p.nu.chi2_ndf),
            fmt_sig(p.mean_a_a.value),
            fmt_sig(p.mean_a_b.value),
            fmt_sig(p.c),
            fmt_sig(p.sigma_c),
            p.events,
            p.low_statistics,
        )?;
    }
    Ok(())
}

pub fn write_histogram_csv<W: Write>(h: &AngleHistogram, mut w: W) -> std::io::Result<()> {
    writeln!(w, "phi_deg,count")?;
    for (phi, c) in h.bin_centers.iter().zip(&h.counts) {
        writeln!(w, "{},{}", fmt_sig(phi.to_degrees()), fmt_sig(*c))?;
    }
    Ok(())
}
