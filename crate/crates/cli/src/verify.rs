//! Analytic oracle suite behind `polcorr verify`.

use std::f64::consts::{FRAC_PI_2, PI};

use polcorr::entanglement::{
    classical_integrals, classical_integrals_closed_form, factorization_grid, ThreeComptonModel,
};
use polcorr::physics::{Compton, LinearPolarization, ELECTRON_MASS_KEV as M};

use crate::FACTORIZATION_TOLERANCE;

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn result(name: &'static str, pass: bool, detail: String) -> OracleResult {
    OracleResult { name, pass, detail }
}

pub fn run_all() -> Vec<OracleResult> {
    vec![
        analyzing_power_from_cross_section(),
        analyzing_power_maximum(),
        transition_probability_limits(),
        concurrence_endpoints(),
        factorization(),
        classical_closed_form(),
        perturbed_electron_mass(),
        mutation_sensitivity(),
    ]
}

fn energies(n: usize) -> impl Iterator<Item = f64> {
    // log-spaced over [0.05, 5]·m_e
    (0..n).map(move |i| M * 0.05 * 100f64.powf(i as f64 / (n - 1) as f64))
}

/// A from its definition `(N⊥ − N∥)/(N⊥ + N∥)` with Klein–Nishina counts.
pub fn analyzing_power_from_cross_section() -> OracleResult {
    let c = Compton::STANDARD;
    let pol = LinearPolarization::fully(0.0);
    let mut worst = 0f64;
    for e in energies(7) {
        for deg in 1..180 {
            let t = (deg as f64).to_radians();
            let perp = c.klein_nishina_weight(e, t, FRAC_PI_2, pol);
            let par = c.klein_nishina_weight(e, t, 0.0, pol);
            worst = worst.max(((perp - par) / (perp + par) - c.analyzing_power(e, t)).abs());
        }
    }
    result("analyzing_power_definition", worst < 1e-12, format!("max |ΔA| = {worst:.2e}"))
}

/// Golden-section search for the maximum of `A(511 keV, θ)`.
pub fn analyzing_power_argmax(c: &Compton, e: f64) -> (f64, f64) {
    let f = |t: f64| c.analyzing_power(e, t);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.1, PI - 0.1);
    for _ in 0..200 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) < f(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

pub fn analyzing_power_maximum() -> OracleResult {
    let c = Compton::STANDARD;
    let (t, a) = analyzing_power_argmax(&c, M);
    let at90 = c.analyzing_power(M, FRAC_PI_2);
    let pass = (t.to_degrees() - 82.0).abs() <= 0.5 && (a - 0.69).abs() <= 0.005 && (at90 - 2.0 / 3.0).abs() < 1e-15;
    result(
        "analyzing_power_maximum",
        pass,
        format!("argmax {:.3}°, max {a:.5}, A(90°) = {at90:.15}", t.to_degrees()),
    )
}

pub fn transition_probability_limits() -> OracleResult {
    let c = Compton::STANDARD;
    let fwd = c.transition_probabilities(M, 0.0);
    let right = c.transition_probabilities(M, FRAC_PI_2);
    // E → 0 makes γ → 2, so both flips vanish at every angle
    let soft = (1..180)
        .map(|d| c.transition_probabilities(1e-6 * M, (d as f64).to_radians()))
        .map(|t| t.p_v_to_h.abs().max(t.p_h_to_v.abs()))
        .fold(0.0, f64::max);
    let pass = fwd.p_v_to_h.abs() < 1e-15
        && fwd.p_h_to_v.abs() < 1e-15
        && (right.p_v_to_h - 0.1).abs() < 1e-12
        && (right.p_h_to_v - 1.0 / 6.0).abs() < 1e-12
        && soft < 1e-5;
    result(
        "transition_probabilities",
        pass,
        format!(
            "θ=0: ({:.1e}, {:.1e}); 90°: ({:.12}, {:.12}); soft-photon max {soft:.1e}",
            fwd.p_v_to_h, fwd.p_h_to_v, right.p_v_to_h, right.p_h_to_v
        ),
    )
}

/// `C(E, 0) = 1` and `C(E, π) = 2/γ(π)` for both concurrence models.
pub fn endpoint_error(c: &Compton) -> f64 {
    let mut worst = 0f64;
    for e in energies(20) {
        let back = 2.0 / c.gamma_at(e, PI);
        for v in [c.concurrence_qft(e, 0.0) - 1.0, c.concurrence_pure_model(e, 0.0) - 1.0] {
            worst = worst.max(v.abs());
        }
        for v in [c.concurrence_qft(e, PI) - back, c.concurrence_pure_model(e, PI) - back] {
            worst = worst.max(v.abs());
        }
    }
    worst
}

pub fn concurrence_endpoints() -> OracleResult {
    let c = Compton::STANDARD;
    let worst = endpoint_error(&c);
    let back = c.concurrence_qft(M, PI);
    let pass = worst < 1e-12 && (back - 0.6).abs() < 1e-12;
    result("concurrence_endpoints", pass, format!("max error {worst:.2e}, C(m_e, π) = {back:.15}"))
}

/// Worst residual of the factorization identity over the oracle grid.
pub fn factorization_worst(model: &ThreeComptonModel) -> polcorr::Result<f64> {
    let mut worst = 0f64;
    for cfg in factorization_grid(100, 1) {
        worst = worst.max(model.factorization(&cfg)?.max_residual());
    }
    Ok(worst)
}

pub fn factorization() -> OracleResult {
    match factorization_worst(&ThreeComptonModel::default()) {
        Ok(w) => result(
            "factorization",
            w < FACTORIZATION_TOLERANCE,
            format!("100 configurations, max residual {w:.2e}"),
        ),
        Err(e) => result("factorization", false, e.to_string()),
    }
}

pub fn classical_closed_form() -> OracleResult {
    let c = Compton::STANDARD;
    let mut worst = 0f64;
    for i in 0..10 {
        let ta = (10.0 + 17.0 * i as f64).to_radians();
        let tb = (170.0 - 13.0 * i as f64).to_radians();
        let (ea, eb) = (M * (0.1 + 0.4 * i as f64), M * (3.0 - 0.25 * i as f64));
        let q = match classical_integrals(&c, ta, tb, ea, eb) {
            Ok(q) => q,
            Err(e) => return result("classical_integrals", false, e.to_string()),
        };
        let (diff, sum) = classical_integrals_closed_form(&c, ta, tb, ea, eb);
        worst = worst.max((q.p_perp - q.p_par - diff).abs()).max((q.p_perp + q.p_par - sum).abs());
    }
    result("classical_integrals", worst < 1e-10, format!("10 points, max error {worst:.2e}"))
}

/// With m_e shifted by 1 keV the chained kinematics stay self-consistent, so
/// factorization still holds, while the backward endpoint moves off 0.6.
pub fn perturbed_electron_mass() -> OracleResult {
    let c = Compton::with_electron_mass(M + 1.0);
    let model = ThreeComptonModel::with_compton(c);
    let back = c.concurrence_qft(M, PI);
    match factorization_worst(&model) {
        Ok(w) => {
            let shift = (back - 0.6).abs();
            result(
                "perturbed_electron_mass",
                w < FACTORIZATION_TOLERANCE && shift > 1e-4 && endpoint_error(&c) < 1e-12,
                format!("residual {w:.2e}, C(511 keV, π) = {back:.6} (shift {shift:.1e})"),
            )
        }
        Err(e) => result("perturbed_electron_mass", false, e.to_string()),
    }
}

/// Breaking the model on purpose must break the factorization oracle.
pub fn mutation_sensitivity() -> OracleResult {
    let flipped_sign = ThreeComptonModel { interference_sign: 1.0, ..Default::default() };
    let flipped_d = ThreeComptonModel { d_term_coeff: -0.5, ..Default::default() };
    let (a, b) = match (factorization_worst(&flipped_sign), factorization_worst(&flipped_d)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return result("mutation_sensitivity", false, e.to_string()),
    };
    result(
        "mutation_sensitivity",
        a >= FACTORIZATION_TOLERANCE && b >= FACTORIZATION_TOLERANCE,
        format!("cosθ sign flip residual {a:.2e}, sin²θ term flip residual {b:.2e}"),
    )
}
