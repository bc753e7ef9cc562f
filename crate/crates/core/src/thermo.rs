//! Closed-form thermodynamic limits of the cycle.

use serde::{Deserialize, Serialize};

use crate::cycle::CycleSpec;
use crate::error::{invalid, Result};

/// Largest heat extractable per cycle when the corners are thermal and the
/// demagnetization leaves a defect `delta`:
/// `2 Omega_c (exp(-Omega_c/T_c) - exp(-Omega_h/T_h) - delta/2)`.
pub fn q_c_max(gap_c: f64, gap_h: f64, t_c: f64, t_h: f64, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(invalid("delta", "must be >= 0"));
    }
    Ok(2.0 * gap_c * ((-gap_c / t_c).exp() - (-gap_h / t_h).exp() - 0.5 * delta))
}

/// Lowest cold-bath temperature reachable with defect `delta` when
/// `omega_h >> J`: `J / -ln(delta / 2)`.
pub fn min_temperature(j: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(invalid("delta", "must lie in (0, 2)"));
    }
    Ok(j / -(0.5 * delta).ln())
}

/// Heat extracted per cycle with frictionless adiabats and isochores of
/// strength `x_c = Gamma_c tau_c`, `x_h = Gamma_h tau_h`:
/// `Omega_c (e_c - e_h) F(x_c, x_h)` with `e = E_eq / Omega` and
/// `F = (1 - e^-x_c)(1 - e^-x_h) / (1 - e^-(x_c + x_h))`.
pub fn frictionless_q_c(gap_c: f64, gap_h: f64, t_c: f64, t_h: f64, x_c: f64, x_h: f64) -> f64 {
    let e_c = -(gap_c / (2.0 * t_c)).tanh();
    let e_h = -(gap_h / (2.0 * t_h)).tanh();
    gap_c * (e_c - e_h) * heat_transfer_factor(x_c, x_h)
}

/// `F(x_c, x_h)`, tending to 1 for full equilibration.
pub fn heat_transfer_factor(x_c: f64, x_h: f64) -> f64 {
    (-x_c).exp_m1() * (-x_h).exp_m1() / -(-(x_c + x_h)).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoBounds {
    /// `1 - Omega_c / Omega_h`.
    pub gap_bound: f64,
    /// `1 - omega_c / omega_h`.
    pub field_bound: f64,
    /// `1 - T_c / T_h`.
    pub carnot_bound: f64,
    /// `Omega_h / Omega_c`.
    pub compression: f64,
    /// `T_c Omega_h / (T_h Omega_c)`.
    pub reversibility: f64,
    pub refrigeration_feasible: bool,
}

pub fn thermo_bounds(spec: &CycleSpec) -> Result<ThermoBounds> {
    spec.validate()?;
    let (gap_c, gap_h) = (spec.cold_field().gap(), spec.hot_field().gap());
    let (t_c, t_h) = (spec.bath_c.temperature(), spec.bath_h.temperature());
    let reversibility = t_c * gap_h / (t_h * gap_c);
    Ok(ThermoBounds {
        gap_bound: 1.0 - gap_c / gap_h,
        field_bound: 1.0 - spec.omega_c / spec.omega_h,
        carnot_bound: 1.0 - t_c / t_h,
        compression: gap_h / gap_c,
        reversibility,
        refrigeration_feasible: reversibility >= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{Bath, MediumParams};

    #[test]
    fn reversible_boundary() {
        let (gc, gh, th) = (2.0, 6.0, 1.5);
        let tc = gc / gh * th;
        assert!(q_c_max(gc, gh, tc, th, 0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn defect_at_threshold_cancels_cold_term() {
        let (gc, tc) = (2.0f64, 0.2);
        let delta = 2.0 * (-gc / tc).exp();
        let q = q_c_max(gc, 1e4, tc, 1.0, delta).unwrap();
        assert!(q.abs() < 1e-12);
    }

    #[test]
    fn min_temperature_examples() {
        assert!((min_temperature(2.0, 1e-7).unwrap() - 0.118_9).abs() < 1e-4);
        assert!((min_temperature(2.0, 2.0 / std::f64::consts::E).unwrap() - 2.0).abs() < 1e-14);
        let a = min_temperature(1.5, 1e-5).unwrap();
        assert!((min_temperature(3.0, 1e-5).unwrap() - 2.0 * a).abs() < 1e-14);
        assert!(min_temperature(2.0, 1e-300).unwrap() < 0.01);
        assert!(min_temperature(2.0, 0.0).is_err());
    }

    #[test]
    fn transfer_factor_limits() {
        assert!((heat_transfer_factor(50.0, 50.0) - 1.0).abs() < 1e-15);
        assert!(heat_transfer_factor(1e-3, 1e-3) < 1e-3);
    }

    fn spec(t_c: f64, t_h: f64, omega_c: f64, omega_h: f64, j: f64) -> CycleSpec {
        CycleSpec::new(
            MediumParams::with_coupling(j).unwrap(),
            omega_c,
            omega_h,
            Bath::new(t_c, 1.0).unwrap(),
            Bath::new(t_h, 1.0).unwrap(),
            1.0,
            1.0,
            1.0,
            1.0,
        )
    }

    #[test]
    fn large_field_reversibility() {
        let b = thermo_bounds(&spec(0.24, 1.18, 0.1, 3.325, 2.0)).unwrap();
        assert!(
            (b.reversibility - 0.3941).abs() < 1e-3,
            "{}",
            b.reversibility
        );
        assert!(!b.refrigeration_feasible);
        let b = thermo_bounds(&spec(0.18, 0.24, 0.1, 3.325, 2.0)).unwrap();
        assert!(
            (b.reversibility - 1.453).abs() < 1e-3,
            "{}",
            b.reversibility
        );
        assert!(b.refrigeration_feasible);
        assert!(b.gap_bound < b.field_bound);
    }

    #[test]
    fn weak_coupling_gap_ratio_tends_to_field_ratio() {
        let b = thermo_bounds(&spec(0.2, 0.5, 0.3, 1.7, 1e-9)).unwrap();
        assert!((b.gap_bound - b.field_bound).abs() < 1e-12);
    }
}
