//! Leading-order estimates of the adiabaticity defect caused by noise on the
//! adiabats, plus a numerical check that a constant adiabatic measure is
//! locally optimal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::adiabat::{
    adiabaticity_delta, numeric_propagator, profile_propagator, AdiabatGeometry, AdiabatSpec,
};
use crate::error::{invalid, require_non_negative, Error, Result};
use crate::medium::MediumParams;
use crate::ode::Dop853;
use crate::schedule::{NoiseParams, Perturbation, PerturbedMuProfile, ScheduleKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoiseEstimate {
    /// Extra rotation angle accumulated over one adiabat.
    pub alpha_l: f64,
    /// `1 - cos(alpha_l)`.
    pub delta_min: f64,
    /// `pi^2 gp^2 J^2 ln(omega_h / J)`, the `omega_c << J` form.
    pub delta_small_angle: f64,
    /// The logarithm multiplying `pi gp J` in `alpha_l`.
    pub log_factor: f64,
}

/// Phase-noise estimate for an adiabat between `omega_c` and `omega_h`
/// (independent of the winding number at leading order).
pub fn phase_noise_asymptotics(
    medium: &MediumParams,
    omega_c: f64,
    omega_h: f64,
    gamma_p: f64,
) -> Result<PhaseNoiseEstimate> {
    require_non_negative("gamma_p", gamma_p)?;
    require_non_negative("omega_c", omega_c)?;
    if !(omega_h > 0.0) {
        return Err(Error::DegenerateField(
            "omega_h must be > 0 for the phase-noise logarithm",
        ));
    }
    let j = medium.j();
    let gap_h = omega_h.hypot(j);
    let gap_c = omega_c.hypot(j);
    let log_factor =
        ((gap_h + omega_h) * (gap_c - omega_c) / ((gap_h - omega_h) * (gap_c + omega_c))).ln();
    let alpha_l = PI * gamma_p * j * log_factor;
    Ok(PhaseNoiseEstimate {
        alpha_l,
        delta_min: 1.0 - alpha_l.cos(),
        delta_small_angle: (PI * gamma_p * j).powi(2) * (omega_h / j).ln(),
        log_factor,
    })
}

/// Amplitude-noise defect after the `l`-th quantized adiabat,
/// `1 - exp(-ga J^2 omega_h^2 tau_l / (3 Omega_c^2))`.
pub fn amplitude_noise_asymptotics(
    geometry: &AdiabatGeometry,
    medium: &MediumParams,
    omega_c: f64,
    omega_h: f64,
    gamma_a: f64,
    l: u32,
) -> Result<f64> {
    require_non_negative("gamma_a", gamma_a)?;
    let tau_l = crate::adiabat::frictionless_solution(geometry, l)?.tau_l;
    let j = medium.j();
    let gap_c2 = omega_c * omega_c + j * j;
    Ok(-(-gamma_a * j * j * omega_h * omega_h * tau_l / (3.0 * gap_c2)).exp_m1())
}

/// Minimum amplitude-noise defect, `ga J 4 omega_h^2 / Omega_h^2`.
pub fn amplitude_noise_minimum(medium: &MediumParams, omega_h: f64, gamma_a: f64) -> f64 {
    let gap_h2 = omega_h * omega_h + medium.j().powi(2);
    gamma_a * medium.j() * 4.0 * omega_h * omega_h / gap_h2
}

/// Defects of the constant-mu adiabat in `spec` and of the same adiabat with
/// `mu(t) = mu0 + mu1 g(t)`.
pub fn constant_mu_optimality_check(
    spec: &AdiabatSpec,
    g: &dyn Perturbation,
    mu1: f64,
) -> Result<(f64, f64)> {
    if spec.schedule != ScheduleKind::ConstantMu {
        return Err(invalid(
            "schedule",
            "reference schedule must be constant-mu",
        ));
    }
    let (gap_s, gap_e) = (spec.gap_start(), spec.gap_end());
    let base = numeric_propagator(spec, &spec.medium)?;
    let delta_const = adiabaticity_delta(&base, gap_s, gap_e);
    if mu1 == 0.0 {
        return Ok((delta_const, delta_const));
    }
    let profile = PerturbedMuProfile::new(
        &spec.medium,
        spec.omega_start,
        spec.omega_end,
        spec.tau,
        mu1,
        g,
    )?;
    let perturbed = profile_propagator(&profile, &spec.medium, &spec.noise, &Dop853::default())?;
    Ok((delta_const, adiabaticity_delta(&perturbed, gap_s, gap_e)))
}

/// Defect of the `l`-th quantized adiabat between `omega_start` and
/// `omega_end` under `noise`, by integration.
pub fn quantized_delta(
    medium: &MediumParams,
    omega_start: f64,
    omega_end: f64,
    l: u32,
    noise: NoiseParams,
) -> Result<f64> {
    let geometry = AdiabatGeometry::new(medium, omega_start, omega_end, 1.0);
    let sol = crate::adiabat::frictionless_solution(&geometry, l)?;
    let spec =
        AdiabatSpec::constant_mu(*medium, omega_start, omega_end, sol.tau_l).with_noise(noise);
    let prop = numeric_propagator(&spec, medium)?;
    Ok(adiabaticity_delta(&prop, spec.gap_start(), spec.gap_end()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Sinusoid;

    fn medium() -> MediumParams {
        MediumParams::with_coupling(2.0).unwrap()
    }

    #[test]
    fn phase_noise_zero() {
        let est = phase_noise_asymptotics(&medium(), 0.1, 3.325, 0.0).unwrap();
        assert_eq!(est.alpha_l, 0.0);
        assert_eq!(est.delta_min, 0.0);
    }

    #[test]
    fn phase_noise_log_factor() {
        let est = phase_noise_asymptotics(&medium(), 0.1, 3.325, 1e-3).unwrap();
        assert!((est.log_factor - 2.4635).abs() < 1e-3, "{}", est.log_factor);
        assert!((est.alpha_l - PI * 1e-3 * 2.0 * est.log_factor).abs() < 1e-15);
    }

    #[test]
    fn phase_noise_needs_field() {
        assert!(matches!(
            phase_noise_asymptotics(&medium(), 0.0, 0.0, 1e-3),
            Err(Error::DegenerateField(_))
        ));
    }

    #[test]
    fn amplitude_noise_grows_with_l() {
        let m = medium();
        let g = AdiabatGeometry::new(&m, 3.325, 0.1, 1.0);
        assert_eq!(
            amplitude_noise_asymptotics(&g, &m, 0.1, 3.325, 0.0, 1).unwrap(),
            0.0
        );
        let d: Vec<f64> = (1..=6)
            .map(|l| amplitude_noise_asymptotics(&g, &m, 0.1, 3.325, 1e-4, l).unwrap())
            .collect();
        assert!(d.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn unperturbed_check_is_trivial() {
        let m = medium();
        let spec = AdiabatSpec::constant_mu(m, 3.325, 0.1, 5.0);
        let s = Sinusoid {
            harmonic: 1,
            tau: 5.0,
        };
        let (a, b) = constant_mu_optimality_check(&spec, &s, 0.0).unwrap();
        assert_eq!(a, b);
    }
}
