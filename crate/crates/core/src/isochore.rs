//! Bath contact at fixed field.
//!
//! The energy relaxes towards `E_eq` at rate `Gamma`, `L` and `C` precess at
//! `Omega` while decaying at `Gamma + gamma_b Omega^2`, and `D` is driven by
//! the energy:
//!
//! ```text
//! dD/dt = (2 Gamma E_eq / Omega) E - 2 Gamma D
//! ```

use nalgebra::{Matrix4, SVector, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, Result};
use crate::medium::{equilibrium_energy, Bath, FieldPoint, ObservableState};
use crate::ode::Dop853;
use crate::propagator::AffinePropagator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsochoreSpec {
    pub field: FieldPoint,
    pub bath: Bath,
    pub tau: f64,
    pub gamma_b: f64,
}

impl IsochoreSpec {
    pub fn new(field: FieldPoint, bath: Bath, tau: f64, gamma_b: f64) -> Result<Self> {
        let spec = Self {
            field,
            bath,
            tau,
            gamma_b,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("tau", self.tau)?;
        require_non_negative("gamma_b", self.gamma_b)
    }

    pub fn equilibrium_energy(&self) -> f64 {
        equilibrium_energy(&self.field, self.bath.temperature())
    }

    fn coherence_decay(&self) -> f64 {
        self.bath.conductance() + self.gamma_b * self.field.gap().powi(2)
    }
}

/// Exact affine map of an isochore of duration `spec.tau`.
pub fn isochore_propagator(spec: &IsochoreSpec) -> AffinePropagator {
    let gap = spec.field.gap();
    let e_eq = spec.equilibrium_energy();
    let gamma = spec.bath.conductance();
    let u = (-gamma * spec.tau).exp();
    let one_minus_u = -(-gamma * spec.tau).exp_m1();
    let damp = (-spec.coherence_decay() * spec.tau).exp();
    let (sin, cos) = (gap * spec.tau).sin_cos();

    let mut linear = Matrix4::zeros();
    linear[(0, 0)] = u;
    linear[(1, 1)] = damp * cos;
    linear[(1, 2)] = -damp * sin;
    linear[(2, 1)] = damp * sin;
    linear[(2, 2)] = damp * cos;
    linear[(3, 0)] = 2.0 * e_eq / gap * u * one_minus_u;
    linear[(3, 3)] = u * u;
    let offset = Vector4::new(
        e_eq * one_minus_u,
        0.0,
        0.0,
        e_eq * e_eq / gap * one_minus_u * one_minus_u,
    );
    AffinePropagator::from_parts(linear, offset)
}

/// Integrates the isochore equations of motion directly.
pub fn isochore_oracle(spec: &IsochoreSpec, state: &ObservableState) -> Result<ObservableState> {
    isochore_oracle_with(spec, state, &Dop853::default())
}

pub fn isochore_oracle_with(
    spec: &IsochoreSpec,
    state: &ObservableState,
    integrator: &Dop853,
) -> Result<ObservableState> {
    spec.validate()?;
    let gap = spec.field.gap();
    let e_eq = spec.equilibrium_energy();
    let gamma = spec.bath.conductance();
    let k = spec.coherence_decay();
    let rhs = |_t: f64, y: &SVector<f64, 4>| {
        Vector4::new(
            -gamma * (y[0] - e_eq),
            -k * y[1] - gap * y[2],
            gap * y[1] - k * y[2],
            2.0 * gamma * e_eq / gap * y[0] - 2.0 * gamma * y[3],
        )
    };
    let y0 = Vector4::from(state.as_array());
    let y = integrator.integrate(rhs, 0.0, y0, spec.tau)?;
    Ok(ObservableState::from_array(
        [y[0], y[1], y[2], y[3]],
        spec.field,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::{equilibrium_d, MediumParams};

    fn spec(tau: f64, gamma: f64, gamma_b: f64) -> IsochoreSpec {
        let field = MediumParams::with_coupling(2.0)
            .unwrap()
            .field(3.325)
            .unwrap();
        IsochoreSpec::new(field, Bath::new(1.18, gamma).unwrap(), tau, gamma_b).unwrap()
    }

    fn sample(field: FieldPoint) -> ObservableState {
        ObservableState::new(-1.2, 0.3, -0.2, 0.4, field)
    }

    #[test]
    fn zero_duration_is_identity() {
        let p = isochore_propagator(&spec(0.0, 0.7, 0.1));
        assert_eq!(p.max_abs_diff(&AffinePropagator::identity()), 0.0);
    }

    #[test]
    fn long_contact_thermalizes() {
        let s = spec(1e3, 0.7, 0.0);
        let out = isochore_propagator(&s).apply(&sample(s.field), s.field);
        let eq = ObservableState::thermal(s.field, 1.18);
        assert!((out.e - eq.e).abs() < 1e-14);
        assert!(out.l.abs() < 1e-14 && out.c.abs() < 1e-14);
        assert!((out.d - equilibrium_d(&s.field, 1.18)).abs() < 1e-14);
    }

    #[test]
    fn free_precession_without_bath_coupling() {
        let mut s = spec(1.3, 1.0, 0.0);
        s.bath = Bath::new(1.18, 1e-300).unwrap();
        let x = sample(s.field);
        let out = isochore_propagator(&s).apply(&x, s.field);
        let a = s.field.gap() * 1.3;
        assert!((out.e - x.e).abs() < 1e-14 && (out.d - x.d).abs() < 1e-14);
        assert!((out.l - (x.l * a.cos() - x.c * a.sin())).abs() < 1e-14);
        assert!((out.c - (x.l * a.sin() + x.c * a.cos())).abs() < 1e-14);
    }

    #[test]
    fn half_life() {
        let s = spec(2f64.ln() / 0.7, 0.7, 0.0);
        let x = sample(s.field);
        let out = isochore_propagator(&s).apply(&x, s.field);
        let e_eq = s.equilibrium_energy();
        assert!(((out.e - e_eq) - (x.e - e_eq) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn thermal_state_is_fixed() {
        for &tau in &[0.01, 0.5, 3.0, 40.0] {
            let s = spec(tau, 0.4, 0.2);
            let eq = ObservableState::thermal(s.field, 1.18);
            let out = isochore_propagator(&s).apply(&eq, s.field);
            assert!((out.e - eq.e).abs() < 1e-12 && (out.d - eq.d).abs() < 1e-12);
            assert!(out.l.abs() < 1e-12 && out.c.abs() < 1e-12);
        }
    }

    #[test]
    fn matches_oracle() {
        let s = spec(2.7, 0.4, 0.05);
        let x = sample(s.field);
        let a = isochore_propagator(&s).apply(&x, s.field);
        let b = isochore_oracle(&s, &x).unwrap();
        for (p, q) in a.as_array().iter().zip(b.as_array()) {
            assert!((p - q).abs() < 1e-10, "{p} {q}");
        }
    }

    #[test]
    fn semigroup() {
        let (a, b) = (spec(0.8, 0.4, 0.05), spec(1.9, 0.4, 0.05));
        let ab = isochore_propagator(&b).after(&isochore_propagator(&a));
        assert!(ab.max_abs_diff(&isochore_propagator(&spec(2.7, 0.4, 0.05))) < 1e-12);
    }

    #[test]
    fn negative_duration_rejected() {
        let s = spec(1.0, 0.4, 0.0);
        assert!(IsochoreSpec::new(s.field, s.bath, -1.0, 0.0).is_err());
    }
}
