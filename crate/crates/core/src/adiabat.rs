//! Demagnetization and magnetization segments.
//!
//! On an adiabat the normalised observables `y = (E, L, C) / Omega` evolve as
//! `dy/dt = A(t) y` with
//!
//! ```text
//!        [ 0        -J w'/W^2   0       ]
//! A(t) = [ J w'/W^2  -gp W^2    -W      ]  - ga w^2 M(t)
//!        [ 0          W         -gp W^2 ]
//! ```
//!
//! (`w = omega`, `W = Omega`) and the `Omega` scaling of the operators is
//! restored afterwards. `D = Omega <B5>` only rescales.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::medium::MediumParams;
use crate::ode::Dop853;
use crate::propagator::AffinePropagator;
use crate::schedule::{
    ConstantMuProfile, FieldProfile, LinearProfile, NoiseParams, ScheduleKind, TableProfile,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabatSpec {
    pub medium: MediumParams,
    pub omega_start: f64,
    pub omega_end: f64,
    pub tau: f64,
    pub schedule: ScheduleKind,
    pub noise: NoiseParams,
}

impl AdiabatSpec {
    pub fn constant_mu(medium: MediumParams, omega_start: f64, omega_end: f64, tau: f64) -> Self {
        Self {
            medium,
            omega_start,
            omega_end,
            tau,
            schedule: ScheduleKind::ConstantMu,
            noise: NoiseParams::none(),
        }
    }

    pub fn with_noise(mut self, noise: NoiseParams) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_schedule(mut self, schedule: ScheduleKind) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("omega_start", self.omega_start)?;
        require_non_negative("omega_end", self.omega_end)?;
        require_positive("tau", self.tau)?;
        self.noise.validate()?;
        if let ScheduleKind::Table(knots) = &self.schedule {
            let table = TableProfile::new(knots.clone(), self.tau)?;
            let (w0, w1) = table.endpoints();
            let tol = 1e-12 * self.omega_start.max(self.omega_end).max(1.0);
            if (w0 - self.omega_start).abs() > tol || (w1 - self.omega_end).abs() > tol {
                return Err(invalid(
                    "schedule",
                    "table endpoints must equal the adiabat fields",
                ));
            }
        }
        Ok(())
    }

    pub fn gap_start(&self) -> f64 {
        self.omega_start.hypot(self.medium.j())
    }

    pub fn gap_end(&self) -> f64 {
        self.omega_end.hypot(self.medium.j())
    }

    pub fn geometry(&self) -> AdiabatGeometry {
        AdiabatGeometry::new(&self.medium, self.omega_start, self.omega_end, self.tau)
    }

    fn profile(&self) -> Result<Box<dyn FieldProfile + '_>> {
        Ok(match &self.schedule {
            ScheduleKind::ConstantMu => Box::new(ConstantMuProfile::new(
                &self.medium,
                self.omega_start,
                self.omega_end,
                self.tau,
            )?),
            ScheduleKind::Linear => Box::new(LinearProfile::new(
                self.omega_start,
                self.omega_end,
                self.tau,
            )?),
            ScheduleKind::Table(knots) => Box::new(TableProfile::new(knots.clone(), self.tau)?),
        })
    }
}

/// Reciprocal constant `K`, compression angle `Phi`, and at the spec's
/// duration the adiabatic measure `mu = K / tau` and rotation angle
/// `Theta = Phi / mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabatGeometry {
    pub k: f64,
    pub phi: f64,
    pub mu: f64,
    pub theta_total: f64,
    pub tau: f64,
}

impl AdiabatGeometry {
    pub fn new(medium: &MediumParams, omega_start: f64, omega_end: f64, tau: f64) -> Self {
        let j = medium.j();
        let f0 = omega_start / omega_start.hypot(j);
        let f1 = omega_end / omega_end.hypot(j);
        let k = (f1 - f0) / j;
        let phi = f1.asin() - f0.asin();
        let mu = k / tau;
        let theta_total = if mu == 0.0 {
            omega_start.hypot(j) * tau
        } else {
            phi / mu
        };
        Self {
            k,
            phi,
            mu,
            theta_total,
            tau,
        }
    }

    /// `q = sqrt(1 + mu^2)`.
    pub fn q(&self) -> f64 {
        (1.0 + self.mu * self.mu).sqrt()
    }

    pub fn at_duration(&self, tau: f64) -> Self {
        let mu = self.k / tau;
        Self {
            mu,
            theta_total: if mu == 0.0 {
                self.theta_total / self.tau * tau
            } else {
                self.phi / mu
            },
            tau,
            ..*self
        }
    }
}

/// `omega(t), Omega(t)` for the constant-mu schedule of `spec`.
pub fn constant_mu_schedule(spec: &AdiabatSpec) -> Result<ConstantMuProfile> {
    if spec.schedule != ScheduleKind::ConstantMu {
        return Err(invalid("schedule", "constant-mu schedule required"));
    }
    ConstantMuProfile::new(&spec.medium, spec.omega_start, spec.omega_end, spec.tau)
}

/// The rotation `U2(q, Theta)`: rotation by `q Theta` about `(1, 0, mu)/q`.
pub fn mixing_matrix(mu: f64, theta: f64) -> Matrix3<f64> {
    let q2 = 1.0 + mu * mu;
    let q = q2.sqrt();
    let (s, c) = (q * theta).sin_cos();
    Matrix3::new(
        (1.0 + mu * mu * c) / q2,
        -mu * s / q,
        mu * (1.0 - c) / q2,
        mu * s / q,
        c,
        -s / q,
        mu * (1.0 - c) / q2,
        s / q,
        (mu * mu + c) / q2,
    )
}

/// Exact propagator for a noiseless constant-mu adiabat.
pub fn closed_form_propagator(spec: &AdiabatSpec) -> Result<AffinePropagator> {
    spec.validate()?;
    if spec.schedule != ScheduleKind::ConstantMu {
        return Err(invalid(
            "schedule",
            "closed form requires the constant-mu schedule",
        ));
    }
    if !spec.noise.is_zero() {
        return Err(invalid("noise", "closed form requires zero noise"));
    }
    let geometry = spec.geometry();
    let scale = spec.gap_end() / spec.gap_start();
    Ok(AffinePropagator::from_adiabat(
        mixing_matrix(geometry.mu, geometry.theta_total) * scale,
        scale,
    ))
}

fn amplitude_block(j: f64, omega: f64, gap: f64) -> Matrix3<f64> {
    let g2 = gap * gap;
    Matrix3::new(
        j * j / g2,
        j * omega / g2,
        0.0,
        j * omega / g2,
        omega * omega / g2,
        0.0,
        0.0,
        0.0,
        1.0,
    )
}

fn lab_generator(j: f64, omega: f64, omega_dot: f64, noise: &NoiseParams) -> Matrix3<f64> {
    let gap = omega.hypot(j);
    let g2 = gap * gap;
    let coupling = j * omega_dot / g2;
    let damp = noise.gamma_p * g2;
    let mut a = Matrix3::new(
        0.0, -coupling, 0.0, //
        coupling, -damp, -gap, //
        0.0, gap, -damp,
    );
    if noise.gamma_a > 0.0 {
        a -= amplitude_block(j, omega, gap) * (noise.gamma_a * omega * omega);
    }
    a
}

fn as_vector(m: &Matrix3<f64>) -> SVector<f64, 9> {
    SVector::<f64, 9>::from_column_slice(m.as_slice())
}

fn as_matrix(v: &SVector<f64, 9>) -> Matrix3<f64> {
    Matrix3::from_column_slice(v.as_slice())
}

/// Fundamental matrix of the normalised system over `[t0, t1]` for an
/// arbitrary field profile, integrated in `t`.
pub fn normalized_flow_in_time(
    profile: &dyn FieldProfile,
    medium: &MediumParams,
    noise: &NoiseParams,
    t0: f64,
    t1: f64,
    integrator: &Dop853,
) -> Result<Matrix3<f64>> {
    let j = medium.j();
    let mut cuts = vec![t0];
    cuts.extend(
        profile
            .breakpoints()
            .into_iter()
            .filter(|&b| b > t0 && b < t1),
    );
    cuts.push(t1);
    let mut flow = Matrix3::identity();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        // on table segments omega_dot is evaluated inside the piece
        let slope_at = |t: f64| {
            if t <= a || t >= b {
                profile.omega_dot(mid)
            } else {
                profile.omega_dot(t)
            }
        };
        let rhs = |t: f64, y: &SVector<f64, 9>| {
            let gen = lab_generator(j, profile.omega(t), slope_at(t), noise);
            as_vector(&(gen * as_matrix(y)))
        };
        let piece = integrator.integrate(rhs, a, as_vector(&Matrix3::identity()), b)?;
        flow = as_matrix(&piece) * flow;
    }
    Ok(flow)
}

/// Same as [`normalized_flow_in_time`] for the constant-mu schedule, using the
/// rotation angle `Theta` (`dTheta = Omega dt`) as independent variable.
pub fn normalized_flow_in_angle(
    profile: &ConstantMuProfile,
    medium: &MediumParams,
    noise: &NoiseParams,
    t0: f64,
    t1: f64,
    integrator: &Dop853,
) -> Result<Matrix3<f64>> {
    let j = medium.j();
    let mu = profile.mu();
    if mu == 0.0 {
        return normalized_flow_in_time(profile, medium, noise, t0, t1, integrator);
    }
    let phi0 = profile.ratio(t0).asin();
    let theta1 = (profile.ratio(t1).asin() - phi0) / mu;
    let rhs = |theta: f64, y: &SVector<f64, 9>| {
        let phi = phi0 + mu * theta;
        let (sin, cos) = phi.sin_cos();
        let gap = j / cos;
        let omega = j * sin / cos;
        let damp = noise.gamma_p * gap;
        let mut g = Matrix3::new(
            0.0, -mu, 0.0, //
            mu, -damp, -1.0, //
            0.0, 1.0, -damp,
        );
        if noise.gamma_a > 0.0 {
            g -= amplitude_block(j, omega, gap) * (noise.gamma_a * omega * omega / gap);
        }
        as_vector(&(g * as_matrix(y)))
    };
    let y = integrator.integrate(rhs, 0.0, as_vector(&Matrix3::identity()), theta1)?;
    Ok(as_matrix(&y))
}

/// Propagator for any schedule and noise, by adaptive integration.
pub fn numeric_propagator(spec: &AdiabatSpec, medium: &MediumParams) -> Result<AffinePropagator> {
    numeric_propagator_with(spec, medium, &Dop853::default())
}

pub fn numeric_propagator_with(
    spec: &AdiabatSpec,
    medium: &MediumParams,
    integrator: &Dop853,
) -> Result<AffinePropagator> {
    let spec = AdiabatSpec {
        medium: *medium,
        ..spec.clone()
    };
    spec.validate()?;
    let flow = match &spec.schedule {
        ScheduleKind::ConstantMu => {
            let profile = constant_mu_schedule(&spec)?;
            normalized_flow_in_angle(&profile, medium, &spec.noise, 0.0, spec.tau, integrator)?
        }
        _ => {
            let profile = spec.profile()?;
            normalized_flow_in_time(
                profile.as_ref(),
                medium,
                &spec.noise,
                0.0,
                spec.tau,
                integrator,
            )?
        }
    };
    let scale = spec.gap_end() / spec.gap_start();
    Ok(AffinePropagator::from_adiabat(flow * scale, scale))
}

/// Propagator for a general field profile (used for perturbed schedules).
pub fn profile_propagator(
    profile: &dyn FieldProfile,
    medium: &MediumParams,
    noise: &NoiseParams,
    integrator: &Dop853,
) -> Result<AffinePropagator> {
    let tau = profile.duration();
    let flow = normalized_flow_in_time(profile, medium, noise, 0.0, tau, integrator)?;
    let scale = profile.omega(tau).hypot(medium.j()) / profile.omega(0.0).hypot(medium.j());
    Ok(AffinePropagator::from_adiabat(flow * scale, scale))
}

/// Builds the propagator with the cheapest exact route: closed form for
/// noiseless constant-mu, integration otherwise.
pub fn adiabat_propagator(spec: &AdiabatSpec) -> Result<AffinePropagator> {
    if spec.schedule == ScheduleKind::ConstantMu && spec.noise.is_zero() {
        closed_form_propagator(spec)
    } else {
        numeric_propagator(spec, &spec.medium)
    }
}

/// Field reached after time `s` along the adiabat.
pub fn omega_at(spec: &AdiabatSpec, s: f64) -> Result<f64> {
    Ok(spec.profile()?.omega(s))
}

/// Propagator over the first `s` time units of the adiabat and the field
/// reached there.
pub fn partial_propagator(spec: &AdiabatSpec, s: f64) -> Result<(AffinePropagator, f64)> {
    if !(s > 0.0 && s <= spec.tau) {
        return Err(invalid("s", "must lie in (0, tau]"));
    }
    if s == spec.tau {
        return Ok((adiabat_propagator(spec)?, spec.omega_end));
    }
    let omega = omega_at(spec, s)?;
    if spec.schedule == ScheduleKind::ConstantMu {
        // a prefix of a constant-mu sweep is itself constant-mu
        let sub = AdiabatSpec {
            omega_end: omega,
            tau: s,
            ..spec.clone()
        };
        return Ok((adiabat_propagator(&sub)?, omega));
    }
    let profile = spec.profile()?;
    let flow = normalized_flow_in_time(
        profile.as_ref(),
        &spec.medium,
        &spec.noise,
        0.0,
        s,
        &Dop853::default(),
    )?;
    let scale = omega.hypot(spec.medium.j()) / spec.gap_start();
    Ok((AffinePropagator::from_adiabat(flow * scale, scale), omega))
}

/// `delta = 1 - (Omega_start / Omega_end) U(1,1)`.
pub fn adiabaticity_delta(prop: &AffinePropagator, gap_start: f64, gap_end: f64) -> f64 {
    1.0 - gap_start / gap_end * prop.element(1, 1)
}

/// Quantized adiabat with `q Theta = 2 pi l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionlessSolution {
    pub l: u32,
    pub mu_l: f64,
    pub tau_l: f64,
}

/// Largest winding number accepted where a range of them is enumerated.
pub const MAX_WINDING: u32 = 10_000;

pub(crate) fn check_winding_range(l_max: u32) -> Result<()> {
    if l_max > MAX_WINDING {
        return Err(invalid(
            "l_max",
            format!("must be <= {MAX_WINDING} (got {l_max})"),
        ));
    }
    Ok(())
}

/// Smallest winding number with a real quantized measure (`2 pi l > |Phi|`).
pub fn min_winding(geometry: &AdiabatGeometry) -> Result<u32> {
    if geometry.phi == 0.0 {
        return Err(Error::NoSolution);
    }
    let mut l = (geometry.phi.abs() / (2.0 * PI)).floor() as u32;
    while 2.0 * PI * l as f64 <= geometry.phi.abs() {
        l += 1;
    }
    Ok(l)
}

pub fn frictionless_solution(geometry: &AdiabatGeometry, l: u32) -> Result<FrictionlessSolution> {
    let l_min = min_winding(geometry)?;
    if l < l_min {
        return Err(invalid("l", format!("winding number must be >= {l_min}")));
    }
    let ratio = 2.0 * PI * l as f64 / geometry.phi;
    let root = (ratio * ratio - 1.0).sqrt();
    Ok(FrictionlessSolution {
        l,
        mu_l: geometry.k.signum() / root,
        tau_l: geometry.k.abs() * root,
    })
}

pub fn frictionless_family(
    geometry: &AdiabatGeometry,
    l_max: u32,
) -> Result<Vec<FrictionlessSolution>> {
    check_winding_range(l_max)?;
    let l_min = min_winding(geometry)?;
    (l_min..=l_max)
        .map(|l| frictionless_solution(geometry, l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium() -> MediumParams {
        MediumParams::with_coupling(2.0).unwrap()
    }

    #[test]
    fn geometry_of_reference_adiabat() {
        let g = AdiabatGeometry::new(&medium(), 3.325, 0.1, 1.0);
        let f_h = 3.325 / 15.055625f64.sqrt();
        let f_c = 0.1 / 4.01f64.sqrt();
        assert!((g.k - (f_c - f_h) / 2.0).abs() < 1e-15);
        assert!((g.k + 0.403493).abs() < 1e-6, "{}", g.k);
        assert!((g.phi + 0.979313).abs() < 1e-6, "{}", g.phi);
        let rev = AdiabatGeometry::new(&medium(), 0.1, 3.325, 1.0);
        assert_eq!(rev.k, -g.k);
        assert_eq!(rev.phi, -g.phi);
    }

    #[test]
    fn adiabatic_limit_is_identity() {
        let spec = AdiabatSpec::constant_mu(medium(), 3.325, 0.1, 1e9);
        let p = closed_form_propagator(&spec).unwrap();
        let u = p.elc_block() * (spec.gap_start() / spec.gap_end());
        // energy decouples; L and C keep precessing
        assert!((u[(0, 0)] - 1.0).abs() < 1e-15);
        for k in 1..3 {
            assert!(u[(0, k)].abs() < 1e-9 && u[(k, 0)].abs() < 1e-9);
        }
        assert!(adiabaticity_delta(&p, spec.gap_start(), spec.gap_end()).abs() < 1e-15);
    }

    #[test]
    fn mixing_matrix_is_rotation() {
        for &(mu, theta) in &[(0.3, 2.0), (-0.7, 11.0), (2.5, 0.4)] {
            let u = mixing_matrix(mu, theta);
            assert!((u.transpose() * u - Matrix3::identity()).amax() < 1e-14);
            assert!((u.determinant() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn quantized_rotation_is_identity() {
        let mu: f64 = 0.25;
        let q = (1.0 + mu * mu).sqrt();
        let u = mixing_matrix(mu, 2.0 * PI * 3.0 / q);
        assert!((u - Matrix3::identity()).amax() < 1e-14);
    }

    #[test]
    fn quarter_angle_family() {
        let g = AdiabatGeometry {
            k: -0.3,
            phi: -PI / 2.0,
            mu: 0.0,
            theta_total: 0.0,
            tau: 1.0,
        };
        let fam = frictionless_family(&g, 5).unwrap();
        assert_eq!(fam[0].l, 1);
        assert!((fam[0].mu_l.abs() - 1.0 / 15f64.sqrt()).abs() < 1e-15);
        assert!(fam[0].mu_l < 0.0);
        assert!((fam[0].tau_l - 0.3 * 15f64.sqrt()).abs() < 1e-14);
        assert!(fam.windows(2).all(|w| w[1].tau_l > w[0].tau_l));
    }

    #[test]
    fn family_requires_nonzero_angle() {
        let g = AdiabatGeometry::new(&medium(), 1.0, 1.0, 1.0);
        assert_eq!(frictionless_family(&g, 3), Err(Error::NoSolution));
    }

    #[test]
    fn closed_form_rejects_noise_and_other_schedules() {
        let spec = AdiabatSpec::constant_mu(medium(), 3.0, 0.1, 2.0);
        assert!(
            closed_form_propagator(&spec.clone().with_noise(NoiseParams::phase(1e-3))).is_err()
        );
        assert!(closed_form_propagator(&spec.with_schedule(ScheduleKind::Linear)).is_err());
    }

    #[test]
    fn numeric_matches_closed_form() {
        let spec = AdiabatSpec::constant_mu(medium(), 3.325, 0.1, 7.3);
        let a = closed_form_propagator(&spec).unwrap();
        let b = numeric_propagator(&spec, &spec.medium).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10, "{}", a.max_abs_diff(&b));
    }

    #[test]
    fn time_and_angle_integration_agree() {
        let m = medium();
        let profile = ConstantMuProfile::new(&m, 0.1, 3.325, 4.0).unwrap();
        let noise = NoiseParams::new(1e-3, 1e-3).unwrap();
        let ode = Dop853::default();
        let a = normalized_flow_in_angle(&profile, &m, &noise, 0.0, 4.0, &ode).unwrap();
        let b = normalized_flow_in_time(&profile, &m, &noise, 0.0, 4.0, &ode).unwrap();
        assert!((a - b).amax() < 1e-10);
    }

    #[test]
    fn table_schedule_reproduces_linear() {
        let m = medium();
        let lin = AdiabatSpec::constant_mu(m, 3.0, 0.5, 3.0).with_schedule(ScheduleKind::Linear);
        let tab = lin.clone().with_schedule(ScheduleKind::Table(vec![
            (0.0, 3.0),
            (1.0, 2.1666666666666665),
            (3.0, 0.5),
        ]));
        let a = numeric_propagator(&lin, &m).unwrap();
        let b = numeric_propagator(&tab, &m).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn table_endpoints_checked() {
        let spec = AdiabatSpec::constant_mu(medium(), 3.0, 0.5, 3.0)
            .with_schedule(ScheduleKind::Table(vec![(0.0, 2.0), (3.0, 0.5)]));
        assert!(spec.validate().is_err());
    }
}
