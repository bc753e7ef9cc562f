//! Field schedules `omega(t)` for the adiabats.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::medium::MediumParams;

/// How the field is driven between its endpoint values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// Constant adiabatic measure: `omega/Omega` linear in time.
    #[default]
    ConstantMu,
    /// `omega` linear in time.
    Linear,
    /// Piecewise-linear interpolation through `(t, omega)` knots.
    Table(Vec<(f64, f64)>),
}

/// Strengths of the control noise acting on the adiabats.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseParams {
    pub gamma_p: f64,
    pub gamma_a: f64,
}

impl NoiseParams {
    pub fn new(gamma_p: f64, gamma_a: f64) -> Result<Self> {
        require_non_negative("gamma_p", gamma_p)?;
        require_non_negative("gamma_a", gamma_a)?;
        Ok(Self { gamma_p, gamma_a })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn phase(gamma_p: f64) -> Self {
        Self {
            gamma_p,
            gamma_a: 0.0,
        }
    }

    pub fn amplitude(gamma_a: f64) -> Self {
        Self {
            gamma_p: 0.0,
            gamma_a,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.gamma_p == 0.0 && self.gamma_a == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("gamma_p", self.gamma_p)?;
        require_non_negative("gamma_a", self.gamma_a)
    }
}

/// A time-dependent field on `[0, tau]`.
pub trait FieldProfile: Sync {
    fn omega(&self, t: f64) -> f64;
    fn omega_dot(&self, t: f64) -> f64;
    fn duration(&self) -> f64;

    /// Interior times where `omega_dot` may jump.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Field with `f(t) = omega/Omega` linear in `t`, so that
/// `mu = J omega_dot / Omega^3 = f_dot / J` is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantMuProfile {
    j: f64,
    f_start: f64,
    f_end: f64,
    tau: f64,
}

impl ConstantMuProfile {
    pub fn new(medium: &MediumParams, omega_start: f64, omega_end: f64, tau: f64) -> Result<Self> {
        require_non_negative("omega_start", omega_start)?;
        require_non_negative("omega_end", omega_end)?;
        require_positive("tau", tau)?;
        let j = medium.j();
        Ok(Self {
            j,
            f_start: omega_start / omega_start.hypot(j),
            f_end: omega_end / omega_end.hypot(j),
            tau,
        })
    }

    pub fn ratio(&self, t: f64) -> f64 {
        self.f_start + (self.f_end - self.f_start) * (t / self.tau)
    }

    /// `(omega(t), Omega(t))`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let f = self.ratio(t);
        let root = (1.0 - f * f).sqrt();
        (self.j * f / root, self.j / root)
    }

    pub fn mu(&self) -> f64 {
        (self.f_end - self.f_start) / (self.j * self.tau)
    }
}

impl FieldProfile for ConstantMuProfile {
    fn omega(&self, t: f64) -> f64 {
        self.at(t).0
    }

    fn omega_dot(&self, t: f64) -> f64 {
        let f = self.ratio(t);
        let f_dot = (self.f_end - self.f_start) / self.tau;
        self.j * f_dot / (1.0 - f * f).powf(1.5)
    }

    fn duration(&self) -> f64 {
        self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearProfile {
    omega_start: f64,
    omega_end: f64,
    tau: f64,
}

impl LinearProfile {
    pub fn new(omega_start: f64, omega_end: f64, tau: f64) -> Result<Self> {
        require_non_negative("omega_start", omega_start)?;
        require_non_negative("omega_end", omega_end)?;
        require_positive("tau", tau)?;
        Ok(Self {
            omega_start,
            omega_end,
            tau,
        })
    }
}

impl FieldProfile for LinearProfile {
    fn omega(&self, t: f64) -> f64 {
        self.omega_start + (self.omega_end - self.omega_start) * (t / self.tau)
    }

    fn omega_dot(&self, _t: f64) -> f64 {
        (self.omega_end - self.omega_start) / self.tau
    }

    fn duration(&self) -> f64 {
        self.tau
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableProfile {
    knots: Vec<(f64, f64)>,
}

impl TableProfile {
    /// Knots must start at `t = 0`, end at `t = tau`, be strictly increasing
    /// in `t` and have `omega >= 0`.
    pub fn new(knots: Vec<(f64, f64)>, tau: f64) -> Result<Self> {
        require_positive("tau", tau)?;
        if knots.len() < 2 {
            return Err(invalid("schedule", "table needs at least two knots"));
        }
        if knots[0].0 != 0.0 {
            return Err(invalid("schedule", "table must start at t = 0"));
        }
        let last = knots[knots.len() - 1].0;
        if (last - tau).abs() > 1e-12 * tau.max(1.0) {
            return Err(invalid(
                "schedule",
                format!("table must end at t = tau = {tau} (got {last})"),
            ));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(invalid(
                    "schedule",
                    "table times must be strictly increasing",
                ));
            }
        }
        for &(t, omega) in &knots {
            if !(t.is_finite() && omega.is_finite() && omega >= 0.0) {
                return Err(invalid("schedule", "table fields must be finite and >= 0"));
            }
        }
        Ok(Self { knots })
    }

    fn segment(&self, t: f64) -> usize {
        let idx = self.knots.partition_point(|&(tk, _)| tk <= t);
        idx.clamp(1, self.knots.len() - 1) - 1
    }

    pub fn endpoints(&self) -> (f64, f64) {
        (self.knots[0].1, self.knots[self.knots.len() - 1].1)
    }
}

impl FieldProfile for TableProfile {
    fn omega(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let (t0, w0) = self.knots[k];
        let (t1, w1) = self.knots[k + 1];
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }

    fn omega_dot(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let (t0, w0) = self.knots[k];
        let (t1, w1) = self.knots[k + 1];
        (w1 - w0) / (t1 - t0)
    }

    fn duration(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.knots[1..self.knots.len() - 1]
            .iter()
            .map(|k| k.0)
            .collect()
    }
}

/// Zero-mean modulation `g(t)` of the adiabatic measure.
pub trait Perturbation: Sync {
    fn value(&self, t: f64) -> f64;
    /// `int_0^t g`.
    fn integral(&self, t: f64) -> f64;
}

/// `g(t) = sin(2 pi n t / tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub harmonic: u32,
    pub tau: f64,
}

impl Perturbation for Sinusoid {
    fn value(&self, t: f64) -> f64 {
        (self.angular() * t).sin()
    }

    fn integral(&self, t: f64) -> f64 {
        let w = self.angular();
        (1.0 - (w * t).cos()) / w
    }
}

impl Sinusoid {
    fn angular(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.harmonic as f64 / self.tau
    }
}

/// Arbitrary modulation whose running integral is evaluated by adaptive
/// Simpson quadrature.
pub struct Quadrature<F: Fn(f64) -> f64 + Sync> {
    pub g: F,
}

impl<F: Fn(f64) -> f64 + Sync> Perturbation for Quadrature<F> {
    fn value(&self, t: f64) -> f64 {
        (self.g)(t)
    }

    fn integral(&self, t: f64) -> f64 {
        adaptive_simpson(&self.g, 0.0, t, 1e-13, 40)
    }
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, depth)
}

/// Field whose adiabatic measure is `mu0 + mu1 g(t)`; `f = omega/Omega`
/// follows `f_dot = J mu(t)`.
pub struct PerturbedMuProfile<'a> {
    j: f64,
    f_start: f64,
    mu0: f64,
    mu1: f64,
    tau: f64,
    g: &'a dyn Perturbation,
}

impl<'a> PerturbedMuProfile<'a> {
    pub fn new(
        medium: &MediumParams,
        omega_start: f64,
        omega_end: f64,
        tau: f64,
        mu1: f64,
        g: &'a dyn Perturbation,
    ) -> Result<Self> {
        let base = ConstantMuProfile::new(medium, omega_start, omega_end, tau)?;
        let profile = Self {
            j: medium.j(),
            f_start: base.f_start,
            mu0: base.mu(),
            mu1,
            tau,
            g,
        };
        profile.check_feasible()?;
        Ok(profile)
    }

    pub fn ratio(&self, t: f64) -> f64 {
        self.f_start + self.j * (self.mu0 * t + self.mu1 * self.g.integral(t))
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.mu0 + self.mu1 * self.g.value(t)
    }

    fn check_feasible(&self) -> Result<()> {
        const SAMPLES: usize = 2000;
        for k in 0..=SAMPLES {
            let t = self.tau * k as f64 / SAMPLES as f64;
            let f = self.ratio(t);
            if !(0.0..1.0).contains(&f) {
                return Err(Error::ScheduleInfeasible { t });
            }
        }
        Ok(())
    }
}

impl FieldProfile for PerturbedMuProfile<'_> {
    fn omega(&self, t: f64) -> f64 {
        let f = self.ratio(t).max(0.0);
        self.j * f / (1.0 - f * f).sqrt()
    }

    fn omega_dot(&self, t: f64) -> f64 {
        let f = self.ratio(t);
        self.j * self.j * self.mu(t) / (1.0 - f * f).powf(1.5)
    }

    fn duration(&self) -> f64 {
        self.tau
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mu_endpoints_and_rate() {
        let m = MediumParams::with_coupling(2.0).unwrap();
        let p = ConstantMuProfile::new(&m, 3.325, 0.1, 5.0).unwrap();
        assert!((p.omega(0.0) - 3.325).abs() < 1e-12);
        assert!((p.omega(5.0) - 0.1).abs() < 1e-12);
        // numerical-derivative oracle for mu(t) = J omega_dot / Omega^3
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..100 {
            let t = 0.01 + 4.98 * k as f64 / 99.0;
            let w_dot = (p.omega(t + h) - p.omega(t - h)) / (2.0 * h);
            let gap = p.at(t).1;
            let mu = 2.0 * w_dot / gap.powi(3);
            worst = worst.max((mu - p.mu()).abs());
            assert!((p.omega_dot(t) - w_dot).abs() < 1e-7);
        }
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn table_validation() {
        assert!(TableProfile::new(vec![(0.0, 1.0), (1.0, 0.5)], 1.0).is_ok());
        assert!(TableProfile::new(vec![(0.0, 1.0), (0.5, 0.5)], 1.0).is_err());
        assert!(TableProfile::new(vec![(0.1, 1.0), (1.0, 0.5)], 1.0).is_err());
        assert!(
            TableProfile::new(vec![(0.0, 1.0), (0.6, 0.7), (0.6, 0.5), (1.0, 0.4)], 1.0).is_err()
        );
        assert!(TableProfile::new(vec![(0.0, 1.0), (1.0, -0.5)], 1.0).is_err());
    }

    #[test]
    fn table_interpolates() {
        let p = TableProfile::new(vec![(0.0, 2.0), (1.0, 1.0), (3.0, 0.0)], 3.0).unwrap();
        assert_eq!(p.omega(0.5), 1.5);
        assert_eq!(p.omega(2.0), 0.5);
        assert_eq!(p.omega(3.0), 0.0);
        assert_eq!(p.omega_dot(2.0), -0.5);
        assert_eq!(p.breakpoints(), vec![1.0]);
    }

    #[test]
    fn sinusoid_integral_matches_quadrature() {
        let s = Sinusoid {
            harmonic: 1,
            tau: 7.0,
        };
        let q = Quadrature {
            g: |t: f64| (2.0 * std::f64::consts::PI * t / 7.0).sin(),
        };
        for t in [0.0, 1.3, 3.5, 6.9, 7.0] {
            assert!((s.integral(t) - q.integral(t)).abs() < 1e-12);
        }
        assert!(s.integral(7.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_profile_hits_endpoints() {
        let m = MediumParams::with_coupling(2.0).unwrap();
        let s = Sinusoid {
            harmonic: 1,
            tau: 4.0,
        };
        let mu0 = ConstantMuProfile::new(&m, 3.325, 0.1, 4.0).unwrap().mu();
        let p = PerturbedMuProfile::new(&m, 3.325, 0.1, 4.0, 0.05 * mu0, &s).unwrap();
        assert!((p.omega(0.0) - 3.325).abs() < 1e-12);
        assert!((p.omega(4.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn perturbed_profile_rejects_negative_field() {
        let m = MediumParams::with_coupling(2.0).unwrap();
        let s = Sinusoid {
            harmonic: 1,
            tau: 4.0,
        };
        let mu0 = ConstantMuProfile::new(&m, 3.325, 0.1, 4.0).unwrap().mu();
        let r = PerturbedMuProfile::new(&m, 3.325, 0.1, 4.0, 3.0 * mu0, &s);
        assert!(matches!(r, Err(Error::ScheduleInfeasible { .. })));
    }
}
