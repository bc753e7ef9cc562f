//! Four-stroke cycle: hot isochore, demagnetization, cold isochore,
//! magnetization, and its limit cycle.
//!
//! Corners are named after the stroke they open: `A` starts the hot isochore,
//! `B` the demagnetization, `C` the cold isochore and `D` the magnetization.

use nalgebra::{Matrix3, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::adiabat::{adiabat_propagator, adiabaticity_delta, AdiabatSpec};
use crate::error::{invalid, require_positive, Error, Result};
use crate::isochore::{isochore_propagator, IsochoreSpec};
use crate::medium::{entropies, Bath, Entropies, FieldPoint, MediumParams, ObservableState};
use crate::propagator::AffinePropagator;
use crate::schedule::{NoiseParams, ScheduleKind};

/// Max-norm step below which the fixed-point iteration is converged.
pub const ITERATION_TOLERANCE: f64 = 1e-12;
pub const ITERATION_CAP: usize = 100_000;
/// Distance of an eigenvalue modulus from 1 below which the cycle map is
/// treated as non-contractive.
pub const UNIT_MODULUS_GAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub medium: MediumParams,
    pub omega_c: f64,
    pub omega_h: f64,
    pub bath_c: Bath,
    pub bath_h: Bath,
    pub tau_h: f64,
    pub tau_hc: f64,
    pub tau_c: f64,
    pub tau_ch: f64,
    pub schedule_hc: ScheduleKind,
    pub schedule_ch: ScheduleKind,
    pub noise: NoiseParams,
    /// Replaces the demagnetization by a frictionless scaling whose energy
    /// is additionally reduced by the factor `1 - delta`.
    pub injected_delta: Option<f64>,
}

impl CycleSpec {
    /// Constant-mu adiabats, no noise.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        medium: MediumParams,
        omega_c: f64,
        omega_h: f64,
        bath_c: Bath,
        bath_h: Bath,
        tau_h: f64,
        tau_hc: f64,
        tau_c: f64,
        tau_ch: f64,
    ) -> Self {
        Self {
            medium,
            omega_c,
            omega_h,
            bath_c,
            bath_h,
            tau_h,
            tau_hc,
            tau_c,
            tau_ch,
            schedule_hc: ScheduleKind::ConstantMu,
            schedule_ch: ScheduleKind::ConstantMu,
            noise: NoiseParams::none(),
            injected_delta: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_c >= 0.0 && self.omega_c.is_finite()) {
            return Err(invalid("omega_c", "must be >= 0"));
        }
        if !(self.omega_h > self.omega_c && self.omega_h.is_finite()) {
            return Err(invalid("omega_h", "must be > omega_c"));
        }
        if !(self.bath_h.temperature() > self.bath_c.temperature()) {
            return Err(invalid("T_h", "must be > T_c"));
        }
        require_positive("tau_h", self.tau_h)?;
        require_positive("tau_hc", self.tau_hc)?;
        require_positive("tau_c", self.tau_c)?;
        require_positive("tau_ch", self.tau_ch)?;
        self.noise.validate()?;
        if let Some(d) = self.injected_delta {
            if !(0.0..=1.0).contains(&d) {
                return Err(invalid("injected_delta", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn hot_field(&self) -> FieldPoint {
        FieldPoint::from_parts(self.omega_h, self.omega_h.hypot(self.medium.j()))
    }

    pub fn cold_field(&self) -> FieldPoint {
        FieldPoint::from_parts(self.omega_c, self.omega_c.hypot(self.medium.j()))
    }

    pub fn cycle_time(&self) -> f64 {
        self.tau_h + self.tau_hc + self.tau_c + self.tau_ch
    }

    pub fn demagnetization(&self) -> AdiabatSpec {
        AdiabatSpec::constant_mu(self.medium, self.omega_h, self.omega_c, self.tau_hc)
            .with_schedule(self.schedule_hc.clone())
            .with_noise(self.noise)
    }

    pub fn magnetization(&self) -> AdiabatSpec {
        AdiabatSpec::constant_mu(self.medium, self.omega_c, self.omega_h, self.tau_ch)
            .with_schedule(self.schedule_ch.clone())
            .with_noise(self.noise)
    }

    pub fn hot_isochore(&self) -> IsochoreSpec {
        IsochoreSpec {
            field: self.hot_field(),
            bath: self.bath_h,
            tau: self.tau_h,
            gamma_b: self.medium.gamma_b(),
        }
    }

    pub fn cold_isochore(&self) -> IsochoreSpec {
        IsochoreSpec {
            field: self.cold_field(),
            bath: self.bath_c,
            tau: self.tau_c,
            gamma_b: self.medium.gamma_b(),
        }
    }
}

/// Frictionless scaling with the energy shrunk by `1 - delta`.
pub fn injected_demagnetization(gap_start: f64, gap_end: f64, delta: f64) -> AffinePropagator {
    let r = gap_end / gap_start;
    AffinePropagator::from_adiabat(
        Matrix3::from_diagonal(&nalgebra::Vector3::new(r * (1.0 - delta), r, r)),
        r,
    )
}

/// The four stroke propagators, in cycle order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSegments {
    pub hot: AffinePropagator,
    pub demagnetization: AffinePropagator,
    pub cold: AffinePropagator,
    pub magnetization: AffinePropagator,
}

impl CycleSegments {
    pub fn build(spec: &CycleSpec) -> Result<Self> {
        spec.validate()?;
        let (demagnetization, magnetization) = adiabat_pair(spec)?;
        Ok(Self::with_adiabats(spec, demagnetization, magnetization))
    }

    /// Reuses precomputed adiabats; only the isochores are rebuilt.
    pub fn with_adiabats(
        spec: &CycleSpec,
        demagnetization: AffinePropagator,
        magnetization: AffinePropagator,
    ) -> Self {
        Self {
            hot: isochore_propagator(&spec.hot_isochore()),
            demagnetization,
            cold: isochore_propagator(&spec.cold_isochore()),
            magnetization,
        }
    }

    /// `U_ch U_c U_hc U_h`, mapping corner `A` onto itself.
    pub fn cycle(&self) -> AffinePropagator {
        self.magnetization
            .after(&self.cold)
            .after(&self.demagnetization)
            .after(&self.hot)
    }

    /// Corners `[A, B, C, D]` and the image of `A` after one full cycle.
    pub fn corners(&self, a: &Vector4<f64>) -> ([Vector4<f64>; 4], Vector4<f64>) {
        let b = self.hot.apply_vector(a);
        let c = self.demagnetization.apply_vector(&b);
        let d = self.cold.apply_vector(&c);
        ([*a, b, c, d], self.magnetization.apply_vector(&d))
    }

    /// `(Q_c, Q_h)` for the cycle started at `a`.
    pub fn heats(&self, a: &Vector4<f64>) -> (f64, f64) {
        let ([a, b, c, d], _) = self.corners(a);
        (d[0] - c[0], b[0] - a[0])
    }
}

/// Propagators of the demagnetization and magnetization strokes.
pub fn adiabat_pair(spec: &CycleSpec) -> Result<(AffinePropagator, AffinePropagator)> {
    let demag = match spec.injected_delta {
        Some(d) => injected_demagnetization(spec.hot_field().gap(), spec.cold_field().gap(), d),
        None => adiabat_propagator(&spec.demagnetization())?,
    };
    Ok((demag, adiabat_propagator(&spec.magnetization())?))
}

pub fn cycle_propagator(spec: &CycleSpec) -> Result<AffinePropagator> {
    Ok(CycleSegments::build(spec)?.cycle())
}

/// Largest eigenvalue modulus of the linear block.
pub fn spectral_radius(linear: &Matrix4<f64>) -> f64 {
    linear
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Fixed point of `x -> M x + b` by a direct solve of `(I - M) x = b`.
pub fn solve_fixed_point(cycle: &AffinePropagator) -> Result<Vector4<f64>> {
    let m = cycle.linear();
    if let Some(z) = m
        .complex_eigenvalues()
        .iter()
        .find(|z| (z.norm() - 1.0).abs() < UNIT_MODULUS_GAP || z.norm() > 1.0)
    {
        return Err(Error::NoUniqueLimitCycle { modulus: z.norm() });
    }
    (Matrix4::identity() - m)
        .lu()
        .solve(&cycle.offset())
        .ok_or(Error::NoUniqueLimitCycle { modulus: 1.0 })
}

/// Same as [`solve_fixed_point`] without the spectral check; for inner loops
/// where the cycle is known to contract.
pub fn solve_fixed_point_unchecked(cycle: &AffinePropagator) -> Option<Vector4<f64>> {
    (Matrix4::identity() - cycle.linear())
        .lu()
        .solve(&cycle.offset())
}

/// Repeated application of the cycle map from `start`. Returns the final
/// point, the number of iterations and whether the step fell below `tol`.
pub fn iterate_fixed_point(
    cycle: &AffinePropagator,
    start: Vector4<f64>,
    tol: f64,
    cap: usize,
) -> (Vector4<f64>, usize, bool) {
    let mut x = start;
    for n in 1..=cap {
        let next = cycle.apply_vector(&x);
        let step = (next - x).amax();
        x = next;
        if step < tol {
            return (x, n, true);
        }
    }
    (x, cap, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleMetrics {
    pub q_c: f64,
    pub q_h: f64,
    pub w: f64,
    pub p_c: f64,
    pub delta_hc: f64,
    pub delta_ch: f64,
    pub ds_u: f64,
    /// `[A, B, C, D]`.
    pub corners: [ObservableState; 4],
    pub entropies: [Entropies; 4],
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm distance between the direct and iterated fixed points.
    pub solver_gap: f64,
}

impl CycleMetrics {
    pub fn is_refrigerator(&self) -> bool {
        self.q_c > 0.0
    }
}

pub fn limit_cycle(spec: &CycleSpec) -> Result<CycleMetrics> {
    let segments = CycleSegments::build(spec)?;
    metrics_from_segments(spec, &segments)
}

/// Limit-cycle metrics given prebuilt segments of `spec`.
pub fn metrics_from_segments(spec: &CycleSpec, segments: &CycleSegments) -> Result<CycleMetrics> {
    let cycle = segments.cycle();
    let hot_thermal = Vector4::from(
        ObservableState::thermal(spec.hot_field(), spec.bath_h.temperature()).as_array(),
    );
    let direct = solve_fixed_point(&cycle);
    let (iterated, iterations, converged) =
        iterate_fixed_point(&cycle, hot_thermal, ITERATION_TOLERANCE, ITERATION_CAP);
    let a = direct?;
    let solver_gap = if converged {
        (a - iterated).amax()
    } else {
        f64::NAN
    };

    let ([va, vb, vc, vd], a_next) = segments.corners(&a);
    let q_h = vb[0] - va[0];
    let q_c = vd[0] - vc[0];
    // work done on the medium along the two adiabats; closure error of the
    // fixed point enters through `a_next`
    let w = (vc[0] - vb[0]) + (a_next[0] - vd[0]);

    let (hot, cold) = (spec.hot_field(), spec.cold_field());
    let state = |v: &Vector4<f64>, at| ObservableState::from_array([v[0], v[1], v[2], v[3]], at);
    let corners = [
        state(&va, hot),
        state(&vb, hot),
        state(&vc, cold),
        state(&vd, cold),
    ];
    let entropies = [
        entropies(&corners[0])?,
        entropies(&corners[1])?,
        entropies(&corners[2])?,
        entropies(&corners[3])?,
    ];

    Ok(CycleMetrics {
        q_c,
        q_h,
        w,
        p_c: q_c / spec.cycle_time(),
        delta_hc: adiabaticity_delta(&segments.demagnetization, hot.gap(), cold.gap()),
        delta_ch: adiabaticity_delta(&segments.magnetization, cold.gap(), hot.gap()),
        ds_u: -q_c / spec.bath_c.temperature() - q_h / spec.bath_h.temperature(),
        corners,
        entropies,
        converged,
        iterations,
        solver_gap,
    })
}

/// Stroke index within the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stroke {
    Hot,
    Demagnetization,
    Cold,
    Magnetization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub stroke: Stroke,
    pub state: ObservableState,
    pub entropies: Entropies,
}

/// Dense samples along one period of the limit cycle, `n_samples` per stroke
/// including both ends of each stroke.
pub fn cycle_trajectory(spec: &CycleSpec, n_samples: usize) -> Result<Vec<TrajectoryPoint>> {
    if n_samples < 2 {
        return Err(invalid("n_samples", "must be >= 2"));
    }
    let segments = CycleSegments::build(spec)?;
    let a = solve_fixed_point(&segments.cycle())?;
    let (corners, _) = segments.corners(&a);
    let mut out = Vec::with_capacity(4 * n_samples);
    let mut t0 = 0.0;

    let strokes = [
        Stroke::Hot,
        Stroke::Demagnetization,
        Stroke::Cold,
        Stroke::Magnetization,
    ];
    let durations = [spec.tau_h, spec.tau_hc, spec.tau_c, spec.tau_ch];
    for (k, (&stroke, &tau)) in strokes.iter().zip(&durations).enumerate() {
        let start = corners[k];
        for i in 0..n_samples {
            let s = tau * i as f64 / (n_samples - 1) as f64;
            let (prop, at) = partial_stroke(spec, stroke, s, tau)?;
            let v = prop.apply_vector(&start);
            let state = ObservableState::from_array([v[0], v[1], v[2], v[3]], at);
            out.push(TrajectoryPoint {
                t: t0 + s,
                stroke,
                entropies: entropies(&state)?,
                state,
            });
        }
        t0 += tau;
    }
    Ok(out)
}

/// Propagator over the first `s` of a stroke of length `tau`, and the field
/// reached at `s`.
fn partial_stroke(
    spec: &CycleSpec,
    stroke: Stroke,
    s: f64,
    tau: f64,
) -> Result<(AffinePropagator, FieldPoint)> {
    let j = spec.medium.j();
    let field = |w: f64| FieldPoint::from_parts(w, w.hypot(j));
    match stroke {
        Stroke::Hot => Ok((
            isochore_propagator(&IsochoreSpec {
                tau: s,
                ..spec.hot_isochore()
            }),
            spec.hot_field(),
        )),
        Stroke::Cold => Ok((
            isochore_propagator(&IsochoreSpec {
                tau: s,
                ..spec.cold_isochore()
            }),
            spec.cold_field(),
        )),
        Stroke::Demagnetization | Stroke::Magnetization => {
            let full = if stroke == Stroke::Demagnetization {
                spec.demagnetization()
            } else {
                spec.magnetization()
            };
            if s == 0.0 {
                return Ok((AffinePropagator::identity(), field(full.omega_start)));
            }
            if stroke == Stroke::Demagnetization {
                if let Some(d) = spec.injected_delta {
                    // the injected defect acts at the end of the stroke
                    let w = crate::adiabat::omega_at(&full, s)?;
                    let frac = if s >= tau { d } else { 0.0 };
                    return Ok((
                        injected_demagnetization(full.gap_start(), w.hypot(j), frac),
                        field(w),
                    ));
                }
            }
            let (prop, w) = crate::adiabat::partial_propagator(&full, s)?;
            Ok((prop, field(w)))
        }
    }
}
