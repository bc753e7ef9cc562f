//! Time allocation: analytic splits and a seeded random search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabat::{adiabat_propagator, frictionless_solution, min_winding, AdiabatGeometry};
use crate::cycle::{
    adiabat_pair, metrics_from_segments, solve_fixed_point_unchecked, CycleMetrics, CycleSegments,
    CycleSpec,
};
use crate::error::{invalid, require_positive, Error, Result};
use crate::propagator::AffinePropagator;

/// `ln(cosh x - 1)` without overflow.
fn ln_cosh_m1(x: f64) -> f64 {
    let y = 0.5 * x.abs();
    // cosh x - 1 = 2 sinh^2(x/2)
    let ln_sinh = if y > 20.0 {
        y - std::f64::consts::LN_2 + (-(-2.0 * y).exp()).ln_1p()
    } else {
        y.sinh().ln()
    };
    std::f64::consts::LN_2 + 2.0 * ln_sinh
}

/// Relative residual of `Gamma_h (cosh(Gamma_c tau_c) - 1) = Gamma_c (cosh(Gamma_h tau_h) - 1)`.
pub fn isochore_split_residual(gamma_c: f64, gamma_h: f64, tau_c: f64, tau_h: f64) -> f64 {
    let lhs = gamma_h.ln() + ln_cosh_m1(gamma_c * tau_c);
    let rhs = gamma_c.ln() + ln_cosh_m1(gamma_h * tau_h);
    (lhs - rhs).exp_m1().abs()
}

/// Split of `tau_iso` between the cold and hot isochores that maximizes the
/// heat-transfer factor at fixed total isochore time. Returns `(tau_c, tau_h)`.
pub fn optimal_isochore_split(gamma_c: f64, gamma_h: f64, tau_iso: f64) -> Result<(f64, f64)> {
    require_positive("Gamma_c", gamma_c)?;
    require_positive("Gamma_h", gamma_h)?;
    require_positive("tau_iso", tau_iso)?;
    // increasing in tau_c; negative at 0, positive at tau_iso
    let g = |tau_c: f64| {
        (gamma_h.ln() + ln_cosh_m1(gamma_c * tau_c))
            - (gamma_c.ln() + ln_cosh_m1(gamma_h * (tau_iso - tau_c)))
    };
    let (mut lo, mut hi) = (0.0, tau_iso);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_c = 0.5 * (lo + hi);
    Ok((tau_c, tau_iso - tau_c))
}

/// `2 sinh x - 2 x`, accurate for small `x`.
fn sinh_excess(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x * x2 * (1.0 / 3.0 + x2 * (1.0 / 60.0 + x2 / 2520.0))
    } else {
        2.0 * (x.sinh() - x)
    }
}

/// Relative residual of `2x + Gamma tau_adi = 2 sinh x`.
pub fn total_split_residual(gamma: f64, tau_adi: f64, x: f64) -> f64 {
    let target = gamma * tau_adi;
    (sinh_excess(x) - target).abs() / target
}

/// `x = Gamma tau_c = Gamma tau_h` maximizing the cooling power for equal
/// conductances when the adiabats take `tau_adi` in total.
pub fn optimal_total_split(gamma: f64, tau_adi: f64) -> Result<f64> {
    require_positive("Gamma", gamma)?;
    require_positive("tau_adi", tau_adi)?;
    let target = gamma * tau_adi;
    let mut hi = (3.0 * target).cbrt().max(1.0);
    while sinh_excess(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sinh_excess(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// How adiabat durations are chosen during the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AdiabatConstraint {
    /// Both adiabat durations drawn independently.
    Free,
    /// `tau_hc = tau_ch`, drawn.
    Symmetric,
    /// Durations taken from the base spec.
    Fixed,
    /// Durations restricted to quantized values `tau_l`, `l <= l_max`.
    FrictionlessGrid { l_max: u32, symmetric: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeRequest {
    /// Physical parameters; its durations are used only under
    /// [`AdiabatConstraint::Fixed`].
    pub base: CycleSpec,
    /// Fixed cycle time (maximize `Q_c`) or `None` (maximize `P_c`).
    pub total_time: Option<f64>,
    pub adiabats: AdiabatConstraint,
    pub budget: usize,
    pub seed: u64,
    /// Sweep point index; selects an independent random stream.
    pub stream: u64,
}

impl OptimizeRequest {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(invalid("budget", "must be >= 1"));
        }
        if let Some(t) = self.total_time {
            require_positive("total_time", t)?;
        }
        if let AdiabatConstraint::FrictionlessGrid { l_max, .. } = self.adiabats {
            crate::adiabat::check_winding_range(l_max)?;
            let l_min = min_winding(&self.geometry())?;
            if l_max < l_min {
                return Err(invalid("l_max", format!("must be >= {l_min}")));
            }
        }
        let mut base = self.base.clone();
        for tau in [&mut base.tau_h, &mut base.tau_c] {
            *tau = 1.0;
        }
        if self.adiabats != AdiabatConstraint::Fixed {
            base.tau_hc = 1.0;
            base.tau_ch = 1.0;
        }
        base.validate()
    }

    fn geometry(&self) -> AdiabatGeometry {
        AdiabatGeometry::new(&self.base.medium, self.base.omega_h, self.base.omega_c, 1.0)
    }

    fn gamma_ref(&self) -> f64 {
        0.5 * (self.base.bath_c.conductance() + self.base.bath_h.conductance())
    }
}

/// Durations of the four strokes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub tau_h: f64,
    pub tau_hc: f64,
    pub tau_c: f64,
    pub tau_ch: f64,
}

impl Allocation {
    pub fn total(&self) -> f64 {
        self.tau_h + self.tau_hc + self.tau_c + self.tau_ch
    }

    pub fn apply(&self, spec: &CycleSpec) -> CycleSpec {
        CycleSpec {
            tau_h: self.tau_h,
            tau_hc: self.tau_hc,
            tau_c: self.tau_c,
            tau_ch: self.tau_ch,
            ..spec.clone()
        }
    }

    fn is_valid(&self) -> bool {
        [self.tau_h, self.tau_hc, self.tau_c, self.tau_ch]
            .iter()
            .all(|t| t.is_finite() && *t > 0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct AdiabatChoice {
    tau_hc: f64,
    tau_ch: f64,
}

/// Best candidate of a search, refrigerating or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub allocation: Allocation,
    pub objective: f64,
    pub q_c: f64,
    pub candidate: usize,
    pub metrics: CycleMetrics,
    pub spec: CycleSpec,
}

impl SearchOutcome {
    pub fn is_refrigerator(&self) -> bool {
        self.q_c > 0.0
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for candidate `index` of sweep point `stream`.
pub fn candidate_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ index);
    ChaCha8Rng::seed_from_u64(key)
}

struct Searcher<'a> {
    req: &'a OptimizeRequest,
    geometry: AdiabatGeometry,
    /// Adiabat pairs shared by all candidates (fixed or per winding number).
    fixed: Option<(AffinePropagator, AffinePropagator)>,
    grid: Vec<(u32, f64, AffinePropagator, AffinePropagator)>,
    seeds: Vec<Allocation>,
}

impl<'a> Searcher<'a> {
    fn new(req: &'a OptimizeRequest) -> Result<Self> {
        req.validate()?;
        let geometry = req.geometry();
        let mut searcher = Self {
            req,
            geometry,
            fixed: None,
            grid: Vec::new(),
            seeds: Vec::new(),
        };
        match req.adiabats {
            AdiabatConstraint::Fixed => searcher.fixed = Some(adiabat_pair(&req.base)?),
            AdiabatConstraint::FrictionlessGrid { l_max, .. } => {
                let l_min = min_winding(&geometry)?;
                searcher.grid = (l_min..=l_max)
                    .into_par_iter()
                    .map(|l| {
                        let tau = frictionless_solution(&geometry, l)?.tau_l;
                        let spec = CycleSpec {
                            tau_hc: tau,
                            tau_ch: tau,
                            ..req.base.clone()
                        };
                        let (d, m) = adiabat_pair(&spec)?;
                        Ok((l, tau, d, m))
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            _ => {}
        }
        searcher.seeds = searcher.analytic_seeds()?;
        Ok(searcher)
    }

    fn isochores_for(&self, adiabat_time: f64) -> Result<Option<(f64, f64)>> {
        let (gc, gh) = (
            self.req.base.bath_c.conductance(),
            self.req.base.bath_h.conductance(),
        );
        let tau_iso = match self.req.total_time {
            Some(total) => total - adiabat_time,
            None => {
                2.0 * optimal_total_split(self.req.gamma_ref(), adiabat_time)?
                    / self.req.gamma_ref()
            }
        };
        if !(tau_iso > 0.0) {
            return Ok(None);
        }
        optimal_isochore_split(gc, gh, tau_iso).map(Some)
    }

    fn analytic_seeds(&self) -> Result<Vec<Allocation>> {
        let mut choices = Vec::new();
        match self.req.adiabats {
            AdiabatConstraint::Fixed => choices.push(AdiabatChoice {
                tau_hc: self.req.base.tau_hc,
                tau_ch: self.req.base.tau_ch,
            }),
            AdiabatConstraint::FrictionlessGrid { .. } => {
                for &(_, tau, _, _) in &self.grid {
                    choices.push(AdiabatChoice {
                        tau_hc: tau,
                        tau_ch: tau,
                    });
                }
            }
            AdiabatConstraint::Free | AdiabatConstraint::Symmetric => {
                let l_min = min_winding(&self.geometry)?;
                let mut tau = frictionless_solution(&self.geometry, l_min)?.tau_l;
                if let Some(total) = self.req.total_time {
                    if 2.0 * tau >= total {
                        tau = 0.25 * total;
                    }
                }
                choices.push(AdiabatChoice {
                    tau_hc: tau,
                    tau_ch: tau,
                });
            }
        }
        let mut seeds = Vec::new();
        for c in choices {
            if let Some((tau_c, tau_h)) = self.isochores_for(c.tau_hc + c.tau_ch)? {
                seeds.push(Allocation {
                    tau_h,
                    tau_hc: c.tau_hc,
                    tau_c,
                    tau_ch: c.tau_ch,
                });
            }
        }
        Ok(seeds)
    }

    fn log_uniform(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = (1e-2 / self.req.gamma_ref(), 1e3 / self.req.gamma_ref());
        (lo.ln() + rng.gen::<f64>() * (hi / lo).ln()).exp()
    }

    fn random_allocation(&self, index: usize) -> Option<Allocation> {
        let mut rng = candidate_rng(self.req.seed, self.req.stream, index as u64);
        let tau_h = self.log_uniform(&mut rng);
        let tau_c = self.log_uniform(&mut rng);
        let base = &self.req.base;
        let (tau_hc, tau_ch, adiabats_fixed) = match self.req.adiabats {
            AdiabatConstraint::Fixed => (base.tau_hc, base.tau_ch, true),
            AdiabatConstraint::FrictionlessGrid { symmetric, .. } => {
                let n = self.grid.len();
                let a = rng.gen_range(0..n);
                let b = if symmetric { a } else { rng.gen_range(0..n) };
                (self.grid[a].1, self.grid[b].1, true)
            }
            AdiabatConstraint::Symmetric => {
                let t = self.log_uniform(&mut rng);
                (t, t, false)
            }
            AdiabatConstraint::Free => (
                self.log_uniform(&mut rng),
                self.log_uniform(&mut rng),
                false,
            ),
        };
        let alloc = match self.req.total_time {
            None => Allocation {
                tau_h,
                tau_hc,
                tau_c,
                tau_ch,
            },
            Some(total) if adiabats_fixed => {
                let tau_iso = total - tau_hc - tau_ch;
                if !(tau_iso > 0.0) {
                    return None;
                }
                let s = tau_iso / (tau_h + tau_c);
                Allocation {
                    tau_h: tau_h * s,
                    tau_hc,
                    tau_c: tau_c * s,
                    tau_ch,
                }
            }
            Some(total) => {
                let s = total / (tau_h + tau_c + tau_hc + tau_ch);
                Allocation {
                    tau_h: tau_h * s,
                    tau_hc: tau_hc * s,
                    tau_c: tau_c * s,
                    tau_ch: tau_ch * s,
                }
            }
        };
        alloc.is_valid().then_some(alloc)
    }

    fn candidate(&self, index: usize) -> Option<Allocation> {
        match self.seeds.get(index) {
            Some(a) => Some(*a),
            None => self.random_allocation(index),
        }
    }

    fn adiabats(
        &self,
        alloc: &Allocation,
        spec: &CycleSpec,
    ) -> Result<(AffinePropagator, AffinePropagator)> {
        if let Some(pair) = self.fixed {
            return Ok(pair);
        }
        if !self.grid.is_empty() {
            let find = |tau: f64| self.grid.iter().find(|g| g.1 == tau);
            if let (Some(d), Some(m)) = (find(alloc.tau_hc), find(alloc.tau_ch)) {
                return Ok((d.2, m.3));
            }
        }
        let demag = match spec.injected_delta {
            Some(_) => adiabat_pair(spec)?.0,
            None => adiabat_propagator(&spec.demagnetization())?,
        };
        Ok((demag, adiabat_propagator(&spec.magnetization())?))
    }

    fn segments(&self, alloc: &Allocation) -> Result<(CycleSpec, CycleSegments)> {
        let spec = alloc.apply(&self.req.base);
        let (d, m) = self.adiabats(alloc, &spec)?;
        let segments = CycleSegments::with_adiabats(&spec, d, m);
        Ok((spec, segments))
    }

    /// `(objective, Q_c)` of a candidate.
    fn evaluate(&self, alloc: &Allocation) -> Option<(f64, f64)> {
        let (_, segments) = self.segments(alloc).ok()?;
        let a = solve_fixed_point_unchecked(&segments.cycle())?;
        let (q_c, _) = segments.heats(&a);
        let objective = match self.req.total_time {
            Some(_) => q_c,
            None => q_c / alloc.total(),
        };
        objective.is_finite().then_some((objective, q_c))
    }
}

fn better(a: (usize, f64), b: (usize, f64)) -> (usize, f64) {
    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}

/// Best candidate among `budget` (analytic seeds first, then random draws),
/// whether or not it refrigerates.
pub fn search(req: &OptimizeRequest) -> Result<Option<SearchOutcome>> {
    let searcher = Searcher::new(req)?;
    let best = (0..req.budget)
        .into_par_iter()
        .filter_map(|i| {
            let alloc = searcher.candidate(i)?;
            searcher.evaluate(&alloc).map(|(obj, _)| (i, obj))
        })
        .reduce_with(better);
    let Some((index, objective)) = best else {
        return Ok(None);
    };
    let allocation = searcher.candidate(index).expect("candidate was evaluated");
    let (spec, segments) = searcher.segments(&allocation)?;
    let metrics = metrics_from_segments(&spec, &segments)?;
    Ok(Some(SearchOutcome {
        allocation,
        objective,
        q_c: metrics.q_c,
        candidate: index,
        metrics,
        spec,
    }))
}

/// Best refrigerating allocation; fails with
/// [`Error::NoFeasibleRefrigerator`] when no candidate extracts heat.
pub fn optimize_allocation(req: &OptimizeRequest) -> Result<SearchOutcome> {
    match search(req)? {
        Some(out) if out.is_refrigerator() => Ok(out),
        Some(out) => Err(Error::NoFeasibleRefrigerator { best_q_c: out.q_c }),
        None => Err(Error::NoFeasibleRefrigerator {
            best_q_c: f64::NEG_INFINITY,
        }),
    }
}
