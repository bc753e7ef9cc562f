//! Parameter sweeps built on the allocation search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabat::{check_winding_range, frictionless_solution, min_winding, AdiabatGeometry};
use crate::cycle::{
    adiabat_pair, metrics_from_segments, solve_fixed_point_unchecked, CycleMetrics, CycleSegments,
    CycleSpec,
};
use crate::error::{invalid, require_positive, Result};
use crate::medium::{Bath, MediumParams};
use crate::optimize::{search, AdiabatConstraint, OptimizeRequest, SearchOutcome};
use crate::schedule::NoiseParams;

/// Cooling below this fraction of `Omega_h` per cycle counts as none.
pub const REFRIGERATION_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: f64,
    /// Winding number when the point sits on the quantized grid.
    pub winding: Option<u32>,
    pub refrigerates: bool,
    /// Best candidate found, refrigerating or not.
    pub best: Option<SearchOutcome>,
}

impl SweepPoint {
    pub fn q_c(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.q_c)
    }

    pub fn p_c(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.metrics.p_c)
    }

    pub fn ds_u(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.metrics.ds_u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub label: String,
    pub axis_name: String,
    pub points: Vec<SweepPoint>,
}

fn refrigerates(q_c: f64, gap_h: f64) -> bool {
    q_c > REFRIGERATION_THRESHOLD * gap_h
}

/// Cycle time on the comb, with the winding number for quantized entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombTime {
    pub tau: f64,
    pub winding: Option<u32>,
}

/// Quantized cycle times `tau_iso + 2 tau_l` for `l_min..=l_max` and the
/// midpoints between neighbours.
pub fn comb_grid(base: &CycleSpec, tau_iso: f64, l_max: u32) -> Result<Vec<CombTime>> {
    require_positive("tau_iso", tau_iso)?;
    check_winding_range(l_max)?;
    let geometry = AdiabatGeometry::new(&base.medium, base.omega_h, base.omega_c, 1.0);
    let l_min = min_winding(&geometry)?;
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for l in l_min..=l_max {
        let tau = tau_iso + 2.0 * frictionless_solution(&geometry, l)?.tau_l;
        if let Some(p) = prev {
            out.push(CombTime {
                tau: 0.5 * (p + tau),
                winding: None,
            });
        }
        out.push(CombTime {
            tau,
            winding: Some(l),
        });
        prev = Some(tau);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombRequest {
    pub base: CycleSpec,
    /// Total isochore time; adiabats share the rest equally.
    pub tau_iso: f64,
    pub times: Vec<CombTime>,
    pub budget: usize,
    pub seed: u64,
}

/// Best heat per cycle as a function of cycle time with `tau_hc = tau_ch`
/// and a fixed isochore total; the search covers the isochore split.
pub fn comb_sweep(req: &CombRequest) -> Result<SweepResult> {
    if req.times.is_empty() {
        return Err(invalid("times", "must not be empty"));
    }
    require_positive("tau_iso", req.tau_iso)?;
    let gap_h = req.base.hot_field().gap();
    let points = req
        .times
        .par_iter()
        .enumerate()
        .map(|(k, ct)| {
            let adiabat = 0.5 * (ct.tau - req.tau_iso);
            if !(adiabat > 0.0) {
                return Ok(SweepPoint {
                    axis: ct.tau,
                    winding: ct.winding,
                    refrigerates: false,
                    best: None,
                });
            }
            let base = CycleSpec {
                tau_hc: adiabat,
                tau_ch: adiabat,
                ..req.base.clone()
            };
            let best = search(&OptimizeRequest {
                base,
                total_time: Some(ct.tau),
                adiabats: AdiabatConstraint::Fixed,
                budget: req.budget,
                seed: req.seed,
                stream: k as u64,
            })?;
            Ok(SweepPoint {
                axis: ct.tau,
                winding: ct.winding,
                refrigerates: best.as_ref().is_some_and(|b| refrigerates(b.q_c, gap_h)),
                best,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        label: format!(
            "T_c={} T_h={}",
            req.base.bath_c.temperature(),
            req.base.bath_h.temperature()
        ),
        axis_name: "tau".into(),
        points,
    })
}

/// How the hot-bath temperature follows `T_c` during a bisection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum TemperatureMode {
    /// `T_h = T_c Omega_h / (R Omega_c)`.
    FixedReversibility(f64),
    FixedHot(f64),
}

impl TemperatureMode {
    fn hot(&self, t_c: f64, gap_c: f64, gap_h: f64) -> f64 {
        match *self {
            TemperatureMode::FixedReversibility(r) => t_c * gap_h / (r * gap_c),
            TemperatureMode::FixedHot(t_h) => t_h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinTempPoint {
    pub l: u32,
    pub noise: NoiseParams,
    pub injected_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinTempRequest {
    /// Fields, coupling and bath conductances; temperatures and durations
    /// are overwritten.
    pub base: CycleSpec,
    pub mode: TemperatureMode,
    pub points: Vec<MinTempPoint>,
    /// `Gamma tau` on each isochore. Heat per cycle at fixed adiabats grows
    /// with both isochore times, so a large value gives the optimum.
    pub isochore_strength: f64,
    /// Bisection width and lowest temperature tried, in units of `J`.
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinTempResult {
    pub point: MinTempPoint,
    pub tau_l: f64,
    /// Lowest refrigerating `T_c` found; `None` if none up to the bracket top.
    pub t_c_min: Option<f64>,
    /// The lowest temperature tried still refrigerates.
    pub at_floor: bool,
    pub delta_hc: f64,
    pub delta_ch: f64,
    pub metrics: Option<CycleMetrics>,
}

/// `T_c` below which the cycle stops refrigerating, per point.
pub fn min_temperature_sweep(req: &MinTempRequest) -> Result<Vec<MinTempResult>> {
    require_positive("isochore_strength", req.isochore_strength)?;
    require_positive("resolution", req.resolution)?;
    req.points
        .par_iter()
        .map(|p| min_temperature_point(req, p))
        .collect()
}

fn min_temperature_point(req: &MinTempRequest, point: &MinTempPoint) -> Result<MinTempResult> {
    let geometry = AdiabatGeometry::new(&req.base.medium, req.base.omega_h, req.base.omega_c, 1.0);
    let tau_l = frictionless_solution(&geometry, point.l)?.tau_l;
    let (gap_c, gap_h) = (req.base.cold_field().gap(), req.base.hot_field().gap());
    let (gamma_c, gamma_h) = (req.base.bath_c.conductance(), req.base.bath_h.conductance());
    let mut template = CycleSpec {
        tau_hc: tau_l,
        tau_ch: tau_l,
        tau_c: req.isochore_strength / gamma_c,
        tau_h: req.isochore_strength / gamma_h,
        noise: point.noise,
        injected_delta: point.injected_delta,
        ..req.base.clone()
    };
    template.validate()?;
    let (demag, magnet) = adiabat_pair(&template)?;

    let spec_at = |t_c: f64| -> Result<CycleSpec> {
        let t_h = req.mode.hot(t_c, gap_c, gap_h);
        Ok(CycleSpec {
            bath_c: Bath::new(t_c, gamma_c)?,
            bath_h: Bath::new(t_h, gamma_h)?,
            ..template.clone()
        })
    };
    let cools = |t_c: f64| -> Result<bool> {
        let spec = spec_at(t_c)?;
        let segments = CycleSegments::with_adiabats(&spec, demag, magnet);
        Ok(solve_fixed_point_unchecked(&segments.cycle())
            .map(|a| refrigerates(segments.heats(&a).0, gap_h))
            .unwrap_or(false))
    };

    let j = req.base.medium.j();
    let width = req.resolution * j;
    let ceiling = match req.mode {
        TemperatureMode::FixedHot(t_h) => t_h * (1.0 - 1e-9),
        TemperatureMode::FixedReversibility(_) => 64.0 * gap_c,
    };
    let mut hi = gap_c.min(ceiling);
    while !cools(hi)? {
        if hi >= ceiling {
            template.bath_c = req.base.bath_c;
            return Ok(MinTempResult {
                point: *point,
                tau_l,
                t_c_min: None,
                at_floor: false,
                delta_hc: delta_of(&template, &demag, true),
                delta_ch: delta_of(&template, &magnet, false),
                metrics: None,
            });
        }
        hi = (2.0 * hi).min(ceiling);
    }
    let mut lo = width;
    let at_floor = cools(lo)?;
    if at_floor {
        hi = lo;
    } else {
        while hi - lo > width {
            let mid = 0.5 * (lo + hi);
            if cools(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let spec = spec_at(hi)?;
    let metrics =
        metrics_from_segments(&spec, &CycleSegments::with_adiabats(&spec, demag, magnet))?;
    Ok(MinTempResult {
        point: *point,
        tau_l,
        t_c_min: Some(hi),
        at_floor,
        delta_hc: metrics.delta_hc,
        delta_ch: metrics.delta_ch,
        metrics: Some(metrics),
    })
}

fn delta_of(spec: &CycleSpec, prop: &crate::propagator::AffinePropagator, demag: bool) -> f64 {
    let (c, h) = (spec.cold_field().gap(), spec.hot_field().gap());
    if demag {
        crate::adiabat::adiabaticity_delta(prop, h, c)
    } else {
        crate::adiabat::adiabaticity_delta(prop, c, h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JScalingRequest {
    pub j_values: Vec<f64>,
    pub j_over_tc: Vec<f64>,
    /// `R = T_c Omega_h / (T_h Omega_c)`.
    pub reversibility: f64,
    pub tc_over_th: f64,
    pub omega_c: f64,
    /// Conductance of both baths.
    pub conductance: f64,
    pub gamma_b: f64,
    pub l_max: u32,
    pub noise: NoiseParams,
    pub budget: usize,
    pub seed: u64,
}

impl JScalingRequest {
    pub fn validate(&self) -> Result<()> {
        if !(self.reversibility > 1.0) {
            return Err(invalid("reversibility", "must be > 1"));
        }
        if !(self.tc_over_th > 0.0 && self.tc_over_th < 1.0) {
            return Err(invalid("tc_over_th", "must lie in (0, 1)"));
        }
        if self.j_values.is_empty() || self.j_over_tc.is_empty() {
            return Err(invalid("j_values", "and j_over_tc must not be empty"));
        }
        if self.budget == 0 {
            return Err(invalid("budget", "must be >= 1"));
        }
        require_positive("conductance", self.conductance)?;
        require_positive("omega_c", self.omega_c)?;
        check_winding_range(self.l_max)?;
        self.noise.validate()?;
        for &x in &self.j_over_tc {
            require_positive("j_over_tc", x)?;
        }
        for &j in &self.j_values {
            MediumParams::new(j, self.gamma_b)?;
            self.omega_h(j)?;
        }
        Ok(())
    }

    /// Hot field giving `Omega_h / Omega_c = R / (T_c / T_h)` at coupling `j`.
    pub fn omega_h(&self, j: f64) -> Result<f64> {
        let gap_c = self.omega_c.hypot(j);
        let gap_h = self.reversibility / self.tc_over_th * gap_c;
        if gap_h <= gap_c {
            return Err(invalid("reversibility", "must exceed T_c/T_h"));
        }
        Ok((gap_h * gap_h - j * j).sqrt())
    }
}

/// Best cooling power over `J / T_c` for each `J`, at fixed `R` and
/// `T_c / T_h`, with adiabats on the quantized grid.
pub fn j_scaling_sweep(req: &JScalingRequest) -> Result<Vec<SweepResult>> {
    req.validate()?;
    let n = req.j_over_tc.len();
    req.j_values
        .iter()
        .enumerate()
        .map(|(ji, &j)| {
            let medium = MediumParams::new(j, req.gamma_b)?;
            let omega_h = req.omega_h(j)?;
            let points = req
                .j_over_tc
                .par_iter()
                .enumerate()
                .map(|(k, &x)| {
                    require_positive("j_over_tc", x)?;
                    let t_c = j / x;
                    let mut base = CycleSpec::new(
                        medium,
                        req.omega_c,
                        omega_h,
                        Bath::new(t_c, req.conductance)?,
                        Bath::new(t_c / req.tc_over_th, req.conductance)?,
                        1.0,
                        1.0,
                        1.0,
                        1.0,
                    );
                    base.noise = req.noise;
                    let best = search(&OptimizeRequest {
                        base,
                        total_time: None,
                        adiabats: AdiabatConstraint::FrictionlessGrid {
                            l_max: req.l_max,
                            symmetric: true,
                        },
                        budget: req.budget,
                        seed: req.seed,
                        stream: (ji * n + k) as u64,
                    })?;
                    let gap_h = omega_h.hypot(j);
                    Ok(SweepPoint {
                        axis: x,
                        winding: None,
                        refrigerates: best.as_ref().is_some_and(|b| refrigerates(b.q_c, gap_h)),
                        best,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepResult {
                label: format!("J={j}"),
                axis_name: "J/T_c".into(),
                points,
            })
        })
        .collect()
}

/// Largest spread of `ln P_c - 2 ln J` across curves at shared axis values
/// where every curve refrigerates.
pub fn collapse_spread(results: &[SweepResult], j_values: &[f64]) -> Option<f64> {
    let first = results.first()?;
    let mut worst: Option<f64> = None;
    for (k, p0) in first.points.iter().enumerate() {
        let vals: Option<Vec<f64>> = results
            .iter()
            .zip(j_values)
            .map(|(r, &j)| {
                let p = r.points.get(k)?;
                if p.axis != p0.axis || !p.refrigerates {
                    return None;
                }
                Some(p.p_c()?.ln() - 2.0 * j.ln())
            })
            .collect();
        if let Some(v) = vals {
            let spread = v.iter().cloned().fold(f64::MIN, f64::max)
                - v.iter().cloned().fold(f64::MAX, f64::min);
            worst = Some(worst.map_or(spread, |w: f64| w.max(spread)));
        }
    }
    worst
}
