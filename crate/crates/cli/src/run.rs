//! Validation of a parsed configuration and execution of one mode.

use otto_core::adiabat::{
    adiabaticity_delta, frictionless_family, min_winding, AdiabatGeometry, MAX_WINDING,
};
use otto_core::cycle::{
    adiabat_pair, cycle_propagator, cycle_trajectory, limit_cycle, spectral_radius, CycleMetrics,
    CycleSpec,
};
use otto_core::optimize::{optimize_allocation, AdiabatConstraint, OptimizeRequest};
use otto_core::schedule::NoiseParams;
use otto_core::sweep::{
    collapse_spread, comb_grid, comb_sweep, j_scaling_sweep, min_temperature_sweep, CombRequest,
    CombTime, JScalingRequest, MinTempPoint, MinTempRequest,
};
use otto_core::thermo::thermo_bounds;
use serde_json::json;

use crate::config::{ConfigFile, Mode};
use crate::error::CliError;
use crate::output::{num, opt_num, Artifacts, ResultsDocument, Series, Software};

/// Durations used where a mode overwrites them anyway.
const PLACEHOLDER_DURATION: f64 = 1.0;

/// Largest trajectory resolution per stroke.
const MAX_SAMPLES: usize = 1_000_000;

fn check_winding(name: &str, l: u32) -> Result<(), CliError> {
    if l > MAX_WINDING {
        return Err(CliError::Validation(format!(
            "{name} must be <= {MAX_WINDING} (got {l})"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Plan {
    Cycle(CycleSpec),
    LimitCycle(CycleSpec),
    Trajectory(CycleSpec, usize),
    Frictionless(CycleSpec, u32),
    Optimize(OptimizeRequest),
    Comb(CombRequest),
    MinTemp(MinTempRequest),
    JScaling(JScalingRequest),
}

/// A configuration checked against every precondition of its mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub config: ConfigFile,
    plan: Plan,
}

fn section<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::Validation(format!("section `{name}` is required for this mode")))
}

/// Resolves and validates `config` for `mode`; `seed` overrides the
/// document's seed.
pub fn validate(mode: Mode, config: ConfigFile, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let seed = seed.or(config.seed).unwrap_or(0);
    let plan = match mode {
        Mode::Cycle => Plan::Cycle(section(&config.cycle, "cycle")?.spec(None)?),
        Mode::LimitCycle => Plan::LimitCycle(section(&config.cycle, "cycle")?.spec(None)?),
        Mode::Trajectory => {
            let samples = config.trajectory.clone().unwrap_or_default().samples;
            if !(2..=MAX_SAMPLES).contains(&samples) {
                return Err(CliError::Validation(format!(
                    "trajectory.samples must lie in [2, {MAX_SAMPLES}]"
                )));
            }
            Plan::Trajectory(section(&config.cycle, "cycle")?.spec(None)?, samples)
        }
        Mode::Frictionless => {
            let l_max = config.frictionless.clone().unwrap_or_default().l_max;
            check_winding("frictionless.l_max", l_max)?;
            let spec = section(&config.cycle, "cycle")?.spec(Some(PLACEHOLDER_DURATION))?;
            Plan::Frictionless(spec, l_max)
        }
        Mode::Optimize => {
            let opt = config.optimize.clone().unwrap_or_default();
            let adiabats: AdiabatConstraint = opt.adiabats.into();
            let fallback = (adiabats != AdiabatConstraint::Fixed).then_some(PLACEHOLDER_DURATION);
            let req = OptimizeRequest {
                base: section(&config.cycle, "cycle")?.spec(fallback)?,
                total_time: opt.total_time,
                adiabats,
                budget: opt.budget,
                seed,
                stream: 0,
            };
            req.validate()?;
            Plan::Optimize(req)
        }
        Mode::Comb => {
            let comb = section(&config.comb, "comb")?;
            check_winding("comb.l_max", comb.l_max)?;
            let base = section(&config.cycle, "cycle")?.spec(Some(PLACEHOLDER_DURATION))?;
            if !(comb.tau_iso.is_finite() && comb.tau_iso > 0.0) {
                return Err(CliError::Validation(format!(
                    "comb.tau_iso must be > 0 (got {})",
                    comb.tau_iso
                )));
            }
            if comb.budget == 0 {
                return Err(CliError::Validation("comb.budget must be >= 1".into()));
            }
            let times = match &comb.times {
                Some(ts) => {
                    if ts.is_empty() || ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                        return Err(CliError::Validation(
                            "comb.times must be non-empty and > 0".into(),
                        ));
                    }
                    ts.iter()
                        .map(|&tau| CombTime { tau, winding: None })
                        .collect()
                }
                None => comb_grid(&base, comb.tau_iso, comb.l_max)?,
            };
            if times.is_empty() {
                return Err(CliError::Validation(
                    "comb.l_max is below the smallest winding number".into(),
                ));
            }
            Plan::Comb(CombRequest {
                base,
                tau_iso: comb.tau_iso,
                times,
                budget: comb.budget,
                seed,
            })
        }
        Mode::MinTemp => {
            let mt = section(&config.min_temp, "min_temp")?;
            let base = section(&config.cycle, "cycle")?.spec(Some(PLACEHOLDER_DURATION))?;
            if mt.points.is_empty() {
                return Err(CliError::Validation(
                    "min_temp.points must not be empty".into(),
                ));
            }
            let points = mt
                .points
                .iter()
                .map(|p| {
                    if p.l == 0 {
                        return Err(CliError::Validation(
                            "min_temp.points[].l must be >= 1".into(),
                        ));
                    }
                    check_winding("min_temp.points[].l", p.l)?;
                    if let Some(d) = p.injected_delta {
                        if !(0.0..=1.0).contains(&d) {
                            return Err(CliError::Validation(
                                "min_temp.points[].injected_delta must lie in [0, 1]".into(),
                            ));
                        }
                    }
                    Ok(MinTempPoint {
                        l: p.l,
                        noise: NoiseParams::new(p.gamma_p, p.gamma_a)?,
                        injected_delta: p.injected_delta,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            for (name, v) in [
                ("isochore_strength", mt.isochore_strength),
                ("resolution", mt.resolution),
            ] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::Validation(format!(
                        "min_temp.{name} must be > 0 (got {v})"
                    )));
                }
            }
            Plan::MinTemp(MinTempRequest {
                base,
                mode: mt.mode.into(),
                points,
                isochore_strength: mt.isochore_strength,
                resolution: mt.resolution,
            })
        }
        Mode::JScaling => {
            let js = section(&config.j_scaling, "j_scaling")?;
            if js.j_values.is_empty() || js.j_over_tc.is_empty() {
                return Err(CliError::Validation(
                    "j_scaling.j_values and j_over_tc must not be empty".into(),
                ));
            }
            if js.budget == 0 {
                return Err(CliError::Validation("j_scaling.budget must be >= 1".into()));
            }
            let req = JScalingRequest {
                j_values: js.j_values.clone(),
                j_over_tc: js.j_over_tc.clone(),
                reversibility: js.reversibility,
                tc_over_th: js.tc_over_th,
                omega_c: js.omega_c,
                conductance: js.conductance,
                gamma_b: js.gamma_b,
                l_max: js.l_max,
                noise: NoiseParams::new(js.gamma_p, js.gamma_a)?,
                budget: js.budget,
                seed,
            };
            if req.j_over_tc.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(CliError::Validation(
                    "j_scaling.j_over_tc values must be > 0".into(),
                ));
            }
            if !(req.tc_over_th > 0.0 && req.tc_over_th < 1.0) {
                return Err(CliError::Validation(format!(
                    "j_scaling.tc_over_th must lie in (0, 1) (got {})",
                    req.tc_over_th
                )));
            }
            for &j in &req.j_values {
                otto_core::MediumParams::new(j, req.gamma_b)?;
                req.omega_h(j)?;
            }
            if req.reversibility <= 1.0 {
                return Err(CliError::Validation(format!(
                    "j_scaling.reversibility must be > 1 (got {})",
                    req.reversibility
                )));
            }
            check_winding("j_scaling.l_max", req.l_max)?;
            req.validate()?;
            Plan::JScaling(req)
        }
    };
    Ok(RunConfig {
        mode,
        seed,
        config,
        plan,
    })
}

/// Executes a validated configuration.
pub fn run(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (result, series) = match &cfg.plan {
        Plan::Cycle(spec) => run_cycle(spec)?,
        Plan::LimitCycle(spec) => {
            let m = limit_cycle(spec)?;
            let s = corner_series(&m);
            (json!({ "spec": spec, "metrics": m }), vec![s])
        }
        Plan::Trajectory(spec, n) => run_trajectory(spec, *n)?,
        Plan::Frictionless(spec, l_max) => run_frictionless(spec, *l_max)?,
        Plan::Optimize(req) => {
            let out = optimize_allocation(req)?;
            let mut s = Series::new(
                "optimum",
                &[
                    "tau_h[time]",
                    "tau_hc[time]",
                    "tau_c[time]",
                    "tau_ch[time]",
                    "Q_c[energy]",
                    "P_c[energy/time]",
                    "dS_u[k_B]",
                ],
            );
            let a = out.allocation;
            s.push(
                [
                    a.tau_h,
                    a.tau_hc,
                    a.tau_c,
                    a.tau_ch,
                    out.q_c,
                    out.metrics.p_c,
                    out.metrics.ds_u,
                ]
                .map(num)
                .to_vec(),
            );
            (json!({ "request": req, "outcome": out }), vec![s])
        }
        Plan::Comb(req) => {
            let r = comb_sweep(req)?;
            let mut s = Series::new(
                "comb",
                &[
                    "tau[time]",
                    "l",
                    "refrigerates",
                    "Q_c[energy]",
                    "P_c[energy/time]",
                    "dS_u[k_B]",
                    "tau_h[time]",
                    "tau_c[time]",
                ],
            );
            for p in &r.points {
                let alloc = p.best.as_ref().map(|b| b.allocation);
                s.push(vec![
                    num(p.axis),
                    p.winding.map(|l| l.to_string()).unwrap_or_default(),
                    p.refrigerates.to_string(),
                    opt_num(p.q_c()),
                    opt_num(p.p_c()),
                    opt_num(p.ds_u()),
                    opt_num(alloc.map(|a| a.tau_h)),
                    opt_num(alloc.map(|a| a.tau_c)),
                ]);
            }
            (json!({ "sweep": r }), vec![s])
        }
        Plan::MinTemp(req) => {
            let r = min_temperature_sweep(req)?;
            let mut s = Series::new(
                "min_temp",
                &[
                    "l",
                    "gamma_p",
                    "gamma_a",
                    "injected_delta",
                    "T_c_min[energy]",
                    "at_floor",
                    "delta_hc",
                    "delta_ch",
                ],
            );
            for p in &r {
                s.push(vec![
                    p.point.l.to_string(),
                    num(p.point.noise.gamma_p),
                    num(p.point.noise.gamma_a),
                    opt_num(p.point.injected_delta),
                    opt_num(p.t_c_min),
                    p.at_floor.to_string(),
                    num(p.delta_hc),
                    num(p.delta_ch),
                ]);
            }
            (json!({ "request": req, "points": r }), vec![s])
        }
        Plan::JScaling(req) => {
            let sweeps = j_scaling_sweep(req)?;
            let spread = collapse_spread(&sweeps, &req.j_values);
            let mut s = Series::new(
                "j_scaling",
                &[
                    "J[energy]",
                    "J_over_T_c",
                    "T_c[energy]",
                    "P_c[energy/time]",
                    "ln_P_c_minus_2ln_J",
                    "refrigerates",
                ],
            );
            for (sweep, &j) in sweeps.iter().zip(&req.j_values) {
                for p in &sweep.points {
                    let pc = p.p_c();
                    s.push(vec![
                        num(j),
                        num(p.axis),
                        num(j / p.axis),
                        opt_num(pc),
                        opt_num(pc.filter(|&v| v > 0.0).map(|v| v.ln() - 2.0 * j.ln())),
                        p.refrigerates.to_string(),
                    ]);
                }
            }
            (
                json!({ "request": req, "sweeps": sweeps, "collapse_spread": spread }),
                vec![s],
            )
        }
    };
    Ok(Artifacts {
        document: ResultsDocument {
            software: Software::current(),
            mode: cfg.mode,
            seed: cfg.seed,
            config: cfg.config.clone(),
            result,
        },
        series,
    })
}

type ModeOutput = (serde_json::Value, Vec<Series>);

fn run_cycle(spec: &CycleSpec) -> Result<ModeOutput, CliError> {
    let (demag, magnet) = adiabat_pair(spec)?;
    let (gc, gh) = (spec.cold_field().gap(), spec.hot_field().gap());
    let cycle = cycle_propagator(spec)?;
    let m = cycle.matrix();
    let rows: Vec<Vec<f64>> = (0..5)
        .map(|i| (0..5).map(|k| m[(i, k)]).collect())
        .collect();
    let result = json!({
        "spec": spec,
        "bounds": thermo_bounds(spec)?,
        "geometry_hc": AdiabatGeometry::new(&spec.medium, spec.omega_h, spec.omega_c, spec.tau_hc),
        "geometry_ch": AdiabatGeometry::new(&spec.medium, spec.omega_c, spec.omega_h, spec.tau_ch),
        "delta_hc": adiabaticity_delta(&demag, gh, gc),
        "delta_ch": adiabaticity_delta(&magnet, gc, gh),
        "cycle_propagator": rows,
        "spectral_radius": spectral_radius(&cycle.linear()),
    });
    Ok((result, Vec::new()))
}

const STATE_COLUMNS: [&str; 8] = [
    "omega[energy]",
    "Omega[energy]",
    "E[energy]",
    "L[energy]",
    "C[energy]",
    "D[energy]",
    "S_vn[k_B]",
    "S_E[k_B]",
];

fn corner_series(m: &CycleMetrics) -> Series {
    let mut header = vec!["corner"];
    header.extend(STATE_COLUMNS);
    let mut s = Series::new("corners", &header);
    for (name, (c, e)) in ["A", "B", "C", "D"]
        .iter()
        .zip(m.corners.iter().zip(&m.entropies))
    {
        let mut row = vec![name.to_string()];
        row.extend(
            [
                c.at.omega(),
                c.at.gap(),
                c.e,
                c.l,
                c.c,
                c.d,
                e.von_neumann,
                e.energy,
            ]
            .map(num),
        );
        s.push(row);
    }
    s
}

fn run_trajectory(spec: &CycleSpec, n: usize) -> Result<ModeOutput, CliError> {
    let points = cycle_trajectory(spec, n)?;
    let mut header = vec!["t[time]"];
    header.extend(STATE_COLUMNS);
    let mut s = Series::new("trajectory", &header);
    for p in &points {
        let st = &p.state;
        s.push(
            [
                p.t,
                st.at.omega(),
                st.at.gap(),
                st.e,
                st.l,
                st.c,
                st.d,
                p.entropies.von_neumann,
                p.entropies.energy,
            ]
            .map(num)
            .to_vec(),
        );
    }
    let metrics = limit_cycle(spec)?;
    Ok((
        json!({ "spec": spec, "samples_per_stroke": n, "metrics": metrics }),
        vec![s],
    ))
}

fn run_frictionless(spec: &CycleSpec, l_max: u32) -> Result<ModeOutput, CliError> {
    let mut result = serde_json::Map::new();
    let mut series = Vec::new();
    for (name, ws, we) in [
        ("hc", spec.omega_h, spec.omega_c),
        ("ch", spec.omega_c, spec.omega_h),
    ] {
        let g = AdiabatGeometry::new(&spec.medium, ws, we, 1.0);
        let l_min = min_winding(&g)?;
        let family = if l_max >= l_min {
            frictionless_family(&g, l_max)?
        } else {
            Vec::new()
        };
        let mut s = Series::new(
            &format!("frictionless_{name}"),
            &["l", "mu_l", "tau_l[time]"],
        );
        for f in &family {
            s.push(vec![f.l.to_string(), num(f.mu_l), num(f.tau_l)]);
        }
        series.push(s);
        result.insert(
            name.into(),
            json!({ "k": g.k, "phi": g.phi, "l_min": l_min, "family": family }),
        );
    }
    Ok((serde_json::Value::Object(result), series))
}
