use rayon::prelude::*;
use serde::Serialize;

use super::scenario::check_expressions;
use super::svg::Plot;
use super::{fan_distance, not_configured, Analysis, Artifact, Check, Outcome, Prepared, RunContext, SystemModel};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geoflow::{
    build_system22, critical_angles_mod_pi, fibre_critical_points, integrate_geodesic, periodicity_defect,
    system22_residual, transport_scan, verify_p_vs_fphi, CubicIntegralState, PhaseState, Trajectory,
    PERIODICITY_TOL,
};
use crate::pencil::DEFAULT_TOL;

pub(super) struct GeoflowAnalysis;

const FAN_MATCH_TOL: f64 = 1e-8;
const PROPORTIONALITY_TOL: f64 = 1e-8;
const TRANSPORT_TOL: f64 = 1e-10;
const HALVING_RATIO: f64 = 12.0;
const PERIODICITY_SAMPLES: usize = 64;
const PLOT_POINTS: usize = 1000;

#[derive(Serialize)]
struct FibreSummary {
    /// `[x, y]` of a fibre point, or `[u, v, Λ]` of a random constant state.
    at: Vec<f64>,
    critical_points: usize,
    strict: bool,
    fan_mismatch: Option<f64>,
    proportionality_constant: Option<f64>,
    proportionality_residual: Option<f64>,
    max_abs_f_phi: Option<f64>,
    critical_values: Vec<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct Drifts {
    dt: f64,
    energy: f64,
    integral: Option<f64>,
    p2: f64,
}

#[derive(Serialize)]
struct Summary {
    a: f64,
    b: f64,
    periodicity_defect: f64,
    steps: usize,
    drifts: Vec<Drifts>,
    energy_ratio: Option<f64>,
    integral_ratio: Option<f64>,
    fibres: Vec<FibreSummary>,
    max_fan_mismatch: f64,
    max_relative_proportionality: f64,
    max_transport_residual: f64,
    max_system_residual: f64,
}

fn fibre_summary(state: &CubicIntegralState, x: f64, y: f64, at: Vec<f64>) -> FibreSummary {
    let mut out = FibreSummary {
        at,
        critical_points: 0,
        strict: false,
        fan_mismatch: None,
        proportionality_constant: None,
        proportionality_residual: None,
        max_abs_f_phi: None,
        critical_values: Vec::new(),
        error: None,
    };
    let run = |out: &mut FibreSummary| -> Result<()> {
        let crit = fibre_critical_points(state, x, y)?;
        out.critical_points = crit.len();
        out.critical_values = crit.iter().map(|c| c.value).collect();
        let uvl = state.fields_at(x, y)?;
        let fan = build_system22(state.a(), state.b()).pencil_at(&uvl)?.characteristic_fan(DEFAULT_TOL)?;
        out.strict = fan.strict;
        if fan.strict {
            out.fan_mismatch = Some(fan_distance(&critical_angles_mod_pi(&crit), &fan.angles));
            let fit = verify_p_vs_fphi(state, x, y)?;
            out.proportionality_constant = Some(fit.c);
            out.proportionality_residual = Some(fit.max_residual);
            out.max_abs_f_phi = Some(fit.max_abs_f_phi);
        }
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.error = Some(e.to_string());
    }
    out
}

fn drifts(t: &Trajectory, dt: f64) -> Drifts {
    Drifts {
        dt,
        energy: t.energy_drift(),
        integral: t.integral_drift(),
        p2: t.p2_drift(),
    }
}

fn fibre_csv(state: &CubicIntegralState, x: f64, y: f64) -> Result<String> {
    let mut s = String::from("phi,F,F_phi\n");
    for k in 0..360 {
        let phi = k as f64 * std::f64::consts::PI / 180.0;
        let (f, d, _) = state.fibre(x, y, phi)?;
        s.push_str(&format!("{phi:e},{f:e},{d:e}\n"));
    }
    Ok(s)
}

impl Analysis for GeoflowAnalysis {
    fn name(&self) -> &'static str {
        "geoflow"
    }

    fn applies(&self, sc: &Prepared) -> bool {
        sc.scenario.geoflow.is_some()
    }

    fn run(&self, sc: &Prepared, ctx: &RunContext) -> Result<Outcome> {
        let Some(cfg) = &sc.scenario.geoflow else {
            return Err(not_configured(self.name()));
        };
        let SystemModel::GeodesicCubic { a, b, .. } = sc.system else {
            return Err(Error::Config("geoflow needs a geodesic-cubic system".into()));
        };
        let xy = ["x", "y"];
        let texts = [cfg.u.clone(), cfg.v.clone(), cfg.lambda.clone()];
        check_expressions("geoflow.[u, v, lambda]", &texts, &xy, &sc.constants)?;
        let state = CubicIntegralState::parse(a, b, &cfg.u, &cfg.v, &cfg.lambda, &sc.constants)?;
        let mut periodicity = 0.0f64;
        for t in &texts {
            let e = Expression::parse_with_constants(t, &xy, &sc.constants)?;
            periodicity = periodicity.max(periodicity_defect(&e, PERIODICITY_SAMPLES)?);
        }

        let start = PhaseState {
            x: cfg.start[0],
            y: cfg.start[1],
            p1: cfg.start[2],
            p2: cfg.start[3],
        };
        let traj = integrate_geodesic(state.metric(), start, cfg.t_final, cfg.dt, Some(&state))?;
        let mut drift_list = vec![drifts(&traj, cfg.dt)];
        if cfg.halving {
            let half = integrate_geodesic(state.metric(), start, cfg.t_final, cfg.dt / 2.0, Some(&state))?;
            drift_list.push(drifts(&half, cfg.dt / 2.0));
        }
        let ratio = |f: &dyn Fn(&Drifts) -> Option<f64>| match drift_list.as_slice() {
            [d0, d1] => match (f(d0), f(d1)) {
                (Some(x), Some(y)) => Some(x / y),
                _ => None,
            },
            _ => None,
        };
        let energy_ratio = ratio(&|d| Some(d.energy));
        let integral_ratio = ratio(&|d| d.integral);

        let mut fibres: Vec<FibreSummary> = cfg
            .fibre_points
            .par_iter()
            .map(|&[x, y]| fibre_summary(&state, x, y, vec![x, y]))
            .collect();
        if cfg.random_states > 0 {
            let states = sc.region.sample(cfg.random_states, ctx.seed);
            let extra: Vec<FibreSummary> = states
                .par_iter()
                .map(|s| match CubicIntegralState::constant(a, b, s[0], s[1], s[2]) {
                    Ok(c) => fibre_summary(&c, 0.0, 0.0, s.clone()),
                    Err(e) => FibreSummary {
                        at: s.clone(),
                        critical_points: 0,
                        strict: false,
                        fan_mismatch: None,
                        proportionality_constant: None,
                        proportionality_residual: None,
                        max_abs_f_phi: None,
                        critical_values: Vec::new(),
                        error: Some(e.to_string()),
                    },
                })
                .collect();
            fibres.extend(extra);
        }
        let max_fan_mismatch = fibres.iter().filter_map(|f| f.fan_mismatch).fold(0.0, f64::max);
        let max_relative_proportionality = fibres
            .iter()
            .filter_map(|f| Some(f.proportionality_residual? / f.max_abs_f_phi?))
            .fold(0.0, f64::max);

        let [ny, nx, nphi] = cfg.transport_grid;
        let mut max_transport = 0.0f64;
        let mut max_system = 0.0f64;
        for k in 0..ny {
            let y = (k as f64 + 0.5) / ny.max(1) as f64;
            max_transport = max_transport.max(transport_scan(&state, y, nx, nphi)?);
            for m in 0..nx {
                let x = m as f64 / nx.max(1) as f64;
                let r = system22_residual(&state, x, y)?;
                max_system = r.iter().fold(max_system, |acc, v| acc.max(v.abs()));
            }
        }

        let d0 = &drift_list[0];
        let mut checks = vec![
            Check::at_most("periodic-on-unit-torus", periodicity, PERIODICITY_TOL),
            Check::at_most("energy-drift", d0.energy, cfg.drift_tol),
        ];
        if cfg.integral {
            checks.push(Check::at_most("integral-drift", d0.integral.unwrap_or(f64::INFINITY), cfg.drift_tol));
            checks.push(Check::at_most("transport-residual", max_transport, TRANSPORT_TOL));
            checks.push(Check::at_most("system-residual", max_system, TRANSPORT_TOL));
        } else {
            checks.push(Check::above("transport-residual-detects-non-integral", max_transport, TRANSPORT_TOL));
        }
        if cfg.linear_integral {
            checks.push(Check::at_most("p2-drift", d0.p2, cfg.drift_tol));
        }
        if let Some(r) = energy_ratio {
            checks.push(Check::above("energy-drift-halving-ratio", r, HALVING_RATIO));
        }
        if !fibres.is_empty() {
            checks.push(Check::at_most("critical-angles-match-fan", max_fan_mismatch, FAN_MATCH_TOL));
            checks.push(Check::at_most("p-proportional-to-f-phi", max_relative_proportionality, PROPORTIONALITY_TOL));
            let counts_ok = fibres
                .iter()
                .filter(|f| f.error.is_none())
                .all(|f| f.critical_points % 2 == 0 && f.critical_points >= 2 && (f.critical_points == 6) == f.strict);
            checks.push(Check::holds("critical-point-counts", counts_ok));
        }

        let mut artifacts = Vec::new();
        let mut csv = Vec::new();
        traj.to_csv(&mut csv)?;
        artifacts.push(Artifact {
            file: format!("{}-trajectory.csv", sc.scenario.name),
            content: String::from_utf8(csv).map_err(|e| Error::Io(e.to_string()))?,
        });
        if let Some(&[x, y]) = cfg.fibre_points.first() {
            artifacts.push(Artifact {
                file: format!("{}-fibre.csv", sc.scenario.name),
                content: fibre_csv(&state, x, y)?,
            });
        }
        let stride = (traj.t.len() / PLOT_POINTS).max(1);
        let pick = |v: &[f64]| -> Vec<(f64, f64)> {
            let v0 = v.first().copied().unwrap_or(0.0);
            traj.t.iter().zip(v).step_by(stride).map(|(t, x)| (*t, x - v0)).collect()
        };
        let mut plot = Plot::new("conservation along the geodesic", "t", "drift").series("H − H(0)", pick(&traj.energy));
        if let Some(f) = &traj.integral {
            plot = plot.series("F − F(0)", pick(f));
        }
        artifacts.push(Artifact {
            file: format!("{}-drift.svg", sc.scenario.name),
            content: plot.render(),
        });

        let summary = Summary {
            a,
            b,
            periodicity_defect: periodicity,
            steps: traj.t.len().saturating_sub(1),
            drifts: drift_list,
            energy_ratio,
            integral_ratio,
            fibres,
            max_fan_mismatch,
            max_relative_proportionality,
            max_transport_residual: max_transport,
            max_system_residual: max_system,
        };
        Ok(Outcome::new(self.name(), checks, summary, artifacts))
    }
}
