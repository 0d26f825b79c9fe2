use serde::Serialize;

use super::scenario::check_expressions;
use super::{not_configured, Analysis, Artifact, Check, Outcome, PassFail, Prepared, RunContext, SystemModel};
use crate::conservation::{
    invertible_angles, multiplier_at, verify_conservation_form, ClawOptions, ConservationCandidate,
};
use crate::error::Result;
use crate::pencil::{QuasiLinearSystem, DEFAULT_TOL};
use crate::richness::{check_richness, Verdict};

pub(super) struct ClawsAnalysis;

const IDENTITY_TOL: f64 = 1e-10;
const ANGLE_SPREAD_TOL: f64 = 1e-8;
const RICHNESS_TOL: f64 = 1e-8;
const STRICT_POOL: usize = 20;

#[derive(Serialize)]
struct Summary {
    samples: usize,
    checked: usize,
    failures: usize,
    first_failure: Option<String>,
    tol: f64,
    det_tol: f64,
    pass: bool,
    max_residual: f64,
    max_scaled_residual: f64,
    min_abs_det: f64,
    max_distance_to_identity: f64,
    /// Largest spread of scaled residuals over the invertible rotation angles.
    angle_spread: f64,
    /// Same verdict at every invertible angle of every sample.
    angle_verdict_stable: bool,
    richness_verdict: Option<Verdict>,
}

/// The first `count` strictly hyperbolic states of a seeded pool
/// `STRICT_POOL` times larger.
fn strict_points(sc: &Prepared, sys: &QuasiLinearSystem, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let strict = |p: &Vec<f64>| match &sc.system {
        SystemModel::Diagonal(d) => d.check_strict(p).is_ok(),
        _ => sys
            .pencil_at(p)
            .and_then(|q| q.characteristic_fan(DEFAULT_TOL))
            .is_ok_and(|f| f.strict),
    };
    sc.region
        .sample(count * STRICT_POOL, seed)
        .into_iter()
        .filter(strict)
        .take(count)
        .collect()
}

/// Spread of scaled residuals across all invertible angles, and whether the
/// per-point verdict changes with the angle.
fn angle_robustness(
    sys: &QuasiLinearSystem,
    cand: &ConservationCandidate,
    points: &[Vec<f64>],
    opts: &ClawOptions,
) -> (f64, bool) {
    let mut spread = 0.0f64;
    let mut stable = true;
    for u in points {
        let Ok(angles) = invertible_angles(sys, u) else { continue };
        let results: Vec<(f64, bool)> = angles
            .iter()
            .filter_map(|&t| multiplier_at(sys, cand, u, t).ok())
            .map(|pm| {
                let scaled = pm.residual / pm.scale;
                (scaled, pm.residual <= opts.tol * pm.scale && pm.det.abs() > opts.det_tol)
            })
            .collect();
        if let Some(first) = results.first() {
            let (lo, hi) = results.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), r| (l.min(r.0), h.max(r.0)));
            spread = spread.max(hi - lo);
            stable &= results.iter().all(|r| r.1 == first.1);
        }
    }
    (spread, stable)
}

impl Analysis for ClawsAnalysis {
    fn name(&self) -> &'static str {
        "claws"
    }

    fn applies(&self, sc: &Prepared) -> bool {
        sc.scenario.claws.is_some()
    }

    fn run(&self, sc: &Prepared, ctx: &RunContext) -> Result<Outcome> {
        let Some(cfg) = &sc.scenario.claws else {
            return Err(not_configured(self.name()));
        };
        let vars = sc.system.variables();
        check_expressions("claws.g", &cfg.g, &vars, &sc.constants)?;
        check_expressions("claws.h", &cfg.h, &vars, &sc.constants)?;
        let cand = ConservationCandidate::parse(&vars, &cfg.g, &cfg.h, &sc.constants)?;
        let defaults = ClawOptions::default();
        let opts = ClawOptions {
            tol: ctx.tol.or(cfg.tol).unwrap_or(defaults.tol),
            det_tol: cfg.det_tol.unwrap_or(defaults.det_tol),
            ..defaults
        };
        let sys = sc.system.quasilinear()?;
        let points = strict_points(sc, &sys, cfg.samples, ctx.seed);
        let richness_verdict = match &sc.system {
            SystemModel::Diagonal(d) => Some(check_richness(d, &points, RICHNESS_TOL).verdict_phi),
            _ => None,
        };
        let report = verify_conservation_form(&sys, &cand, &points, &opts)?;
        let (angle_spread, angle_verdict_stable) = angle_robustness(&sys, &cand, &points, &opts);

        let mut checks = vec![Check::holds("rotation-angle-verdict-stable", angle_verdict_stable)];
        if report.pass {
            checks.push(Check::at_most("rotation-angle-residual-spread", angle_spread, ANGLE_SPREAD_TOL));
        }
        match cfg.expect {
            Some(PassFail::Pass) => checks.push(Check::holds("candidate-passes", report.pass)),
            Some(PassFail::Fail) => checks.push(Check::holds("candidate-fails", !report.pass)),
            None => {}
        }
        if cfg.identity {
            checks.push(Check::at_most("multiplier-is-identity", report.max_distance_to_identity, IDENTITY_TOL));
        }
        if let (Some(v), Some(PassFail::Pass)) = (richness_verdict, cfg.expect) {
            checks.push(Check::holds("system-rich", v == Verdict::Rich));
        }

        let mut csv = format!("{},theta,residual,scale,det,distance_to_identity,pass\n", vars.join(","));
        for p in &report.points {
            let u: Vec<String> = p.point.iter().map(|v| format!("{v:e}")).collect();
            csv.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{}\n",
                u.join(","),
                p.theta,
                p.residual,
                p.scale,
                p.det,
                p.distance_to_identity,
                p.pass
            ));
        }
        let summary = Summary {
            samples: cfg.samples,
            checked: report.points.len(),
            failures: report.failures.len(),
            first_failure: report.failures.first().map(|f| f.reason.clone()),
            tol: opts.tol,
            det_tol: opts.det_tol,
            pass: report.pass,
            max_residual: report.max_residual,
            max_scaled_residual: report.max_scaled_residual,
            min_abs_det: report.min_abs_det,
            max_distance_to_identity: report.max_distance_to_identity,
            angle_spread,
            angle_verdict_stable,
            richness_verdict,
        };
        let artifacts = vec![Artifact {
            file: format!("{}-claws.csv", sc.scenario.name),
            content: csv,
        }];
        Ok(Outcome::new(self.name(), checks, summary, artifacts))
    }
}
