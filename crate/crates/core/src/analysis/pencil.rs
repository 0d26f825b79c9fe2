use serde::Serialize;

use super::svg::Plot;
use super::{fan_distance, not_configured, Analysis, Artifact, Check, Outcome, PencilExpect, Prepared, RunContext};
use crate::error::Result;
use crate::pencil::{
    hyperbolicity_scan, normalize_angle, NodeClass, QuasiLinearSystem, DEFAULT_TOL,
};

pub(super) struct PencilAnalysis;

/// Fan angles at rotated coordinates must be the original ones shifted by θ.
const COVARIANCE_TOL: f64 = 1e-9;
const FAN_TOL: f64 = 1e-10;

#[derive(Serialize)]
struct StateSummary {
    state: Vec<f64>,
    coefficients: Vec<f64>,
    degenerate: bool,
    fan: Option<Vec<f64>>,
    strict: Option<bool>,
    min_gap: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct Summary {
    dim: usize,
    states: Vec<StateSummary>,
    scan_resolution: usize,
    scan_strict: usize,
    scan_non_strict: usize,
    scan_degenerate: usize,
    scan_domain_errors: usize,
    degenerate_nodes: Vec<Vec<f64>>,
    fan_mismatch: Option<f64>,
    covariance_error: Option<f64>,
}

fn state_summary(sys: &QuasiLinearSystem, u: &[f64], tol: f64) -> StateSummary {
    let mut out = StateSummary {
        state: u.to_vec(),
        coefficients: Vec::new(),
        degenerate: false,
        fan: None,
        strict: None,
        min_gap: None,
        error: None,
    };
    match sys.pencil_at(u) {
        Err(e) => out.error = Some(e.to_string()),
        Ok(p) => {
            out.coefficients = p.coeffs.clone();
            if !p.is_nonzero(tol) {
                out.degenerate = true;
                return out;
            }
            match p.characteristic_fan(tol) {
                Ok(f) => {
                    out.fan = Some(f.angles);
                    out.strict = Some(f.strict);
                    out.min_gap = Some(f.min_gap);
                }
                Err(e) => out.error = Some(e.to_string()),
            }
        }
    }
    out
}

impl Analysis for PencilAnalysis {
    fn name(&self) -> &'static str {
        "pencil"
    }

    fn applies(&self, sc: &Prepared) -> bool {
        sc.scenario.pencil.is_some()
    }

    fn run(&self, sc: &Prepared, ctx: &RunContext) -> Result<Outcome> {
        let Some(cfg) = &sc.scenario.pencil else {
            return Err(not_configured(self.name()));
        };
        let tol = ctx.tol.unwrap_or(DEFAULT_TOL);
        let sys = sc.system.quasilinear()?;
        let states = if cfg.states.is_empty() { vec![sc.region.center()] } else { cfg.states.clone() };
        let summaries: Vec<StateSummary> = states.iter().map(|u| state_summary(&sys, u, tol)).collect();
        let scan = hyperbolicity_scan(&sys, &sc.region.lo, &sc.region.hi, cfg.resolution, tol)?;

        let mut checks = Vec::new();
        let fan_mismatch = match (&cfg.fan, summaries.first().and_then(|s| s.fan.as_ref())) {
            (Some(want), Some(got)) => Some(fan_distance(want, got)),
            (Some(_), None) => Some(f64::INFINITY),
            _ => None,
        };
        if let Some(m) = fan_mismatch {
            checks.push(Check::at_most("fan-matches-expected", m, FAN_TOL));
        }

        let mut covariance_error = None;
        if cfg.rotations > 0 {
            if let Some(base) = summaries.iter().find(|s| s.strict == Some(true)) {
                let fan = base.fan.clone().unwrap_or_default();
                let mut worst = 0.0f64;
                for k in 0..cfg.rotations {
                    let theta = std::f64::consts::PI * k as f64 / cfg.rotations as f64;
                    let rotated = sys.rotate_coordinates(theta)?.pencil_at(&base.state)?.characteristic_fan(tol)?;
                    let shifted: Vec<f64> = fan.iter().map(|a| a + theta).collect();
                    worst = worst.max(fan_distance(&shifted, &rotated.angles));
                }
                covariance_error = Some(worst);
                checks.push(Check::at_most("fan-covariant-under-rotation", worst, COVARIANCE_TOL));
            }
        }

        match cfg.expect {
            Some(PencilExpect::Strict) => {
                let ok = summaries.iter().all(|s| s.strict == Some(true));
                checks.push(Check::holds("states-strict", ok));
            }
            Some(PencilExpect::NonStrict) => {
                let ok = summaries.iter().any(|s| s.strict == Some(false)) || scan.non_strict > 0;
                checks.push(Check::holds("non-strict-detected", ok));
            }
            Some(PencilExpect::Degenerate) => {
                let ok = summaries.iter().any(|s| s.degenerate) || scan.degenerate > 0;
                checks.push(Check::holds("degeneracy-detected", ok));
            }
            None => {}
        }

        let degenerate_nodes: Vec<Vec<f64>> = scan
            .nodes
            .iter()
            .filter(|n| n.class == NodeClass::PencilDegenerate)
            .map(|n| n.state.clone())
            .collect();

        let mut artifacts = Vec::new();
        let mut csv = String::from(&format!("{},class\n", sys.variables().join(",")));
        for n in &scan.nodes {
            let class = match &n.class {
                NodeClass::Strict => "strict",
                NodeClass::NonStrict => "non-strict",
                NodeClass::PencilDegenerate => "pencil-degenerate",
                NodeClass::DomainError(_) => "domain-error",
            };
            let vals: Vec<String> = n.state.iter().map(|v| format!("{v:e}")).collect();
            csv.push_str(&format!("{},{class}\n", vals.join(",")));
        }
        artifacts.push(Artifact {
            file: format!("{}-pencil-scan.csv", sc.scenario.name),
            content: csv,
        });
        if let Some(first) = summaries.first() {
            if let Ok(p) = sys.pencil_at(&first.state) {
                let pi = std::f64::consts::PI;
                let mut plot = Plot::new("characteristic pencil P(cos φ, sin φ)", "φ", "P").series(
                    "P",
                    (0..=360).map(|k| {
                        let phi = pi * k as f64 / 360.0;
                        (phi, p.eval_angle(phi))
                    }),
                );
                for a in first.fan.iter().flatten() {
                    plot = plot.marker(normalize_angle(*a));
                }
                artifacts.push(Artifact {
                    file: format!("{}-pencil.svg", sc.scenario.name),
                    content: plot.render(),
                });
            }
        }

        let summary = Summary {
            dim: sys.dim(),
            states: summaries,
            scan_resolution: cfg.resolution,
            scan_strict: scan.strict,
            scan_non_strict: scan.non_strict,
            scan_degenerate: scan.degenerate,
            scan_domain_errors: scan.domain_errors,
            degenerate_nodes,
            fan_mismatch,
            covariance_error,
        };
        Ok(Outcome::new(self.name(), checks, summary, artifacts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fan_distance_wraps_mod_pi() {
        let pi = std::f64::consts::PI;
        assert!(fan_distance(&[0.0, 1.0], &[pi - 1e-12, 1.0]) < 1e-11);
        assert!(fan_distance(&[0.1, 1.0], &[1.0 + pi, 0.1 - pi]) < 1e-12);
        assert_eq!(fan_distance(&[0.1], &[0.1, 0.2]), f64::INFINITY);
    }
}
