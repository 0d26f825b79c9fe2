use serde::Serialize;

use super::svg::Plot;
use super::{Analysis, Artifact, BlowupExpect, Check, FieldCheckConfig, InitialWConfig, Outcome, Prepared, RunContext};
use crate::error::{Error, Result};
use crate::fields::{
    cross_derivative_residual, residual_diagonal, FieldContext, FieldKind, FieldRegistry, SolutionField,
};
use crate::richness::DiagonalSystem;
use crate::riccati::{
    cross_check_w, predict_blowup, BlowupOptions, InitialW, StopReason, DEFAULT_STEP_FRACTION,
};

pub(super) struct RiccatiAnalysis;

const EXACT_FIELD_TOL: f64 = 1e-6;
const NON_SOLUTION_FLOOR: f64 = 1e-2;
const BLOWUP_REL_TOL: f64 = 1e-4;
const CROSS_CHECK_TOL: f64 = 1e-4;

#[derive(Serialize)]
struct FieldSummary {
    kind: FieldKind,
    exact: bool,
    probes: usize,
    skipped: usize,
    max_diagonal_residual: f64,
    max_cross_residual: f64,
}

#[derive(Serialize)]
struct HalvingLevel {
    step: f64,
    s_star: Option<f64>,
}

#[derive(Serialize)]
struct TraceSummary {
    index: usize,
    start: [f64; 2],
    step: f64,
    samples: usize,
    arclength: f64,
    stop: StopReason,
    w0: f64,
    s_star: Option<f64>,
    analytic_crossing: Option<f64>,
    relative_error: Option<f64>,
    cross_check_deviation: f64,
    cross_check_max_abs_w: f64,
    identity_defect: f64,
    w_decays_monotonically: bool,
    halving: Vec<HalvingLevel>,
    /// `|s*(h) − s*(h/2)| / |s*(h/2) − s*(h/4)|` for consecutive levels.
    halving_ratios: Vec<f64>,
}

#[derive(Serialize)]
struct Summary {
    fields: Vec<FieldSummary>,
    trace: Option<TraceSummary>,
}

fn field_context<'a>(sc: &'a Prepared, sys: &'a DiagonalSystem) -> FieldContext<'a> {
    FieldContext {
        system: Some(sys),
        base_dir: sc.base_dir.as_deref(),
        constants: &sc.constants,
    }
}

fn probe_field(field: &dyn SolutionField, sys: &DiagonalSystem, cfg: &FieldCheckConfig) -> FieldSummary {
    let d = *field.domain();
    let n = sys.dim();
    let m = cfg.probe.max(1);
    let mut out = FieldSummary {
        kind: field.kind(),
        exact: cfg.exact,
        probes: 0,
        skipped: 0,
        max_diagonal_residual: 0.0,
        max_cross_residual: 0.0,
    };
    for a in 0..m {
        for b in 0..m {
            let x = d.x0 + (a as f64 + 0.5) / m as f64 * (d.x1 - d.x0);
            let y = d.y0 + (b as f64 + 0.5) / m as f64 * (d.y1 - d.y0);
            let node = || -> Result<(f64, f64)> {
                let mut diag = 0.0f64;
                let mut cross = 0.0f64;
                for i in 0..n {
                    diag = diag.max(residual_diagonal(field, sys, i, x, y)?);
                    for j in (0..n).filter(|&j| j != i) {
                        cross = cross.max(cross_derivative_residual(field, sys, i, j, x, y)?);
                    }
                }
                Ok((diag, cross))
            };
            match node() {
                Ok((dg, cr)) => {
                    out.probes += 1;
                    out.max_diagonal_residual = out.max_diagonal_residual.max(dg);
                    out.max_cross_residual = out.max_cross_residual.max(cr);
                }
                Err(_) => out.skipped += 1,
            }
        }
    }
    out
}

impl Analysis for RiccatiAnalysis {
    fn name(&self) -> &'static str {
        "riccati"
    }

    fn applies(&self, sc: &Prepared) -> bool {
        sc.scenario.riccati.is_some() || !sc.scenario.fields.is_empty()
    }

    fn run(&self, sc: &Prepared, _ctx: &RunContext) -> Result<Outcome> {
        let sys = sc
            .system
            .diagonal()
            .ok_or_else(|| Error::Config("riccati needs a diagonal system".into()))?;
        let registry = FieldRegistry::default();
        let fctx = field_context(sc, sys);
        let mut checks = Vec::new();
        let mut artifacts = Vec::new();

        let mut fields = Vec::new();
        for (k, fc) in sc.scenario.fields.iter().enumerate() {
            let field = registry.build(&fc.field, &fctx)?;
            let s = probe_field(field.as_ref(), sys, fc);
            if s.exact {
                checks.push(Check::at_most(&format!("field-{}-cross-identity", k + 1), s.max_cross_residual, EXACT_FIELD_TOL));
                checks.push(Check::at_most(&format!("field-{}-diagonal-residual", k + 1), s.max_diagonal_residual, EXACT_FIELD_TOL));
            } else {
                checks.push(Check::above(&format!("field-{}-cross-identity-violated", k + 1), s.max_cross_residual, NON_SOLUTION_FLOOR));
            }
            checks.push(Check::holds(&format!("field-{}-probed", k + 1), s.probes > 0));
            fields.push(s);
        }

        let trace = match &sc.scenario.riccati {
            None => None,
            Some(cfg) => {
                if cfg.index == 0 || cfg.index > sys.dim() {
                    return Err(Error::Config(format!("riccati index {} is 1-based in 1..={}", cfg.index, sys.dim())));
                }
                let i = cfg.index - 1;
                let field = registry.build(&cfg.field, &fctx)?;
                let initial = match &cfg.w0 {
                    InitialWConfig::Value(v) => InitialW::Given(*v),
                    InitialWConfig::Named(s) if s == "field" => InitialW::FromField,
                    InitialWConfig::Named(s) => {
                        return Err(Error::Config(format!("w0 must be a number or \"field\", got `{s}`")))
                    }
                };
                let step = cfg.step.unwrap_or(field.domain().diameter() * DEFAULT_STEP_FRACTION);
                let opts = BlowupOptions {
                    step: Some(step),
                    max_length: cfg.max_length,
                    initial,
                    g_base: cfg.g_base.clone(),
                };
                let pred = predict_blowup(field.as_ref(), sys, i, cfg.start, &opts)?;
                let cc = cross_check_w(field.as_ref(), sys, i, &pred.curve, &pred.trace)?;
                let analytic = match field.as_simple_wave() {
                    Some(sw) if sw.active() == i => sw.crossing_length(sw.solve_xi(cfg.start[0], cfg.start[1])?)?,
                    _ => None,
                };
                let relative_error = match (pred.s_star, analytic) {
                    (Some(s), Some(a)) => Some((s - a).abs() / a),
                    _ => None,
                };
                let decays = cc.measured.windows(2).all(|w| w[1].abs() <= w[0].abs() * (1.0 + 1e-12) + 1e-300);

                let mut halving = vec![HalvingLevel {
                    step,
                    s_star: pred.s_star,
                }];
                for l in 1..=cfg.halvings {
                    let h = step / f64::from(1u32 << l);
                    let o = BlowupOptions {
                        step: Some(h),
                        ..opts.clone()
                    };
                    halving.push(HalvingLevel {
                        step: h,
                        s_star: predict_blowup(field.as_ref(), sys, i, cfg.start, &o)?.s_star,
                    });
                }
                let stars: Vec<f64> = halving.iter().filter_map(|h| h.s_star).collect();
                let halving_ratios = if stars.len() == halving.len() {
                    stars.windows(3).map(|w| (w[0] - w[1]).abs() / (w[1] - w[2]).abs()).collect()
                } else {
                    Vec::new()
                };

                match cfg.expect {
                    Some(BlowupExpect::Blowup) => {
                        checks.push(Check::holds("blowup-predicted", pred.s_star.is_some()));
                        if analytic.is_some() {
                            checks.push(Check::at_most(
                                "blowup-matches-crossing",
                                relative_error.unwrap_or(f64::INFINITY),
                                BLOWUP_REL_TOL,
                            ));
                        }
                        checks.push(Check::at_most("cross-check-w", cc.relative(), CROSS_CHECK_TOL));
                    }
                    Some(BlowupExpect::None) => {
                        checks.push(Check::holds("no-blowup", pred.s_star.is_none()));
                        checks.push(Check::holds("w-decays-monotonically", decays));
                        checks.push(Check::at_most("cross-check-w", cc.relative(), CROSS_CHECK_TOL));
                    }
                    Some(BlowupExpect::Flat) => {
                        let flat = pred.trace.big_w.iter().all(|w| *w == 0.0);
                        checks.push(Check::holds("flat-trace", flat && pred.s_star.is_none()));
                    }
                    None => {}
                }

                let mut csv = Vec::new();
                pred.trace.to_csv(&mut csv)?;
                artifacts.push(Artifact {
                    file: format!("{}-riccati-trace.csv", sc.scenario.name),
                    content: String::from_utf8(csv).map_err(|e| Error::Io(e.to_string()))?,
                });
                let t = &pred.trace;
                let mut plot = Plot::new("transversal derivative along the characteristic", "s", "w")
                    .series("predicted w", t.s.iter().copied().zip(t.w.iter().copied()).take_while(|(s, _)| pred.s_star.is_none_or(|st| *s < st)))
                    .series("measured w", t.s.iter().copied().zip(cc.measured.iter().copied()));
                if let Some(st) = pred.s_star {
                    plot = plot.marker(st);
                }
                artifacts.push(Artifact {
                    file: format!("{}-riccati.svg", sc.scenario.name),
                    content: plot.render(),
                });

                Some(TraceSummary {
                    index: cfg.index,
                    start: cfg.start,
                    step,
                    samples: pred.curve.points.len(),
                    arclength: pred.curve.s.last().copied().unwrap_or(0.0),
                    stop: pred.curve.stop.clone(),
                    w0: pred.trace.w0,
                    s_star: pred.s_star,
                    analytic_crossing: analytic,
                    relative_error,
                    cross_check_deviation: cc.max_deviation,
                    cross_check_max_abs_w: cc.max_abs_w,
                    identity_defect: pred.trace.identity_defect(),
                    w_decays_monotonically: decays,
                    halving,
                    halving_ratios,
                })
            }
        };

        Ok(Outcome::new(self.name(), checks, Summary { fields, trace }, artifacts))
    }
}
