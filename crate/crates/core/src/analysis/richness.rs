use serde::Serialize;

use super::{not_configured, Analysis, Artifact, Check, Outcome, Prepared, RichnessExpect, RunContext};
use crate::error::{Error, Result};
use crate::richness::{
    check_richness, reconstruct_g_with_order, residual_phi, residual_r, verify_identity15, DiagonalSystem, Residual,
    Verdict, G_CLOSEDNESS_TOL,
};

pub(super) struct RichnessAnalysis;

const DEFAULT_RICHNESS_TOL: f64 = 1e-8;
const IDENTITY15_TOL: f64 = 1e-9;
const ROTATION_TOL: f64 = 1e-9;
const GOLDEN_FLOOR: f64 = 1e-3;
const ROTATION_POINTS: usize = 20;

#[derive(Serialize)]
struct Golden {
    point: Vec<f64>,
    triple: [usize; 3],
    residual_r: Option<f64>,
    residual_phi: f64,
}

#[derive(Serialize)]
struct Closedness {
    base: Vec<f64>,
    targets: usize,
    max_discrepancy: f64,
}

#[derive(Serialize)]
struct Summary {
    n: usize,
    samples: usize,
    skipped: usize,
    tol: f64,
    verdict_r: Verdict,
    verdict_phi: Verdict,
    max_raw_r: f64,
    max_raw_phi: f64,
    max_normalized_r: f64,
    max_normalized_phi: f64,
    /// 1-based triple and the point with the largest normalised `(Φ)` residual.
    worst_triple: Option<[usize; 3]>,
    worst_point: Option<Vec<f64>>,
    identity15_max: Option<f64>,
    golden: Option<Golden>,
    closedness: Option<Closedness>,
    rotation_max_deviation: Option<f64>,
}

fn one_based(t: [usize; 3]) -> [usize; 3] {
    [t[0] + 1, t[1] + 1, t[2] + 1]
}

fn triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i != j && j != k && i != k {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

/// Largest difference of `G_j` between ascending and descending leg orders
/// over all `j` and targets.
fn closedness(sys: &DiagonalSystem, base: &[f64], targets: &[Vec<f64>]) -> Result<f64> {
    let n = sys.dim();
    let mut worst = 0.0f64;
    for j in 0..n {
        let asc: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        let desc: Vec<usize> = asc.iter().rev().copied().collect();
        for t in targets {
            let a = reconstruct_g_with_order(sys, j, base, t, &asc)?;
            let d = reconstruct_g_with_order(sys, j, base, t, &desc)?;
            worst = worst.max((a - d).abs());
        }
    }
    Ok(worst)
}

/// Worst `|Δ raw| / max(1, |raw|)` of the angle-form residuals between the
/// system and its rotated copies.
fn rotation_deviation(sys: &DiagonalSystem, points: &[Vec<f64>], angles: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    let ts = triples(sys.dim());
    for k in 1..=angles {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / (angles + 1) as f64;
        let rot = sys.rotate_fan(theta);
        for p in points {
            for &[i, j, kk] in &ts {
                let a = residual_phi(sys, i, j, kk, p)?.raw;
                let b = residual_phi(&rot, i, j, kk, p)?.raw;
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    Ok(worst)
}

impl Analysis for RichnessAnalysis {
    fn name(&self) -> &'static str {
        "richness"
    }

    fn applies(&self, sc: &Prepared) -> bool {
        sc.scenario.richness.is_some()
    }

    fn run(&self, sc: &Prepared, ctx: &RunContext) -> Result<Outcome> {
        let Some(cfg) = &sc.scenario.richness else {
            return Err(not_configured(self.name()));
        };
        let sys = sc
            .system
            .diagonal()
            .ok_or_else(|| Error::Config("richness needs a diagonal system".into()))?;
        let tol = ctx.tol.or(cfg.tol).unwrap_or(DEFAULT_RICHNESS_TOL);
        let n = sys.dim();
        let points = sc.region.sample(cfg.samples, ctx.seed);
        let report = check_richness(sys, &points, tol);
        let strict: Vec<Vec<f64>> = points.iter().filter(|p| sys.check_strict(p).is_ok()).cloned().collect();

        let mut identity15_max = None;
        if n >= 3 {
            let mut m = 0.0f64;
            for p in &strict {
                for &[i, j, k] in &triples(n) {
                    if let Ok((a, b)) = verify_identity15(sys, i, j, k, p) {
                        m = m.max(a.abs()).max(b.abs());
                    }
                }
            }
            identity15_max = Some(m);
        }

        let golden = match &cfg.golden {
            Some(g) => {
                if g.triple.iter().any(|&t| t == 0 || t > n) {
                    return Err(Error::Config(format!("golden triple {:?} is 1-based in 1..={n}", g.triple)));
                }
                let [i, j, k] = [g.triple[0] - 1, g.triple[1] - 1, g.triple[2] - 1];
                Some(Golden {
                    point: g.point.clone(),
                    triple: g.triple,
                    residual_r: residual_r(sys, i, j, k, &g.point).ok().map(|r: Residual| r.raw),
                    residual_phi: residual_phi(sys, i, j, k, &g.point)?.raw,
                })
            }
            None => None,
        };

        let closed = match strict.split_first() {
            Some((base, rest)) if n >= 2 => {
                let base = if sys.check_strict(&sc.region.center()).is_ok() { sc.region.center() } else { base.clone() };
                let targets: Vec<Vec<f64>> = rest.iter().take(cfg.g_targets).cloned().collect();
                Some(Closedness {
                    max_discrepancy: closedness(sys, &base, &targets)?,
                    base,
                    targets: targets.len(),
                })
            }
            _ => None,
        };

        let rotation_max_deviation = if n >= 3 && cfg.rotations > 0 {
            let pts: Vec<Vec<f64>> = strict.iter().take(ROTATION_POINTS).cloned().collect();
            Some(rotation_deviation(sys, &pts, cfg.rotations)?)
        } else {
            None
        };

        let mut checks = Vec::new();
        if report.verdict_r != Verdict::Undetermined {
            checks.push(Check::holds("speed-and-angle-verdicts-agree", report.verdict_r == report.verdict_phi));
        }
        if let Some(d) = rotation_max_deviation {
            checks.push(Check::at_most("angle-residuals-rotation-invariant", d, ROTATION_TOL));
        }
        match cfg.expect {
            Some(RichnessExpect::Rich) => {
                checks.push(Check::at_most("max-normalized-residual-phi", report.max_normalized_phi, tol));
                checks.push(Check::at_most("max-normalized-residual-r", report.max_normalized_r, tol));
                if let Some(m) = identity15_max {
                    checks.push(Check::at_most("identity15-residual", m, IDENTITY15_TOL));
                }
                if let Some(c) = &closed {
                    checks.push(Check::at_most("g-path-independence", c.max_discrepancy, G_CLOSEDNESS_TOL));
                }
            }
            Some(RichnessExpect::NotRich) => {
                checks.push(Check::holds("verdict-not-rich", report.verdict_phi == Verdict::NotRich));
                if let Some(g) = &golden {
                    checks.push(Check::above("golden-residual-phi", g.residual_phi.abs(), GOLDEN_FLOOR));
                    checks.push(Check::above(
                        "golden-residual-r",
                        g.residual_r.map_or(f64::NAN, f64::abs),
                        GOLDEN_FLOOR,
                    ));
                }
            }
            Some(RichnessExpect::Vacuous) => {
                checks.push(Check::holds("verdict-vacuous", report.verdict_phi == Verdict::Vacuous));
            }
            None => {}
        }
        if let (Some(g), Some(want)) = (&golden, cfg.golden.as_ref().and_then(|g| g.value)) {
            let dev = (g.residual_phi - want).abs() / want.abs().max(1.0);
            checks.push(Check::at_most("golden-value-reproduced", dev, 1e-8));
        }

        let worst = report.worst_phi();
        let mut csv = String::from("point,i,j,k,residual_R,residual_Phi,normalized_R,normalized_Phi\n");
        for e in &report.entries {
            let t = one_based(e.triple);
            let (rr, rn) = e.residual_r.map_or((f64::NAN, f64::NAN), |r| (r.raw, r.normalized));
            csv.push_str(&format!(
                "{},{},{},{},{rr:e},{:e},{rn:e},{:e}\n",
                e.point, t[0], t[1], t[2], e.residual_phi.raw, e.residual_phi.normalized
            ));
        }
        let summary = Summary {
            n,
            samples: points.len(),
            skipped: report.skipped.len(),
            tol,
            verdict_r: report.verdict_r,
            verdict_phi: report.verdict_phi,
            max_raw_r: report.max_raw_r,
            max_raw_phi: report.max_raw_phi,
            max_normalized_r: report.max_normalized_r,
            max_normalized_phi: report.max_normalized_phi,
            worst_triple: worst.map(|w| one_based(w.triple)),
            worst_point: worst.map(|w| points[w.point].clone()),
            identity15_max,
            golden,
            closedness: closed,
            rotation_max_deviation,
        };
        let artifacts = vec![Artifact {
            file: format!("{}-richness.csv", sc.scenario.name),
            content: csv,
        }];
        Ok(Outcome::new(self.name(), checks, summary, artifacts))
    }
}
