//! Verification that `(g_i)_x + (h_i)_y = 0` represents `A u_x + B u_y = 0`
//! up to an invertible multiplier `C(u)`: `Dg = C A`, `Dh = C B`.
//!
//! Where `A` is singular the check runs in a rotated frame
//! `A_θ = cos θ A + sin θ B`, `B_θ = −sin θ A + cos θ B`, for which
//! `C = (Dg cos θ + Dh sin θ) A_θ⁻¹` and the residual is
//! `(−Dg sin θ + Dh cos θ) − C B_θ`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::pencil::QuasiLinearSystem;
use crate::richness::{check_richness, DiagonalSystem, RichnessReport};

/// Number of equally spaced angles in `[0, π)` tried when `A` is singular.
pub const ROTATION_GRID: usize = 16;
/// Smallest accepted ratio of extreme singular values of `A_θ`.
pub const INVERTIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ConservationCandidate {
    g: Vec<Expression>,
    h: Vec<Expression>,
}

impl ConservationCandidate {
    pub fn new(g: Vec<Expression>, h: Vec<Expression>) -> Result<Self> {
        if g.len() != h.len() || g.is_empty() {
            return Err(Error::Dimension {
                expected: g.len(),
                got: h.len(),
            });
        }
        Ok(ConservationCandidate { g, h })
    }

    pub fn parse(
        vars: &[impl AsRef<str>],
        g: &[impl AsRef<str>],
        h: &[impl AsRef<str>],
        constants: &[(String, f64)],
    ) -> Result<Self> {
        fn p(list: &[impl AsRef<str>], vars: &[impl AsRef<str>], c: &[(String, f64)]) -> Result<Vec<Expression>> {
            list.iter().map(|s| Expression::parse_with_constants(s.as_ref(), vars, c)).collect()
        }
        ConservationCandidate::new(p(g, vars, constants)?, p(h, vars, constants)?)
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    fn jacobians(&self, u: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let n = self.dim();
        let mut dg = DMatrix::zeros(n, u.len());
        let mut dh = DMatrix::zeros(n, u.len());
        for i in 0..n {
            let (_, g) = self.g[i].gradient(u)?;
            let (_, h) = self.h[i].gradient(u)?;
            for k in 0..u.len() {
                dg[(i, k)] = g[k];
                dh[(i, k)] = h[k];
            }
        }
        Ok((dg, dh))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleChoice {
    /// `θ = 0` if `A` is invertible, else the first invertible grid angle.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct ClawOptions {
    pub tol: f64,
    pub det_tol: f64,
    pub angle: AngleChoice,
}

impl Default for ClawOptions {
    fn default() -> Self {
        ClawOptions {
            tol: 1e-9,
            det_tol: 1e-8,
            angle: AngleChoice::Auto,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointMultiplier {
    pub point: Vec<f64>,
    pub theta: f64,
    pub multiplier: Vec<Vec<f64>>,
    pub residual: f64,
    pub scale: f64,
    pub det: f64,
    /// `max |C − I|` entrywise.
    pub distance_to_identity: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointFailure {
    pub point: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierReport {
    pub tol: f64,
    pub det_tol: f64,
    pub points: Vec<PointMultiplier>,
    pub failures: Vec<PointFailure>,
    pub max_residual: f64,
    pub max_scaled_residual: f64,
    pub min_abs_det: f64,
    pub max_distance_to_identity: f64,
    pub pass: bool,
}

fn invertible(m: &DMatrix<f64>) -> bool {
    let sv = m.singular_values();
    let max = sv.max();
    max > 0.0 && sv.min() / max >= INVERTIBILITY_TOL
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Multiplier and residual at one state for a fixed angle.
pub fn multiplier_at(
    sys: &QuasiLinearSystem,
    cand: &ConservationCandidate,
    u: &[f64],
    theta: f64,
) -> Result<PointMultiplier> {
    let (a, b) = sys.matrices_at(u)?;
    let (dg, dh) = cand.jacobians(u)?;
    let (c, s) = (theta.cos(), theta.sin());
    let a_t = &a * c + &b * s;
    let b_t = &b * c - &a * s;
    if !invertible(&a_t) {
        return Err(Error::DegeneratePencil);
    }
    let inv = a_t.clone().try_inverse().ok_or(Error::DegeneratePencil)?;
    let mult = (&dg * c + &dh * s) * inv;
    let resid = max_abs(&((&dh * c - &dg * s) - &mult * &b_t));
    let scale = 1.0 + max_abs(&dg).max(max_abs(&dh));
    let n = mult.nrows();
    let dist = max_abs(&(&mult - DMatrix::identity(n, n)));
    Ok(PointMultiplier {
        point: u.to_vec(),
        theta,
        multiplier: (0..n).map(|i| mult.row(i).iter().copied().collect()).collect(),
        residual: resid,
        scale,
        det: mult.determinant(),
        distance_to_identity: dist,
        pass: false,
    })
}

/// Angles `kπ/16` (starting with `0`) at which `A_θ` is invertible.
pub fn invertible_angles(sys: &QuasiLinearSystem, u: &[f64]) -> Result<Vec<f64>> {
    let (a, b) = sys.matrices_at(u)?;
    Ok((0..ROTATION_GRID)
        .map(|k| k as f64 * std::f64::consts::PI / ROTATION_GRID as f64)
        .filter(|&t| invertible(&(&a * t.cos() + &b * t.sin())))
        .collect())
}

fn check_point(sys: &QuasiLinearSystem, cand: &ConservationCandidate, u: &[f64], opts: &ClawOptions) -> Result<PointMultiplier> {
    let theta = match opts.angle {
        AngleChoice::Fixed(t) => t,
        AngleChoice::Auto => *invertible_angles(sys, u)?.first().ok_or(Error::DegeneratePencil)?,
    };
    let mut pm = multiplier_at(sys, cand, u, theta)?;
    pm.pass = pm.residual <= opts.tol * pm.scale && pm.det.abs() > opts.det_tol;
    Ok(pm)
}

pub fn verify_conservation_form(
    sys: &QuasiLinearSystem,
    cand: &ConservationCandidate,
    points: &[Vec<f64>],
    opts: &ClawOptions,
) -> Result<MultiplierReport> {
    if cand.dim() != sys.dim() {
        return Err(Error::Dimension {
            expected: sys.dim(),
            got: cand.dim(),
        });
    }
    let results: Vec<Result<PointMultiplier>> = points.par_iter().map(|u| check_point(sys, cand, u, opts)).collect();
    let mut report = MultiplierReport {
        tol: opts.tol,
        det_tol: opts.det_tol,
        points: Vec::new(),
        failures: Vec::new(),
        max_residual: 0.0,
        max_scaled_residual: 0.0,
        min_abs_det: f64::INFINITY,
        max_distance_to_identity: 0.0,
        pass: true,
    };
    for (u, r) in points.iter().zip(results) {
        match r {
            Ok(pm) => {
                report.max_residual = report.max_residual.max(pm.residual);
                report.max_scaled_residual = report.max_scaled_residual.max(pm.residual / pm.scale);
                report.min_abs_det = report.min_abs_det.min(pm.det.abs());
                report.max_distance_to_identity = report.max_distance_to_identity.max(pm.distance_to_identity);
                report.pass &= pm.pass;
                report.points.push(pm);
            }
            Err(e) => {
                report.pass = false;
                report.failures.push(PointFailure {
                    point: u.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    if report.points.is_empty() {
        report.pass = false;
        report.min_abs_det = 0.0;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalClawReport {
    pub multiplier: MultiplierReport,
    pub richness: RichnessReport,
}

/// Runs the multiplier check on `A = diag(cos φ_i)`, `B = diag(sin φ_i)`
/// next to the richness check at the same points.
pub fn verify_diagonal_from_claws(
    sys: &DiagonalSystem,
    cand: &ConservationCandidate,
    points: &[Vec<f64>],
    opts: &ClawOptions,
    richness_tol: f64,
) -> Result<DiagonalClawReport> {
    let strict: Vec<Vec<f64>> = points.iter().filter(|p| sys.check_strict(p).is_ok()).cloned().collect();
    Ok(DiagonalClawReport {
        multiplier: verify_conservation_form(&sys.as_quasilinear()?, cand, &strict, opts)?,
        richness: check_richness(sys, &strict, richness_tol),
    })
}
