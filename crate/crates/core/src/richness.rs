//! Diagonal systems `cos φ_i (r_i)_x + sin φ_i (r_i)_y = 0` in Riemann
//! invariants and the compatibility conditions on their coefficients.
//!
//! With `λ_i = tan φ_i` the two coefficient families are
//!
//! ```text
//! a_ij = ∂_i λ_j / (λ_i − λ_j)          b_ij = ∂_i φ_j / tan(φ_i − φ_j)
//! ```
//!
//! and the conditions checked here are `∂_k a_ij = ∂_i a_kj` (on speeds) and
//! `∂_k b_ij = ∂_i b_kj` (on angles) for pairwise distinct `i, j, k`. The angle
//! form is invariant under rotations of the plane and stays meaningful where
//! some `λ` is infinite. All derivatives are exact (nested dual numbers).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Dual, Expression, Scalar, UnaryOp};
use crate::pencil::{projective_distance, QuasiLinearSystem, ANGLE_GAP_TOL};
use crate::quadrature::adaptive_simpson;
use crate::sampling::DomainBox;

/// Below this `|cos φ|` the speed `λ = tan φ` is treated as infinite.
pub const SLOPE_TOL: f64 = 1e-7;
/// Below this `|λ_i − λ_j|` speeds are treated as coincident.
pub const SPEED_GAP_TOL: f64 = 1e-7;
/// Quadrature tolerance per staircase leg of the `G_j` line integral.
pub const G_QUADRATURE_TOL: f64 = 1e-10;
/// Maximum disagreement between staircase orders on a rich region.
pub const G_CLOSEDNESS_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DiagonalSystem {
    vars: Vec<String>,
    phi: Vec<Expression>,
    domain: Option<DomainBox>,
}

impl DiagonalSystem {
    pub fn new(vars: Vec<String>, phi: Vec<Expression>) -> Result<Self> {
        if vars.len() < 2 || phi.len() != vars.len() {
            return Err(Error::Invalid(format!(
                "need n >= 2 angle fields for n invariants, got {} fields for {} invariants",
                phi.len(),
                vars.len()
            )));
        }
        if phi.iter().any(|e| e.variables() != vars.as_slice()) {
            return Err(Error::Invalid("angle fields must use the invariant names".into()));
        }
        Ok(DiagonalSystem {
            vars,
            phi,
            domain: None,
        })
    }

    pub fn from_phi(vars: &[impl AsRef<str>], phi: &[impl AsRef<str>], constants: &[(String, f64)]) -> Result<Self> {
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let phi = phi
            .iter()
            .map(|s| Expression::parse_with_constants(s.as_ref(), &vars, constants))
            .collect::<Result<Vec<_>>>()?;
        DiagonalSystem::new(vars, phi)
    }

    /// Angles `φ_i = atan(λ_i)` from characteristic speeds.
    pub fn from_lambda(vars: &[impl AsRef<str>], lambda: &[impl AsRef<str>], constants: &[(String, f64)]) -> Result<Self> {
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let phi = lambda
            .iter()
            .map(|s| {
                Expression::parse_with_constants(s.as_ref(), &vars, constants)
                    .map(|e| e.apply(UnaryOp::Atan))
            })
            .collect::<Result<Vec<_>>>()?;
        DiagonalSystem::new(vars, phi)
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Result<Self> {
        if domain.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: domain.dim(),
            });
        }
        self.domain = Some(domain);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn phi(&self) -> &[Expression] {
        &self.phi
    }

    pub fn domain(&self) -> Option<&DomainBox> {
        self.domain.as_ref()
    }

    pub fn angles_at(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.phi.iter().map(|e| e.eval(r)).collect()
    }

    /// Errors unless all angles are pairwise distinct mod π at `r`.
    pub fn check_strict(&self, r: &[f64]) -> Result<()> {
        let angles = self.angles_at(r)?;
        for i in 0..angles.len() {
            for j in i + 1..angles.len() {
                let gap = projective_distance(angles[i], angles[j]);
                if gap <= ANGLE_GAP_TOL {
                    return Err(Error::CoincidentAngles { i, j, gap });
                }
            }
        }
        Ok(())
    }

    /// `φ_i ↦ φ_i + θ`.
    pub fn rotate_fan(&self, theta: f64) -> DiagonalSystem {
        DiagonalSystem {
            vars: self.vars.clone(),
            phi: self.phi.iter().map(|e| e.shifted(theta)).collect(),
            domain: self.domain.clone(),
        }
    }

    /// The same system as `A = diag(cos φ_i)`, `B = diag(sin φ_i)`.
    pub fn as_quasilinear(&self) -> Result<QuasiLinearSystem> {
        let n = self.dim();
        let zero = Expression::constant(0.0, &self.vars);
        let build = |op: UnaryOp| -> Vec<Vec<Expression>> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if i == j { self.phi[i].apply(op) } else { zero.clone() })
                        .collect()
                })
                .collect()
        };
        QuasiLinearSystem::new(self.vars.clone(), build(UnaryOp::Cos), build(UnaryOp::Sin))
    }

    fn local(&self, r: &[f64]) -> Result<Local> {
        let jets = self.phi.iter().map(|e| e.jet(r)).collect::<Result<Vec<_>>>()?;
        Ok(Local {
            phi: jets.iter().map(|j| j.value).collect(),
            grad: jets.iter().map(|j| j.gradient.clone()).collect(),
            hess: jets.into_iter().map(|j| j.hessian).collect(),
        })
    }
}

/// Second-order local data of all angle fields at one point.
struct Local {
    phi: Vec<f64>,
    grad: Vec<Vec<f64>>,
    hess: Vec<Vec<Vec<f64>>>,
}

type KDual = Dual<f64>;

impl Local {
    /// `φ_j` as a dual number in direction `r_k`.
    fn phi_k(&self, j: usize, k: usize) -> KDual {
        Dual::new(self.phi[j], self.grad[j][k])
    }

    /// `∂_i φ_j` as a dual number in direction `r_k`.
    fn dphi_k(&self, i: usize, j: usize, k: usize) -> KDual {
        Dual::new(self.grad[j][i], self.hess[j][i][k])
    }

    fn angle_gap(&self, i: usize, j: usize) -> Result<()> {
        let gap = projective_distance(self.phi[i], self.phi[j]);
        if gap <= ANGLE_GAP_TOL {
            return Err(Error::CoincidentAngles { i, j, gap });
        }
        Ok(())
    }

    fn finite_slope(&self, i: usize) -> Result<()> {
        let cos = self.phi[i].cos().abs();
        if cos <= SLOPE_TOL {
            return Err(Error::InfiniteSlope { i, cos });
        }
        Ok(())
    }

    /// `b_ij` and its `r_k` derivative. The cotangent is formed as cos/sin so
    /// angle differences of π/2 give a finite (zero) cotangent.
    fn b(&self, i: usize, j: usize, k: usize) -> Result<KDual> {
        self.angle_gap(i, j)?;
        let d = self.phi_k(i, k) - self.phi_k(j, k);
        Ok(self.dphi_k(i, j, k) * d.cos() / d.sin())
    }

    fn lambda(&self, j: usize, k: usize) -> Result<KDual> {
        self.finite_slope(j)?;
        Ok(self.phi_k(j, k).tan())
    }

    /// `a_ij` and its `r_k` derivative.
    fn a(&self, i: usize, j: usize, k: usize) -> Result<KDual> {
        let li = self.lambda(i, k)?;
        let lj = self.lambda(j, k)?;
        let gap = (li.re - lj.re).abs();
        if gap <= SPEED_GAP_TOL {
            return Err(Error::CoincidentSpeeds { i, j, gap });
        }
        let one = KDual::from_f64(1.0);
        let dlam = (one + lj * lj) * self.dphi_k(i, j, k);
        Ok(dlam / (li - lj))
    }
}

fn distinct(i: usize, j: usize, k: usize, n: usize) -> Result<()> {
    if i >= n || j >= n || k >= n {
        return Err(Error::Invalid(format!("index out of range for n = {n}")));
    }
    if i == j || j == k || i == k {
        return Err(Error::Invalid(format!("indices ({i}, {j}, {k}) must be pairwise distinct")));
    }
    Ok(())
}

fn pair(i: usize, j: usize, n: usize) -> Result<()> {
    if i >= n || j >= n || i == j {
        return Err(Error::Invalid(format!("need distinct indices below {n}, got ({i}, {j})")));
    }
    Ok(())
}

/// `a_ij = ∂_i λ_j / (λ_i − λ_j)`.
pub fn a_coeff(sys: &DiagonalSystem, i: usize, j: usize, r: &[f64]) -> Result<f64> {
    pair(i, j, sys.dim())?;
    Ok(sys.local(r)?.a(i, j, i)?.re)
}

/// `b_ij = ∂_i φ_j / tan(φ_i − φ_j)`.
pub fn b_coeff(sys: &DiagonalSystem, i: usize, j: usize, r: &[f64]) -> Result<f64> {
    pair(i, j, sys.dim())?;
    b_value(sys, i, j, r)
}

/// First-order-only evaluation of `b_ij` (no Hessian).
fn b_value(sys: &DiagonalSystem, i: usize, j: usize, r: &[f64]) -> Result<f64> {
    let phi_i = sys.phi[i].eval(r)?;
    let dphi = sys.phi[j].partial(i, r)?;
    let phi_j = sys.phi[j].eval(r)?;
    let gap = projective_distance(phi_i, phi_j);
    if gap <= ANGLE_GAP_TOL {
        return Err(Error::CoincidentAngles { i, j, gap });
    }
    let d = phi_i - phi_j;
    Ok(dphi * d.cos() / d.sin())
}

/// Left minus right side of a compatibility identity, raw and normalised by
/// `1 + max(|lhs|, |rhs|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub raw: f64,
    pub normalized: f64,
}

impl Residual {
    fn from_sides(lhs: f64, rhs: f64) -> Self {
        let raw = lhs - rhs;
        Residual {
            raw,
            normalized: raw.abs() / (1.0 + lhs.abs().max(rhs.abs())),
        }
    }
}

/// `∂_k a_ij − ∂_i a_kj`.
pub fn residual_r(sys: &DiagonalSystem, i: usize, j: usize, k: usize, r: &[f64]) -> Result<Residual> {
    distinct(i, j, k, sys.dim())?;
    let loc = sys.local(r)?;
    residual_r_local(&loc, i, j, k)
}

fn residual_r_local(loc: &Local, i: usize, j: usize, k: usize) -> Result<Residual> {
    let lhs = loc.a(i, j, k)?.eps;
    let rhs = loc.a(k, j, i)?.eps;
    Ok(Residual::from_sides(lhs, rhs))
}

/// `∂_k b_ij − ∂_i b_kj`.
pub fn residual_phi(sys: &DiagonalSystem, i: usize, j: usize, k: usize, r: &[f64]) -> Result<Residual> {
    distinct(i, j, k, sys.dim())?;
    let loc = sys.local(r)?;
    residual_phi_local(&loc, i, j, k)
}

fn residual_phi_local(loc: &Local, i: usize, j: usize, k: usize) -> Result<Residual> {
    let lhs = loc.b(i, j, k)?.eps;
    let rhs = loc.b(k, j, i)?.eps;
    Ok(Residual::from_sides(lhs, rhs))
}

/// Residuals of `∂_i a_kj = ∂_k a_ij = a_ki a_ij + a_ik a_kj − a_kj a_ij`:
/// `(∂_i a_kj − ∂_k a_ij, ∂_k a_ij − quadratic form)`.
pub fn verify_identity15(sys: &DiagonalSystem, i: usize, j: usize, k: usize, r: &[f64]) -> Result<(f64, f64)> {
    distinct(i, j, k, sys.dim())?;
    let loc = sys.local(r)?;
    let d_k_aij = loc.a(i, j, k)?.eps;
    let d_i_akj = loc.a(k, j, i)?.eps;
    let a = |p: usize, q: usize| loc.a(p, q, p).map(|d| d.re);
    let quad = a(k, i)? * a(i, j)? + a(i, k)? * a(k, j)? - a(k, j)? * a(i, j)?;
    Ok((d_i_akj - d_k_aij, d_k_aij - quad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Rich,
    NotRich,
    /// `n = 2`: no index triples, every strictly hyperbolic system qualifies.
    Vacuous,
    /// No admissible sample (e.g. all speeds infinite for the speed form).
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct TripleResidual {
    pub triple: [usize; 3],
    pub point: usize,
    pub residual_r: Option<Residual>,
    pub residual_phi: Residual,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedPoint {
    pub point: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RichnessReport {
    pub n: usize,
    pub tol: f64,
    pub points: Vec<Vec<f64>>,
    pub entries: Vec<TripleResidual>,
    pub skipped: Vec<SkippedPoint>,
    pub max_raw_r: f64,
    pub max_raw_phi: f64,
    pub max_normalized_r: f64,
    pub max_normalized_phi: f64,
    pub verdict_r: Verdict,
    pub verdict_phi: Verdict,
}

impl RichnessReport {
    /// Entry with the largest normalised angle-form residual.
    pub fn worst_phi(&self) -> Option<&TripleResidual> {
        self.entries
            .iter()
            .max_by(|a, b| a.residual_phi.normalized.total_cmp(&b.residual_phi.normalized))
    }

    /// True for rich or vacuous angle-form verdicts.
    pub fn is_rich(&self) -> bool {
        matches!(self.verdict_phi, Verdict::Rich | Verdict::Vacuous)
    }
}

enum PointOutcome {
    Entries(Vec<TripleResidual>),
    Skipped(String),
}

/// Evaluates both conditions for every ordered triple of distinct indices at
/// every sample point. Non-strict points are skipped and listed; the speed
/// form is omitted at points where some `λ` is infinite.
pub fn check_richness(sys: &DiagonalSystem, points: &[Vec<f64>], tol: f64) -> RichnessReport {
    let n = sys.dim();
    let triples: Vec<[usize; 3]> = (0..n)
        .flat_map(|i| (0..n).flat_map(move |j| (0..n).map(move |k| [i, j, k])))
        .filter(|[i, j, k]| i != j && j != k && i != k)
        .collect();

    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .enumerate()
        .map(|(idx, r)| {
            if let Err(e) = sys.check_strict(r) {
                return PointOutcome::Skipped(e.to_string());
            }
            let loc = match sys.local(r) {
                Ok(l) => l,
                Err(e) => return PointOutcome::Skipped(e.to_string()),
            };
            let mut out = Vec::with_capacity(triples.len());
            for &[i, j, k] in &triples {
                let phi = match residual_phi_local(&loc, i, j, k) {
                    Ok(p) => p,
                    Err(e) => return PointOutcome::Skipped(e.to_string()),
                };
                out.push(TripleResidual {
                    triple: [i, j, k],
                    point: idx,
                    residual_r: residual_r_local(&loc, i, j, k).ok(),
                    residual_phi: phi,
                });
            }
            PointOutcome::Entries(out)
        })
        .collect();

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (idx, o) in outcomes.into_iter().enumerate() {
        match o {
            PointOutcome::Entries(e) => entries.extend(e),
            PointOutcome::Skipped(reason) => skipped.push(SkippedPoint { point: idx, reason }),
        }
    }

    let fold = |f: &dyn Fn(&TripleResidual) -> Option<f64>| {
        entries.iter().filter_map(f).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
    };
    let max_raw_phi = fold(&|e| Some(e.residual_phi.raw.abs()));
    let max_norm_phi = fold(&|e| Some(e.residual_phi.normalized));
    let max_raw_r = fold(&|e| e.residual_r.map(|r| r.raw.abs()));
    let max_norm_r = fold(&|e| e.residual_r.map(|r| r.normalized));

    let verdict = |max: Option<f64>| match (n, max) {
        (2, _) => Verdict::Vacuous,
        (_, None) => Verdict::Undetermined,
        (_, Some(m)) if m <= tol => Verdict::Rich,
        _ => Verdict::NotRich,
    };

    RichnessReport {
        n,
        tol,
        points: points.to_vec(),
        verdict_r: verdict(max_norm_r),
        verdict_phi: verdict(max_norm_phi),
        max_raw_r: max_raw_r.unwrap_or(0.0),
        max_raw_phi: max_raw_phi.unwrap_or(0.0),
        max_normalized_r: max_norm_r.unwrap_or(0.0),
        max_normalized_phi: max_norm_phi.unwrap_or(0.0),
        entries,
        skipped,
    }
}

/// `G_j(target)` along a staircase path from `base`: first the `r_j` leg
/// (no contribution), then the legs `r_i`, `i ∈ order`, each integrating
/// `b_ij` by adaptive quadrature. Gauge: `G_j = 0` on the `r_j` line through
/// `base`.
pub fn reconstruct_g_with_order(
    sys: &DiagonalSystem,
    j: usize,
    base: &[f64],
    target: &[f64],
    order: &[usize],
) -> Result<f64> {
    let n = sys.dim();
    if base.len() != n || target.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: base.len().min(target.len()),
        });
    }
    if j >= n {
        return Err(Error::Invalid(format!("index {j} out of range")));
    }
    let mut expected: Vec<usize> = (0..n).filter(|&i| i != j).collect();
    let mut given = order.to_vec();
    given.sort_unstable();
    expected.sort_unstable();
    if given != expected {
        return Err(Error::Invalid(format!(
            "staircase order {order:?} must be a permutation of the indices other than {j}"
        )));
    }
    let mut cur = base.to_vec();
    cur[j] = target[j];
    let mut total = 0.0;
    for &i in order {
        let (from, to) = (cur[i], target[i]);
        let mut probe = cur.clone();
        total += adaptive_simpson(
            |t| {
                let mut p = probe.clone();
                p[i] = t;
                b_value(sys, i, j, &p)
            },
            from,
            to,
            G_QUADRATURE_TOL,
        )?;
        probe[i] = to;
        cur = probe;
    }
    Ok(total)
}

/// `G_j(target)` with a closedness check: ascending and descending staircase
/// orders must agree to [`G_CLOSEDNESS_TOL`].
pub fn reconstruct_g(sys: &DiagonalSystem, j: usize, base: &[f64], target: &[f64]) -> Result<f64> {
    let n = sys.dim();
    let asc: Vec<usize> = (0..n).filter(|&i| i != j).collect();
    let g = reconstruct_g_with_order(sys, j, base, target, &asc)?;
    if asc.len() >= 2 {
        let desc: Vec<usize> = asc.iter().rev().copied().collect();
        let g2 = reconstruct_g_with_order(sys, j, base, target, &desc)?;
        let discrepancy = (g - g2).abs();
        if discrepancy > G_CLOSEDNESS_TOL {
            return Err(Error::NotRichOnRegion { discrepancy });
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps3() -> DiagonalSystem {
        DiagonalSystem::from_lambda(
            &["r1", "r2", "r3"],
            &["r1 + (r1+r2+r3)", "r2 + (r1+r2+r3)", "r3 + (r1+r2+r3)"],
            &[],
        )
        .unwrap()
    }

    fn perturbed() -> DiagonalSystem {
        DiagonalSystem::from_phi(
            &["r1", "r2", "r3"],
            &[
                "atan(r1+r2+r3+r1) + 0.1*r2*r3",
                "atan(r2 + (r1+r2+r3))",
                "atan(r3 + (r1+r2+r3))",
            ],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn a_coeff_examples() {
        let two = DiagonalSystem::from_lambda(&["r1", "r2"], &["r2", "r1"], &[]).unwrap();
        assert!((a_coeff(&two, 0, 1, &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-14);
        assert!((a_coeff(&eps3(), 0, 1, &[0.0, 1.0, 2.0]).unwrap() + 1.0).abs() < 1e-13);
        let dec = DiagonalSystem::from_lambda(&["r1", "r2"], &["r1", "3 + r2"], &[]).unwrap();
        assert_eq!(a_coeff(&dec, 0, 1, &[0.5, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn b_coeff_conversion_example() {
        let b = b_coeff(&eps3(), 0, 1, &[0.0, 1.0, 2.0]).unwrap();
        assert!((b + 13.0 / 17.0).abs() < 1e-13, "{b}");
    }

    #[test]
    fn coefficient_errors() {
        let same = DiagonalSystem::from_lambda(&["r1", "r2"], &["r1", "r1"], &[]).unwrap();
        assert!(matches!(b_coeff(&same, 0, 1, &[0.3, 0.3]), Err(Error::CoincidentAngles { .. })));
        let vertical = DiagonalSystem::from_phi(&["r1", "r2"], &["1.5707963267948966 + 0*r1", "r2"], &[]).unwrap();
        assert!(matches!(a_coeff(&vertical, 1, 0, &[0.0, 0.2]), Err(Error::InfiniteSlope { .. })));
        // b stays finite where the angle difference is π/2
        let right = DiagonalSystem::from_phi(&["r1", "r2"], &["1.5707963267948966 + r2", "r1"], &[]).unwrap();
        assert!(b_coeff(&right, 0, 1, &[0.0, 0.0]).unwrap().abs() < 1e-15);
        assert!(matches!(residual_phi(&eps3(), 0, 0, 1, &[0.0, 1.0, 2.0]), Err(Error::Invalid(_))));
    }

    #[test]
    fn eps_system_residuals_vanish() {
        let r = [0.2, 0.9, 1.7];
        let rr = residual_r(&eps3(), 0, 1, 2, &r).unwrap();
        let rp = residual_phi(&eps3(), 0, 1, 2, &r).unwrap();
        assert!(rr.raw.abs() <= 1e-12, "{rr:?}");
        assert!(rp.raw.abs() <= 1e-9, "{rp:?}");
        let (sym, quad) = verify_identity15(&eps3(), 0, 1, 2, &r).unwrap();
        assert!(sym.abs() <= 1e-9 && quad.abs() <= 1e-9);
    }

    #[test]
    fn constant_angles_are_trivial() {
        let c = DiagonalSystem::from_phi(&["r1", "r2", "r3"], &["0.1", "0.9", "2.0"], &[]).unwrap();
        let p = [0.3, 0.1, -0.4];
        assert_eq!(residual_phi(&c, 0, 1, 2, &p).unwrap().raw, 0.0);
        assert_eq!(residual_r(&c, 0, 1, 2, &p).unwrap().raw, 0.0);
        assert_eq!(verify_identity15(&c, 2, 0, 1, &p).unwrap(), (0.0, 0.0));
        assert_eq!(reconstruct_g(&c, 1, &[0.0; 3], &p).unwrap(), 0.0);
    }

    #[test]
    fn two_component_is_vacuous() {
        let two = DiagonalSystem::from_lambda(&["r1", "r2"], &["r2", "r1 + 5"], &[]).unwrap();
        let rep = check_richness(&two, &[vec![0.0, 1.0], vec![0.5, 0.2]], 1e-8);
        assert_eq!(rep.verdict_phi, Verdict::Vacuous);
        assert_eq!(rep.verdict_r, Verdict::Vacuous);
        assert!(rep.entries.is_empty());
        assert!(rep.is_rich());
    }

    #[test]
    fn perturbed_is_not_rich() {
        let rep = check_richness(&perturbed(), &[vec![0.3, 0.7, 1.2]], 1e-8);
        assert_eq!(rep.verdict_phi, Verdict::NotRich);
        assert_eq!(rep.verdict_r, Verdict::NotRich);
    }

    #[test]
    fn non_strict_points_are_skipped() {
        let rep = check_richness(&eps3(), &[vec![0.5, 0.5, 1.0], vec![0.2, 0.9, 1.7]], 1e-8);
        assert_eq!(rep.skipped.len(), 1);
        assert_eq!(rep.skipped[0].point, 0);
        assert_eq!(rep.entries.len(), 6);
    }

    #[test]
    fn g_reconstruction_basics() {
        let base = [0.0, 1.0, 2.0];
        assert_eq!(reconstruct_g(&eps3(), 0, &base, &base).unwrap(), 0.0);
        let t = [0.5, 1.5, 2.5];
        let g1 = reconstruct_g_with_order(&eps3(), 0, &base, &t, &[1, 2]).unwrap();
        let g2 = reconstruct_g_with_order(&eps3(), 0, &base, &t, &[2, 1]).unwrap();
        assert!((g1 - g2).abs() <= 1e-8);
        assert!(reconstruct_g_with_order(&eps3(), 0, &base, &t, &[0, 1]).is_err());
    }

    #[test]
    fn rotate_fan_by_pi_is_identity_for_residuals() {
        let r = [0.3, 0.7, 1.2];
        let a = residual_phi(&perturbed(), 1, 0, 2, &r).unwrap();
        let b = residual_phi(&perturbed().rotate_fan(std::f64::consts::PI), 1, 0, 2, &r).unwrap();
        assert!((a.raw - b.raw).abs() <= 1e-9 * a.raw.abs());
    }

    #[test]
    fn as_quasilinear_has_diagonal_fan() {
        let q = eps3().as_quasilinear().unwrap();
        let r = [0.2, 0.9, 1.7];
        let fan = q.pencil_at(&r).unwrap().characteristic_fan(1e-9).unwrap();
        let mut want: Vec<f64> = eps3().angles_at(&r).unwrap().into_iter().map(crate::pencil::normalize_angle).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in fan.angles.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
