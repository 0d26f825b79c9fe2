//! Characteristic pencil `P(α, β) = det(αB − βA)`, condition (P), strict
//! hyperbolicity and the characteristic angle fan.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expression;

/// Default relative tolerance on pencil coefficients.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Minimum angular separation (mod π) for two characteristic directions
/// to count as distinct.
pub const ANGLE_GAP_TOL: f64 = 1e-7;

const MAX_INTERPOLATION_CONDITION: f64 = 1e8;

/// `A(u) u_x + B(u) u_y = 0` with entry-wise expression matrices.
#[derive(Debug, Clone)]
pub struct QuasiLinearSystem {
    vars: Vec<String>,
    a: Vec<Vec<Expression>>,
    b: Vec<Vec<Expression>>,
}

impl QuasiLinearSystem {
    pub fn new(vars: Vec<String>, a: Vec<Vec<Expression>>, b: Vec<Vec<Expression>>) -> Result<Self> {
        let n = vars.len();
        if n < 2 {
            return Err(Error::Invalid(format!("system dimension must be at least 2, got {n}")));
        }
        for m in [&a, &b] {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::Invalid(format!("matrices must be {n}x{n}")));
            }
            if m.iter().flatten().any(|e| e.variables() != vars.as_slice()) {
                return Err(Error::Invalid("matrix entries must use the system variables".into()));
            }
        }
        Ok(QuasiLinearSystem { vars, a, b })
    }

    /// Parses `A` and `B` from string matrices in the expression grammar.
    pub fn parse(
        vars: &[impl AsRef<str>],
        a: &[Vec<String>],
        b: &[Vec<String>],
        constants: &[(String, f64)],
    ) -> Result<Self> {
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let parse_matrix = |m: &[Vec<String>]| -> Result<Vec<Vec<Expression>>> {
            m.iter()
                .map(|row| {
                    row.iter()
                        .map(|s| Expression::parse_with_constants(s, &vars, constants))
                        .collect()
                })
                .collect()
        };
        let a = parse_matrix(a)?;
        let b = parse_matrix(b)?;
        QuasiLinearSystem::new(vars, a, b)
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn a_entries(&self) -> &[Vec<Expression>] {
        &self.a
    }

    pub fn b_entries(&self) -> &[Vec<Expression>] {
        &self.b
    }

    fn eval_matrix(m: &[Vec<Expression>], u: &[f64]) -> Result<DMatrix<f64>> {
        let n = m.len();
        let mut out = DMatrix::zeros(n, n);
        for (i, row) in m.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                out[(i, j)] = e.eval(u)?;
            }
        }
        Ok(out)
    }

    /// `(A(u), B(u))`.
    pub fn matrices_at(&self, u: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((Self::eval_matrix(&self.a, u)?, Self::eval_matrix(&self.b, u)?))
    }

    /// Coefficients of `det(αB(u) − βA(u))`, recovered by evaluating the
    /// determinant at `n + 1` fixed angles and solving for the monomial weights.
    pub fn pencil_at(&self, u: &[f64]) -> Result<PencilPolynomial> {
        let (a, b) = self.matrices_at(u)?;
        pencil_from_matrices(&a, &b)
    }

    /// Pull-back under a rotation of the `(x, y)` plane by `theta`; the
    /// characteristic fan of the result is the original fan shifted by `+theta`.
    pub fn rotate_coordinates(&self, theta: f64) -> Result<Self> {
        let (c, s) = (theta.cos(), theta.sin());
        let n = self.dim();
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for i in 0..n {
            let mut ra = Vec::with_capacity(n);
            let mut rb = Vec::with_capacity(n);
            for j in 0..n {
                let (aij, bij) = (&self.a[i][j], &self.b[i][j]);
                ra.push(Expression::linear_combination(&[(c, aij), (-s, bij)])?);
                rb.push(Expression::linear_combination(&[(s, aij), (c, bij)])?);
            }
            a.push(ra);
            b.push(rb);
        }
        QuasiLinearSystem::new(self.vars.clone(), a, b)
    }
}

/// `P(α, β) = Σ_k c_k α^{n−k} β^k` at a fixed state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PencilPolynomial {
    pub coeffs: Vec<f64>,
    /// Largest absolute entry of `A` and `B` at the state.
    pub matrix_scale: f64,
}

fn interpolation_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, n + 1, |m, k| {
        let theta = m as f64 * PI / (n as f64 + 1.0);
        theta.cos().powi((n - k) as i32) * theta.sin().powi(k as i32)
    })
}

/// Pencil coefficients from numeric matrices.
pub fn pencil_from_matrices(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<PencilPolynomial> {
    let n = a.nrows();
    let m = interpolation_matrix(n);
    let sv = m.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_INTERPOLATION_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let rhs = DVector::from_fn(n + 1, |i, _| {
        let theta = i as f64 * PI / (n as f64 + 1.0);
        (b * theta.cos() - a * theta.sin()).determinant()
    });
    let coeffs = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    let matrix_scale = a.amax().max(b.amax());
    Ok(PencilPolynomial {
        coeffs: coeffs.iter().copied().collect(),
        matrix_scale,
    })
}

impl PencilPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, alpha: f64, beta: f64) -> f64 {
        let n = self.degree() as i32;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * alpha.powi(n - k as i32) * beta.powi(k as i32))
            .sum()
    }

    /// `P(cos φ, sin φ)`.
    pub fn eval_angle(&self, phi: f64) -> f64 {
        self.eval(phi.cos(), phi.sin())
    }

    fn eval_angle_derivative(&self, phi: f64) -> f64 {
        let n = self.degree() as i32;
        let (c, s) = (phi.cos(), phi.sin());
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, ck)| {
                let k = k as i32;
                let p = n - k;
                let d_cos = if p > 0 { -f64::from(p) * c.powi(p - 1) * s * s.powi(k) } else { 0.0 };
                let d_sin = if k > 0 { f64::from(k) * s.powi(k - 1) * c * c.powi(p) } else { 0.0 };
                ck * (d_cos + d_sin)
            })
            .sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Condition (P) at this state.
    pub fn is_nonzero(&self, tol: f64) -> bool {
        self.norm_inf() > tol * (1.0 + self.matrix_scale)
    }

    /// Real projective roots as angles in `[0, π)`.
    pub fn characteristic_fan(&self, tol: f64) -> Result<CharacteristicFan> {
        if !self.is_nonzero(tol) {
            return Err(Error::DegeneratePencil);
        }
        let n = self.degree();
        let scale = self.norm_inf();
        // α = 0 (φ = π/2) is a root exactly when the β^n coefficient vanishes;
        // each further vanishing top coefficient raises its multiplicity.
        let mut top = n;
        while top > 0 && self.coeffs[top].abs() <= tol * scale {
            top -= 1;
        }
        let infinity_multiplicity = n - top;

        let mut angles: Vec<f64> = Vec::with_capacity(n);
        if infinity_multiplicity > 0 {
            angles.extend(std::iter::repeat_n(FRAC_PI_2, infinity_multiplicity));
        }
        for t in real_roots(&self.coeffs[..=top]) {
            let phi = self.polish(t.atan());
            angles.push(normalize_angle(phi));
        }
        angles.sort_by(f64::total_cmp);
        let min_gap = min_projective_gap(&angles);
        let strict = angles.len() == n && min_gap > ANGLE_GAP_TOL.max(tol);
        Ok(CharacteristicFan {
            angles,
            strict,
            min_gap,
        })
    }

    fn polish(&self, mut phi: f64) -> f64 {
        for _ in 0..8 {
            let f = self.eval_angle(phi);
            let df = self.eval_angle_derivative(phi);
            if df == 0.0 {
                break;
            }
            let step = f / df;
            if !step.is_finite() || step.abs() > 1e-3 {
                break;
            }
            phi -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        phi
    }
}

/// Real roots of `Σ c_k t^k` (ascending coefficients, `c_last ≠ 0`) from the
/// eigenvalues of the companion matrix.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let d = coeffs.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = coeffs[d];
    let companion = DMatrix::from_fn(d, d, |i, j| {
        if j == d - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

/// Reduces an angle to `[0, π)`.
pub fn normalize_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Distance between two directions modulo π.
pub fn projective_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn min_projective_gap(sorted: &[f64]) -> f64 {
    if sorted.len() < 2 {
        return PI;
    }
    let mut gap = sorted[0] + PI - sorted[sorted.len() - 1];
    for w in sorted.windows(2) {
        gap = gap.min(w[1] - w[0]);
    }
    gap
}

/// Characteristic angles `φ_1 < … < φ_k` in `[0, π)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicFan {
    pub angles: Vec<f64>,
    pub strict: bool,
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "class", content = "detail")]
pub enum NodeClass {
    Strict,
    NonStrict,
    PencilDegenerate,
    DomainError(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanNode {
    pub state: Vec<f64>,
    pub class: NodeClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub nodes: Vec<ScanNode>,
    pub strict: usize,
    pub non_strict: usize,
    pub degenerate: usize,
    pub domain_errors: usize,
}

/// Classifies every node of a regular grid on the box `[lo, hi]`
/// (`resolution` nodes per axis).
pub fn hyperbolicity_scan(
    sys: &QuasiLinearSystem,
    lo: &[f64],
    hi: &[f64],
    resolution: usize,
    tol: f64,
) -> Result<ScanReport> {
    let n = sys.dim();
    if lo.len() != n || hi.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: lo.len().min(hi.len()),
        });
    }
    if resolution == 0 {
        return Err(Error::Invalid("scan resolution must be positive".into()));
    }
    let total = resolution.pow(n as u32);
    let nodes: Vec<ScanNode> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let state: Vec<f64> = (0..n)
                .map(|axis| {
                    let idx = rem % resolution;
                    rem /= resolution;
                    if resolution == 1 {
                        0.5 * (lo[axis] + hi[axis])
                    } else {
                        lo[axis] + (hi[axis] - lo[axis]) * idx as f64 / (resolution - 1) as f64
                    }
                })
                .collect();
            let class = match sys.pencil_at(&state) {
                Err(e) => NodeClass::DomainError(e.to_string()),
                Ok(p) if !p.is_nonzero(tol) => NodeClass::PencilDegenerate,
                Ok(p) => match p.characteristic_fan(tol) {
                    Ok(f) if f.strict => NodeClass::Strict,
                    Ok(_) => NodeClass::NonStrict,
                    Err(e) => NodeClass::DomainError(e.to_string()),
                },
            };
            ScanNode { state, class }
        })
        .collect();
    let count = |pred: fn(&NodeClass) -> bool| nodes.iter().filter(|n| pred(&n.class)).count();
    Ok(ScanReport {
        strict: count(|c| matches!(c, NodeClass::Strict)),
        non_strict: count(|c| matches!(c, NodeClass::NonStrict)),
        degenerate: count(|c| matches!(c, NodeClass::PencilDegenerate)),
        domain_errors: count(|c| matches!(c, NodeClass::DomainError(_))),
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn constant_system(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> QuasiLinearSystem {
        let vars = ["p", "q"];
        let m = |x: [[f64; 2]; 2]| -> Vec<Vec<String>> {
            x.iter().map(|r| r.iter().map(|v| format!("{v:?}")).collect()).collect()
        };
        QuasiLinearSystem::parse(&vars, &m(a), &m(b), &[]).unwrap()
    }

    #[test]
    fn diagonal_pencil_coefficients() {
        let sys = constant_system([[1.0, 0.0], [0.0, 1.0]], [[0.0, 0.0], [0.0, 1.0]]);
        let p = sys.pencil_at(&[0.0, 0.0]).unwrap();
        let expected = [0.0, -1.0, 1.0];
        for (c, e) in p.coeffs.iter().zip(expected) {
            assert!((c - e).abs() < 1e-14, "{:?}", p.coeffs);
        }
        let fan = p.characteristic_fan(DEFAULT_TOL).unwrap();
        assert!(fan.strict);
        assert!(fan.angles[0].abs() < 1e-12);
        assert!((fan.angles[1] - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn zero_pencil_is_rejected() {
        let p = PencilPolynomial {
            coeffs: vec![0.0; 4],
            matrix_scale: 1.0,
        };
        assert!(!p.is_nonzero(DEFAULT_TOL));
        assert_eq!(p.characteristic_fan(DEFAULT_TOL), Err(Error::DegeneratePencil));
        let p = PencilPolynomial {
            coeffs: vec![3.0, 0.0, -9.0, 0.0],
            matrix_scale: 1.0,
        };
        assert!(p.is_nonzero(DEFAULT_TOL));
    }

    #[test]
    fn cos3phi_fan() {
        let p = PencilPolynomial {
            coeffs: vec![3.0, 0.0, -9.0, 0.0],
            matrix_scale: 1.0,
        };
        let fan = p.characteristic_fan(DEFAULT_TOL).unwrap();
        assert!(fan.strict);
        let expected = [PI / 6.0, PI / 2.0, 5.0 * PI / 6.0];
        for (a, e) in fan.angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{:?}", fan.angles);
        }
    }

    #[test]
    fn complex_pair_is_not_strict() {
        // α(α² + β²)
        let p = PencilPolynomial {
            coeffs: vec![1.0, 0.0, 1.0, 0.0],
            matrix_scale: 1.0,
        };
        let fan = p.characteristic_fan(DEFAULT_TOL).unwrap();
        assert!(!fan.strict);
        assert_eq!(fan.angles.len(), 1);
        assert!((fan.angles[0] - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn double_root_at_infinity_is_not_strict() {
        // α β²: roots t = 0 and a double root at α = 0
        let p = PencilPolynomial {
            coeffs: vec![0.0, 0.0, 1.0, 0.0],
            matrix_scale: 1.0,
        };
        let fan = p.characteristic_fan(DEFAULT_TOL).unwrap();
        assert!(!fan.strict);
    }

    #[test]
    fn rotation_shifts_fan() {
        let sys = constant_system([[1.0, 0.0], [0.0, 1.0]], [[0.0, 0.0], [0.0, 1.0]]);
        let same = sys.rotate_coordinates(0.0).unwrap();
        assert_eq!(
            same.pencil_at(&[0.0, 0.0]).unwrap().coeffs,
            sys.pencil_at(&[0.0, 0.0]).unwrap().coeffs
        );
        let rot = sys.rotate_coordinates(FRAC_PI_4).unwrap();
        let fan = rot.pencil_at(&[0.0, 0.0]).unwrap().characteristic_fan(DEFAULT_TOL).unwrap();
        assert!((fan.angles[0] - FRAC_PI_4).abs() < 1e-12, "{:?}", fan.angles);
        assert!((fan.angles[1] - FRAC_PI_2).abs() < 1e-12, "{:?}", fan.angles);
    }

    #[test]
    fn scan_of_constant_system_is_all_strict() {
        let sys = constant_system([[1.0, 0.0], [0.0, 1.0]], [[0.0, 0.0], [0.0, 1.0]]);
        let rep = hyperbolicity_scan(&sys, &[-1.0, -1.0], &[1.0, 1.0], 4, DEFAULT_TOL).unwrap();
        assert_eq!(rep.strict, 16);
        assert_eq!(rep.nodes.len(), 16);
    }

    #[test]
    fn projective_helpers() {
        assert!((normalize_angle(-FRAC_PI_4) - 3.0 * FRAC_PI_4).abs() < 1e-15);
        assert_eq!(normalize_angle(PI), 0.0);
        assert!(projective_distance(0.01, PI - 0.01) < 0.0200001);
    }
}
