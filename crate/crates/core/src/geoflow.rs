//! Geodesic flow of a conformal metric `Λ(x, y)(dx² + dy²)` on the unit
//! torus, the cubic integral
//!
//! ```text
//! F = a0 p1³ + a1 p1² p2 + a2 p1 p2² + a3 p2³,
//! a0 = a + u/Λ, a1 = 3b + v/Λ, a2 = −3a + u/Λ, a3 = −b + v/Λ,
//! ```
//!
//! and the quasi-linear system on `(u, v, Λ)` expressing that `F` is an
//! integral. On the fibre `p = √Λ (cos φ, sin φ)` the characteristic pencil of
//! that system is proportional to `∂F/∂φ`, so its fan consists of the
//! critical angles of `F` and the critical values are Riemann invariants.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Dual, Expression, Scalar};
use crate::pencil::{normalize_angle, QuasiLinearSystem};

/// Grid size for dense scans over the fibre.
pub const FIBRE_SCAN: usize = 720;
const ROOT_TOL: f64 = 1e-12;
/// Boundary identification tolerance for doubly periodic data.
pub const PERIODICITY_TOL: f64 = 1e-9;

/// The system on `(u, v, Λ)` whose solutions make `F` an integral:
/// `A = [[1,0,3a],[0,1,3b],[Λ,0,u]]`, `B = [[0,−1,3b],[1,0,−3a],[0,Λ,v]]`.
pub fn build_system22(a: f64, b: f64) -> QuasiLinearSystem {
    let vars = ["u", "v", "Lambda"];
    let e = |s: &str| Expression::parse(s, &vars).expect("fixed expression");
    let c = |v: f64| Expression::constant(v, &vars);
    let am = vec![
        vec![c(1.0), c(0.0), c(3.0 * a)],
        vec![c(0.0), c(1.0), c(3.0 * b)],
        vec![e("Lambda"), c(0.0), e("u")],
    ];
    let bm = vec![
        vec![c(0.0), c(-1.0), c(3.0 * b)],
        vec![c(1.0), c(0.0), c(-3.0 * a)],
        vec![c(0.0), e("Lambda"), e("v")],
    ];
    QuasiLinearSystem::new(vars.iter().map(|s| s.to_string()).collect(), am, bm).expect("square 3x3 system")
}

fn xy_expr(text: &str, constants: &[(String, f64)]) -> Result<Expression> {
    Expression::parse_with_constants(text, &["x", "y"], constants)
}

/// `ds² = Λ(x, y)(dx² + dy²)`.
#[derive(Debug, Clone)]
pub struct ConformalMetric {
    lambda: Expression,
}

impl ConformalMetric {
    pub fn new(lambda: Expression) -> Result<Self> {
        if lambda.variables() != ["x", "y"] {
            return Err(Error::Invalid("metric factor must be an expression in x, y".into()));
        }
        Ok(ConformalMetric { lambda })
    }

    pub fn parse(text: &str, constants: &[(String, f64)]) -> Result<Self> {
        ConformalMetric::new(xy_expr(text, constants)?)
    }

    pub fn lambda(&self) -> &Expression {
        &self.lambda
    }

    fn positive<T: Scalar>(&self, x: T, y: T) -> Result<T> {
        let l = self.lambda.eval_generic(&[x, y])?;
        if !(l.value() > 0.0) {
            return Err(Error::Domain {
                op: "metric",
                detail: format!("Λ = {} at ({}, {})", l.value(), x.value(), y.value()),
            });
        }
        Ok(l)
    }

    /// `(Λ, Λ_x, Λ_y)`.
    pub fn gradient(&self, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        self.positive(x, y)?;
        let (l, g) = self.lambda.gradient(&[x, y])?;
        Ok((l, g[0], g[1]))
    }
}

/// Largest mismatch of `f` across the identified edges of the unit square.
pub fn periodicity_defect(f: &Expression, samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let t = k as f64 / samples as f64;
        worst = worst.max((f.eval(&[0.0, t])? - f.eval(&[1.0, t])?).abs());
        worst = worst.max((f.eval(&[t, 0.0])? - f.eval(&[t, 1.0])?).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct CubicIntegralState {
    a: f64,
    b: f64,
    u: Expression,
    v: Expression,
    metric: ConformalMetric,
}

impl CubicIntegralState {
    pub fn new(a: f64, b: f64, u: Expression, v: Expression, metric: ConformalMetric) -> Result<Self> {
        if u.variables() != ["x", "y"] || v.variables() != ["x", "y"] {
            return Err(Error::Invalid("u and v must be expressions in x, y".into()));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Invalid("a and b must be finite constants".into()));
        }
        Ok(CubicIntegralState { a, b, u, v, metric })
    }

    pub fn parse(a: f64, b: f64, u: &str, v: &str, lambda: &str, constants: &[(String, f64)]) -> Result<Self> {
        CubicIntegralState::new(
            a,
            b,
            xy_expr(u, constants)?,
            xy_expr(v, constants)?,
            ConformalMetric::parse(lambda, constants)?,
        )
    }

    /// Constant `u, v, Λ`.
    pub fn constant(a: f64, b: f64, u: f64, v: f64, lambda: f64) -> Result<Self> {
        let c = |val: f64| Expression::constant(val, &["x", "y"]);
        CubicIntegralState::new(a, b, c(u), c(v), ConformalMetric::new(c(lambda))?)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn metric(&self) -> &ConformalMetric {
        &self.metric
    }

    /// True when `a = b = 0`, where the pencil degenerates on `u = v = 0`.
    pub fn is_reducible_family(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }

    /// `(u, v, Λ)` at a point.
    pub fn fields_at(&self, x: f64, y: f64) -> Result<[f64; 3]> {
        let (u, v, l) = self.fields_generic(x, y)?;
        Ok([u, v, l])
    }

    fn fields_generic<T: Scalar>(&self, x: T, y: T) -> Result<(T, T, T)> {
        let l = self.metric.positive(x, y)?;
        Ok((self.u.eval_generic(&[x, y])?, self.v.eval_generic(&[x, y])?, l))
    }

    fn coefficients_generic<T: Scalar>(&self, x: T, y: T) -> Result<([T; 4], T)> {
        let (u, v, l) = self.fields_generic(x, y)?;
        let (a, b) = (T::from_f64(self.a), T::from_f64(self.b));
        let three = T::from_f64(3.0);
        Ok(([a + u / l, three * b + v / l, u / l - three * a, v / l - b], l))
    }

    /// `[a0, a1, a2, a3]` at a point.
    pub fn coefficients(&self, x: f64, y: f64) -> Result<[f64; 4]> {
        Ok(self.coefficients_generic(x, y)?.0)
    }

    pub fn f_eval(&self, x: f64, y: f64, p1: f64, p2: f64) -> Result<f64> {
        let (c, _) = self.coefficients_generic(x, y)?;
        Ok(cubic(&c, p1, p2))
    }

    /// `F` on the fibre `p = √Λ (cos φ, sin φ)` with all of `x, y, φ` generic.
    fn fibre_generic<T: Scalar>(&self, x: T, y: T, phi: T) -> Result<T> {
        let (c, l) = self.coefficients_generic(x, y)?;
        let r = l.sqrt();
        Ok(cubic(&c, r * phi.cos(), r * phi.sin()))
    }

    /// `(F, F_φ, F_φφ)` on the fibre over `(x, y)`.
    pub fn fibre(&self, x: f64, y: f64, phi: f64) -> Result<(f64, f64, f64)> {
        let (c, l) = self.coefficients_generic(x, y)?;
        let cd = c.map(|v| Dual::constant(Dual::constant(v)));
        let r = Dual::constant(Dual::constant(l.sqrt()));
        let p = Dual::new(Dual::variable(phi), Dual::constant(1.0));
        let f = cubic(&cd, r * p.cos(), r * p.sin());
        Ok((f.re.re, f.re.eps, f.eps.eps))
    }
}

fn cubic<T: Scalar>(c: &[T; 4], p1: T, p2: T) -> T {
    c[0] * p1 * p1 * p1 + c[1] * p1 * p1 * p2 + c[2] * p1 * p2 * p2 + c[3] * p2 * p2 * p2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// Unreduced states; positions reduced to the unit square by [`Trajectory::reduced`].
    pub states: Vec<PhaseState>,
    pub energy: Vec<f64>,
    pub integral: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn reduced(&self, m: usize) -> PhaseState {
        let s = self.states[m];
        PhaseState {
            x: s.x.rem_euclid(1.0),
            y: s.y.rem_euclid(1.0),
            ..s
        }
    }

    pub fn energy_drift(&self) -> f64 {
        drift(&self.energy)
    }

    pub fn integral_drift(&self) -> Option<f64> {
        self.integral.as_deref().map(drift)
    }

    pub fn p2_drift(&self) -> f64 {
        let p: Vec<f64> = self.states.iter().map(|s| s.p2).collect();
        drift(&p)
    }

    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["t", "x", "y", "p1", "p2", "H", "F"]).map_err(io)?;
        for m in 0..self.t.len() {
            let s = self.reduced(m);
            let f = self.integral.as_ref().map_or(f64::NAN, |v| v[m]);
            let row = [self.t[m], s.x, s.y, s.p1, s.p2, self.energy[m], f];
            w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Largest deviation from the initial value.
fn drift(v: &[f64]) -> f64 {
    v.first().map_or(0.0, |v0| v.iter().fold(0.0, |m, x| m.max((x - v0).abs())))
}

/// `H = (p1² + p2²) / (2Λ)`.
pub fn hamiltonian(metric: &ConformalMetric, s: &PhaseState) -> Result<f64> {
    let (l, _, _) = metric.gradient(s.x, s.y)?;
    Ok((s.p1 * s.p1 + s.p2 * s.p2) / (2.0 * l))
}

fn vector_field(metric: &ConformalMetric, s: &PhaseState) -> Result<[f64; 4]> {
    let (l, lx, ly) = metric.gradient(s.x, s.y)?;
    let p2sum = s.p1 * s.p1 + s.p2 * s.p2;
    let k = p2sum / (2.0 * l * l);
    Ok([s.p1 / l, s.p2 / l, k * lx, k * ly])
}

/// Fixed-step RK4 on Hamilton's equations for `H`, recording `H` and, if
/// given, the cubic integral at every step.
pub fn integrate_geodesic(
    metric: &ConformalMetric,
    start: PhaseState,
    t_final: f64,
    dt: f64,
    integral: Option<&CubicIntegralState>,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::Invalid(format!("invalid time step {dt} or horizon {t_final}")));
    }
    let steps = (t_final / dt).round() as usize;
    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        energy: Vec::with_capacity(steps + 1),
        integral: integral.map(|_| Vec::with_capacity(steps + 1)),
    };
    let record = |traj: &mut Trajectory, t: f64, s: PhaseState| -> Result<()> {
        traj.t.push(t);
        traj.energy.push(hamiltonian(metric, &s)?);
        if let (Some(st), Some(v)) = (integral, traj.integral.as_mut()) {
            v.push(st.f_eval(s.x, s.y, s.p1, s.p2)?);
        }
        traj.states.push(s);
        Ok(())
    };
    let mut s = start;
    record(&mut traj, 0.0, s)?;
    let shift = |s: &PhaseState, k: &[f64; 4], h: f64| PhaseState {
        x: s.x + h * k[0],
        y: s.y + h * k[1],
        p1: s.p1 + h * k[2],
        p2: s.p2 + h * k[3],
    };
    for m in 1..=steps {
        let k1 = vector_field(metric, &s)?;
        let k2 = vector_field(metric, &shift(&s, &k1, 0.5 * dt))?;
        let k3 = vector_field(metric, &shift(&s, &k2, 0.5 * dt))?;
        let k4 = vector_field(metric, &shift(&s, &k3, dt))?;
        let mut k = [0.0; 4];
        for c in 0..4 {
            k[c] = (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]) / 6.0;
        }
        s = shift(&s, &k, dt);
        record(&mut traj, m as f64 * dt, s)?;
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub phi: f64,
    pub value: f64,
    pub second_derivative: f64,
    pub degenerate: bool,
}

/// Zeros of `F_φ` on `[0, 2π)`, by a dense scan and safeguarded Newton.
pub fn fibre_critical_points(state: &CubicIntegralState, x: f64, y: f64) -> Result<Vec<CriticalPoint>> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let h = two_pi / FIBRE_SCAN as f64;
    let grid: Vec<(f64, f64, f64, f64)> = (0..=FIBRE_SCAN)
        .map(|k| {
            let phi = k as f64 * h;
            state.fibre(x, y, phi).map(|(f, d, dd)| (phi, f, d, dd))
        })
        .collect::<Result<_>>()?;
    let scale = grid.iter().fold(0.0f64, |m, g| m.max(g.1.abs()).max(g.3.abs()));
    if scale == 0.0 {
        return Err(Error::Degenerate("F vanishes identically on the fibre".into()));
    }
    let mut out = Vec::new();
    for w in grid.windows(2).take(FIBRE_SCAN) {
        let (a, fa) = (w[0].0, w[0].2);
        let (b, fb) = (w[1].0, w[1].2);
        let root = if fa == 0.0 {
            a
        } else if fb != 0.0 && (fa < 0.0) != (fb < 0.0) {
            refine(state, x, y, a, b, fa)?
        } else {
            continue;
        };
        let (value, _, second) = state.fibre(x, y, root)?;
        out.push(CriticalPoint {
            phi: root,
            value,
            second_derivative: second,
            degenerate: second.abs() <= 1e-8 * scale,
        });
    }
    Ok(out)
}

fn refine(state: &CubicIntegralState, x: f64, y: f64, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    let mut t = 0.5 * (a + b);
    for _ in 0..100 {
        let (_, d, dd) = state.fibre(x, y, t)?;
        if d == 0.0 {
            return Ok(t);
        }
        if (d < 0.0) == (fa < 0.0) {
            a = t;
            fa = d;
        } else {
            b = t;
        }
        let newton = t - d / dd;
        let next = if newton.is_finite() && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (next - t).abs() <= ROOT_TOL || b - a <= ROOT_TOL {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::NoConvergence(format!("fibre critical point near φ = {t}")))
}

/// Critical angles reduced mod π, sorted.
pub fn critical_angles_mod_pi(points: &[CriticalPoint]) -> Vec<f64> {
    let mut v: Vec<f64> = points.iter().map(|c| normalize_angle(c.phi)).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProportionalityFit {
    pub c: f64,
    pub max_residual: f64,
    pub max_abs_f_phi: f64,
    pub fit_angle: f64,
}

/// Fits `P(cos φ, sin φ) = c F_φ(φ)` at the grid angle of largest `|F_φ|`
/// and reports the worst mismatch over a 360-point grid.
pub fn verify_p_vs_fphi(state: &CubicIntegralState, x: f64, y: f64) -> Result<ProportionalityFit> {
    let [u, v, l] = state.fields_at(x, y)?;
    let pencil = build_system22(state.a, state.b).pencil_at(&[u, v, l])?;
    let grid: Vec<(f64, f64, f64)> = (0..360)
        .map(|k| {
            let phi = k as f64 * std::f64::consts::PI / 180.0;
            Ok((phi, pencil.eval_angle(phi), state.fibre(x, y, phi)?.1))
        })
        .collect::<Result<_>>()?;
    let &(fit_angle, p_fit, f_fit) = grid
        .iter()
        .max_by(|a, b| a.2.abs().total_cmp(&b.2.abs()))
        .expect("non-empty grid");
    if f_fit == 0.0 {
        return Err(Error::Degenerate("F_φ vanishes on the whole fibre".into()));
    }
    let c = p_fit / f_fit;
    let max_residual = grid.iter().fold(0.0f64, |m, g| m.max((g.1 - c * g.2).abs()));
    Ok(ProportionalityFit {
        c,
        max_residual,
        max_abs_f_phi: f_fit.abs(),
        fit_angle,
    })
}

/// `F_x cos φ + F_y sin φ + F_φ (Λ_y cos φ − Λ_x sin φ)/(2Λ)` with `F` taken
/// on the fibre; zero for all `φ` iff `F` is an integral at that jet.
pub fn transport_residual(state: &CubicIntegralState, x: f64, y: f64, phi: f64) -> Result<f64> {
    let partial = |dir: usize| -> Result<f64> {
        let seed = |k: usize, v: f64| if k == dir { Dual::variable(v) } else { Dual::constant(v) };
        Ok(state.fibre_generic(seed(0, x), seed(1, y), seed(2, phi))?.eps)
    };
    let (fx, fy, fphi) = (partial(0)?, partial(1)?, partial(2)?);
    let (l, lx, ly) = state.metric.gradient(x, y)?;
    let (c, s) = (phi.cos(), phi.sin());
    Ok(fx * c + fy * s + fphi * (ly * c - lx * s) / (2.0 * l))
}

/// `A(U) U_x + B(U) U_y` for `U = (u, v, Λ)`.
pub fn system22_residual(state: &CubicIntegralState, x: f64, y: f64) -> Result<[f64; 3]> {
    let sys = build_system22(state.a, state.b);
    let grads = [&state.u, &state.v, state.metric.lambda()]
        .iter()
        .map(|e| e.gradient(&[x, y]))
        .collect::<Result<Vec<_>>>()?;
    state.metric.positive(x, y)?;
    let uvec: Vec<f64> = grads.iter().map(|g| g.0).collect();
    let (a, b) = sys.matrices_at(&uvec)?;
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..3).map(|k| a[(i, k)] * grads[k].1[0] + b[(i, k)] * grads[k].1[1]).sum();
    }
    Ok(out)
}

/// Riemann invariants at a constant state: the critical values of `F` at the
/// critical angles in `[0, π)`, ordered by angle.
pub fn riemann_invariants(a: f64, b: f64, u: f64, v: f64, lambda: f64) -> Result<Vec<f64>> {
    let st = CubicIntegralState::constant(a, b, u, v, lambda)?;
    let mut pts: Vec<CriticalPoint> = fibre_critical_points(&st, 0.0, 0.0)?
        .into_iter()
        .filter(|c| c.phi < std::f64::consts::PI)
        .collect();
    pts.sort_by(|p, q| p.phi.total_cmp(&q.phi));
    Ok(pts.into_iter().map(|c| c.value).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantJacobian {
    pub jacobian: [[f64; 3]; 3],
    pub det: f64,
    pub regular: bool,
}

/// Central-difference Jacobian of `(u, v, Λ) ↦ (r1, r2, r3)`; flagged
/// irregular when `|det| < 1e-6`.
pub fn invariant_jacobian(a: f64, b: f64, state: [f64; 3], h: f64) -> Result<InvariantJacobian> {
    let eval = |s: [f64; 3]| -> Result<Vec<f64>> {
        let r = riemann_invariants(a, b, s[0], s[1], s[2])?;
        if r.len() != 3 {
            return Err(Error::NotStrict(format!("{} critical angles in [0, π)", r.len())));
        }
        Ok(r)
    };
    eval(state)?;
    let mut jac = [[0.0; 3]; 3];
    for k in 0..3 {
        let (mut sp, mut sm) = (state, state);
        sp[k] += h;
        sm[k] -= h;
        let (rp, rm) = (eval(sp)?, eval(sm)?);
        for i in 0..3 {
            jac[i][k] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    let m = nalgebra::Matrix3::from_fn(|i, k| jac[i][k]);
    let det = m.determinant();
    Ok(InvariantJacobian {
        jacobian: jac,
        det,
        regular: det.abs() >= 1e-6,
    })
}

/// Transport residuals on an `(x, φ)` grid at fixed `y`, evaluated in parallel.
pub fn transport_scan(state: &CubicIntegralState, y: f64, nx: usize, nphi: usize) -> Result<f64> {
    let vals: Vec<Result<f64>> = (0..nx * nphi)
        .into_par_iter()
        .map(|k| {
            let x = (k / nphi) as f64 / nx as f64;
            let phi = (k % nphi) as f64 * 2.0 * std::f64::consts::PI / nphi as f64;
            transport_residual(state, x, y, phi)
        })
        .collect();
    vals.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn system22_pencil_examples() {
        let p = build_system22(0.0, 1.0).pencil_at(&[0.0, 0.0, 1.0]).unwrap();
        for (c, want) in p.coeffs.iter().zip([3.0, 0.0, -9.0, 0.0]) {
            assert!((c - want).abs() < 1e-12);
        }
        let zero = build_system22(0.0, 0.0);
        for l in [0.5, 1.0, 3.0] {
            assert!(!zero.pencil_at(&[0.0, 0.0, l]).unwrap().is_nonzero(1e-9));
        }
    }

    #[test]
    fn det_a_expansion() {
        let sys = build_system22(0.7, -0.4);
        for &(u, v, l) in &[(0.3, 1.2, 0.8), (-1.0, 0.5, 2.0)] {
            let (a, _) = sys.matrices_at(&[u, v, l]).unwrap();
            assert!((a.determinant() - (u - 3.0 * 0.7 * l)).abs() < 1e-12);
        }
        let (a, _) = sys.matrices_at(&[2.1, 0.3, 1.0]).unwrap();
        assert!(a.determinant().abs() < 1e-12);
        assert!(sys.pencil_at(&[2.1, 0.3, 1.0]).unwrap().is_nonzero(1e-9));
    }

    #[test]
    fn f_on_unit_fibre_is_sin_3phi() {
        let st = CubicIntegralState::constant(0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        for k in 0..360 {
            let phi = k as f64 * PI / 180.0;
            let f = st.f_eval(0.0, 0.0, phi.cos(), phi.sin()).unwrap();
            assert!((f - (3.0 * phi).sin()).abs() < 1e-12);
        }
        assert_eq!(st.f_eval(0.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        let g = CubicIntegralState::parse(0.3, -0.2, "sin(2*pi*x)", "0.5", "2 + cos(2*pi*y)", &[]).unwrap();
        let f = g.f_eval(0.1, 0.7, 0.4, -1.3).unwrap();
        assert!((f + g.f_eval(0.1, 0.7, -0.4, 1.3).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn critical_points_of_sin_3phi() {
        let st = CubicIntegralState::constant(0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let cps = fibre_critical_points(&st, 0.0, 0.0).unwrap();
        assert_eq!(cps.len(), 6);
        for (k, c) in cps.iter().enumerate() {
            assert!((c.phi - (PI / 6.0 + k as f64 * PI / 3.0)).abs() < 1e-10);
            let want = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((c.value - want).abs() < 1e-12);
            assert!(!c.degenerate);
        }
        let m = critical_angles_mod_pi(&cps);
        let fan = build_system22(0.0, 1.0).pencil_at(&[0.0, 0.0, 1.0]).unwrap().characteristic_fan(1e-9).unwrap();
        assert_eq!(m.len(), 3);
        for (a, b) in m.iter().zip(&fan.angles) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn scaled_metric_critical_values() {
        // F = Λ^{3/2} sin 3φ at u = v = 0
        let st = CubicIntegralState::constant(0.0, 1.0, 0.0, 0.0, 4.0).unwrap();
        let cps = fibre_critical_points(&st, 0.0, 0.0).unwrap();
        let vals: Vec<f64> = cps.iter().map(|c| c.value).collect();
        for (k, v) in vals.iter().enumerate() {
            assert!((v - if k % 2 == 0 { 8.0 } else { -8.0 }).abs() < 1e-11, "{vals:?}");
        }
    }

    #[test]
    fn pencil_proportional_to_f_phi() {
        let st = CubicIntegralState::constant(0.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let fit = verify_p_vs_fphi(&st, 0.0, 0.0).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-12 && fit.max_residual <= 1e-10);
        let red = CubicIntegralState::constant(0.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        let fit = verify_p_vs_fphi(&red, 0.0, 0.0).unwrap();
        assert!(fit.max_residual <= 1e-10 * fit.max_abs_f_phi);
        // c = Λ^{-1/2}
        let st = CubicIntegralState::constant(0.4, -0.3, 0.2, 0.9, 2.5).unwrap();
        let fit = verify_p_vs_fphi(&st, 0.0, 0.0).unwrap();
        assert!((fit.c - 2.5f64.powf(-0.5)).abs() < 1e-12);
    }

    fn liouville(v: &str) -> CubicIntegralState {
        CubicIntegralState::parse(0.0, 0.0, "0", v, "2 + sin(2*pi*x)", &[]).unwrap()
    }

    #[test]
    fn transport_and_system_residuals() {
        let flat = CubicIntegralState::constant(0.3, 0.4, 0.1, -0.2, 1.0).unwrap();
        assert_eq!(transport_residual(&flat, 0.2, 0.3, 1.0).unwrap(), 0.0);
        assert_eq!(system22_residual(&flat, 0.2, 0.3).unwrap(), [0.0; 3]);

        let exact = liouville("1");
        assert!(transport_scan(&exact, 0.3, 20, 36).unwrap() <= 1e-10);
        assert!(system22_residual(&exact, 0.37, 0.2).unwrap().iter().all(|r| r.abs() <= 1e-12));

        let bad = liouville("1 + 0.1*y");
        assert!(transport_residual(&bad, 0.37, 0.2, 0.9).unwrap().abs() > 1e-3);
        assert!(system22_residual(&bad, 0.37, 0.2).unwrap().iter().any(|r| r.abs() > 1e-3));
    }

    #[test]
    fn flat_flow_conserves_exactly() {
        let st = CubicIntegralState::constant(0.3, 0.5, 0.2, -0.1, 1.0).unwrap();
        let start = PhaseState { x: 0.1, y: 0.2, p1: 0.6, p2: 0.8 };
        let tr = integrate_geodesic(st.metric(), start, 5.0, 0.01, Some(&st)).unwrap();
        assert!(tr.integral_drift().unwrap() <= 1e-12);
        assert_eq!(tr.states.last().unwrap().p1, 0.6);
        let r = tr.reduced(tr.t.len() - 1);
        assert!((0.0..1.0).contains(&r.x) && (0.0..1.0).contains(&r.y));
    }

    #[test]
    fn periodicity_and_domain_checks() {
        let st = liouville("1");
        assert!(periodicity_defect(st.metric().lambda(), 32).unwrap() <= PERIODICITY_TOL);
        let np = xy_expr("x", &[]).unwrap();
        assert!(periodicity_defect(&np, 32).unwrap() > 0.5);
        let neg = ConformalMetric::parse("x - 0.5", &[]).unwrap();
        assert!(matches!(neg.gradient(0.2, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn riemann_invariants_are_regular_coordinates() {
        let j = invariant_jacobian(0.0, 1.0, [0.1, -0.2, 1.3], 1e-5).unwrap();
        assert!(j.regular, "{j:?}");
    }
}
