//! Solution fields `r(x, y)` of a diagonal system and the pointwise
//! quantities measured on them.

mod analytic;
mod grid;
mod registry;
mod simple_wave;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pencil::{projective_distance, ANGLE_GAP_TOL};
use crate::richness::DiagonalSystem;

pub use analytic::AnalyticField;
pub use grid::GridField;
pub use registry::{FieldBuilder, FieldContext, FieldRegistry};
pub use simple_wave::{SimpleWaveField, SimpleWaveSpec, SCAN_SUBINTERVALS};

/// Closed rectangle `[x0, x1] × [y0, y1]` in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let ok = [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x0 < x1 && y0 < y1;
        if !ok {
            return Err(Error::Invalid(format!("invalid rectangle [{x0}, {x1}] x [{y0}, {y1}]")));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x <= self.x1 && self.y0 <= y && y <= self.y1
    }

    pub fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    pub(crate) fn check(&self, x: f64, y: f64) -> Result<()> {
        if self.contains(x, y) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { x, y })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Analytic,
    Grid,
    SimpleWave,
}

/// Values and first partials of all components at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub r: Vec<f64>,
    pub rx: Vec<f64>,
    pub ry: Vec<f64>,
}

pub trait SolutionField: Send + Sync + std::fmt::Debug {
    fn kind(&self) -> FieldKind;
    fn dim(&self) -> usize;
    fn domain(&self) -> &Rect;
    fn sample(&self, x: f64, y: f64) -> Result<FieldSample>;

    fn values(&self, x: f64, y: f64) -> Result<Vec<f64>> {
        Ok(self.sample(x, y)?.r)
    }

    fn as_simple_wave(&self) -> Option<&SimpleWaveField> {
        None
    }
}

fn prepare(field: &dyn SolutionField, sys: &DiagonalSystem, i: usize, x: f64, y: f64) -> Result<(FieldSample, Vec<f64>)> {
    if field.dim() != sys.dim() {
        return Err(Error::Dimension {
            expected: sys.dim(),
            got: field.dim(),
        });
    }
    if i >= sys.dim() {
        return Err(Error::Invalid(format!("index {i} out of range")));
    }
    let s = field.sample(x, y)?;
    let angles = sys.angles_at(&s.r)?;
    Ok((s, angles))
}

/// `|cos φ_i ∂x r_i + sin φ_i ∂y r_i|` with `φ_i` evaluated on the field.
pub fn residual_diagonal(field: &dyn SolutionField, sys: &DiagonalSystem, i: usize, x: f64, y: f64) -> Result<f64> {
    let (s, phi) = prepare(field, sys, i, x, y)?;
    Ok((phi[i].cos() * s.rx[i] + phi[i].sin() * s.ry[i]).abs())
}

/// Derivative of `r_i` across its own characteristic:
/// `−sin φ_i ∂x r_i + cos φ_i ∂y r_i`.
pub fn w_transversal(field: &dyn SolutionField, sys: &DiagonalSystem, i: usize, x: f64, y: f64) -> Result<f64> {
    let (s, phi) = prepare(field, sys, i, x, y)?;
    Ok(-phi[i].sin() * s.rx[i] + phi[i].cos() * s.ry[i])
}

/// `|L_{v_j⊥} r_i + L_{v_j} r_i / tan(φ_i − φ_j)|`, which vanishes on
/// solutions of the diagonal system.
pub fn cross_derivative_residual(
    field: &dyn SolutionField,
    sys: &DiagonalSystem,
    i: usize,
    j: usize,
    x: f64,
    y: f64,
) -> Result<f64> {
    if i == j || j >= sys.dim() {
        return Err(Error::Invalid(format!("need distinct indices, got ({i}, {j})")));
    }
    let (s, phi) = prepare(field, sys, i, x, y)?;
    let gap = projective_distance(phi[i], phi[j]);
    if gap <= ANGLE_GAP_TOL {
        return Err(Error::CoincidentAngles { i, j, gap });
    }
    let (c, sn) = (phi[j].cos(), phi[j].sin());
    let along = c * s.rx[i] + sn * s.ry[i];
    let across = -sn * s.rx[i] + c * s.ry[i];
    let d = phi[i] - phi[j];
    Ok((across + along * d.cos() / d.sin()).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps3() -> DiagonalSystem {
        DiagonalSystem::from_lambda(
            &["r1", "r2", "r3"],
            &["2*r1 + r2 + r3", "r1 + 2*r2 + r3", "r1 + r2 + 2*r3"],
            &[],
        )
        .unwrap()
    }

    fn unit() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn constant_field_quantities_vanish() {
        let f = AnalyticField::parse(&["1", "2", "3"], unit()).unwrap();
        let sys = eps3();
        for i in 0..3 {
            assert_eq!(residual_diagonal(&f, &sys, i, 0.3, 0.4).unwrap(), 0.0);
            assert_eq!(w_transversal(&f, &sys, i, 0.3, 0.4).unwrap(), 0.0);
        }
        assert_eq!(cross_derivative_residual(&f, &sys, 0, 1, 0.3, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn single_component_examples() {
        let sys = DiagonalSystem::from_phi(&["r1", "r2"], &["0*r1", "1 + 0*r2"], &[]).unwrap();
        let f = AnalyticField::parse(&["x", "0"], unit()).unwrap();
        assert_eq!(residual_diagonal(&f, &sys, 0, 0.5, 0.5).unwrap(), 1.0);
        let g = AnalyticField::parse(&["y", "0"], unit()).unwrap();
        assert_eq!(w_transversal(&g, &sys, 0, 0.5, 0.5).unwrap(), 1.0);
        assert_eq!(residual_diagonal(&g, &sys, 0, 0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn errors_are_reported() {
        let sys = eps3();
        let f = AnalyticField::parse(&["x", "y"], unit()).unwrap();
        assert!(matches!(residual_diagonal(&f, &sys, 0, 0.5, 0.5), Err(Error::Dimension { .. })));
        let g = AnalyticField::parse(&["x", "y", "1"], unit()).unwrap();
        assert!(matches!(w_transversal(&g, &sys, 0, 2.0, 0.5), Err(Error::OutsideDomain { .. })));
        assert!(cross_derivative_residual(&g, &sys, 1, 1, 0.5, 0.5).is_err());
    }

    #[test]
    fn non_solution_violates_cross_identity() {
        let f = AnalyticField::parse(&["x", "1 + 0.3*y", "2 + 0.2*x*y"], unit()).unwrap();
        let v = cross_derivative_residual(&f, &eps3(), 0, 1, 0.4, 0.6).unwrap();
        assert!(v > 1e-2, "{v}");
    }
}
