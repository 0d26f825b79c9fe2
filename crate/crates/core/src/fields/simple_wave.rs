use rayon::prelude::*;

use super::{FieldKind, FieldSample, Rect, SolutionField};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::richness::DiagonalSystem;

/// Subintervals of the initial segment scanned for sign changes per query.
pub const SCAN_SUBINTERVALS: usize = 400;
const CHECK_NODES: usize = 81;
const ROOT_TOL: f64 = 1e-12;
const MAX_ITER: usize = 100;

/// Simple wave: every invariant except `r_active` is constant, and
/// `r_active` is carried unchanged along straight characteristics issued from
/// the segment `origin + ξ·direction`, `ξ ∈ xi_range`, where it equals
/// `profile(ξ)`.
#[derive(Debug, Clone)]
pub struct SimpleWaveSpec {
    pub system: DiagonalSystem,
    pub active: usize,
    /// Values of all invariants; the active entry is ignored.
    pub state: Vec<f64>,
    pub origin: [f64; 2],
    pub direction: [f64; 2],
    /// Expression in the single variable `xi`.
    pub profile: Expression,
    pub xi_range: (f64, f64),
}

impl SimpleWaveSpec {
    pub fn parse_profile(text: &str) -> Result<Expression> {
        Expression::parse(text, &["xi"])
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    xi: f64,
    q: [f64; 2],
    cos: f64,
    sin: f64,
}

#[derive(Debug, Clone, Copy)]
struct Local {
    f: f64,
    f_xi: f64,
    psi: f64,
    p: f64,
    dp: f64,
}

#[derive(Debug, Clone)]
pub struct SimpleWaveField {
    spec: SimpleWaveSpec,
    dir: [f64; 2],
    nodes: Vec<Node>,
    domain: Rect,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

impl SimpleWaveField {
    /// Builds the field and checks on a node grid over `domain` that no
    /// point is reached by more than one characteristic. Points reached by
    /// none are allowed; querying them is an error.
    pub fn new(spec: SimpleWaveSpec, domain: Rect) -> Result<Self> {
        let n = spec.system.dim();
        if spec.active >= n {
            return Err(Error::Invalid(format!("active index {} out of range", spec.active)));
        }
        if spec.state.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: spec.state.len(),
            });
        }
        if spec.profile.variables() != ["xi"] {
            return Err(Error::Invalid("profile must be an expression in xi".into()));
        }
        let (lo, hi) = spec.xi_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Invalid(format!("invalid profile range [{lo}, {hi}]")));
        }
        let norm = spec.direction[0].hypot(spec.direction[1]);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Invalid("initial direction must be non-zero".into()));
        }
        let dir = [spec.direction[0] / norm, spec.direction[1] / norm];
        let mut field = SimpleWaveField {
            spec,
            dir,
            nodes: Vec::new(),
            domain,
        };
        field.nodes = (0..=SCAN_SUBINTERVALS)
            .map(|k| {
                let xi = lo + (hi - lo) * k as f64 / SCAN_SUBINTERVALS as f64;
                let (psi, _, _) = field.angle(xi)?;
                Ok(Node {
                    xi,
                    q: field.initial_point(xi),
                    cos: psi.cos(),
                    sin: psi.sin(),
                })
            })
            .collect::<Result<_>>()?;
        field.check_single_valued()?;
        Ok(field)
    }

    pub fn spec(&self) -> &SimpleWaveSpec {
        &self.spec
    }

    pub fn active(&self) -> usize {
        self.spec.active
    }

    pub fn initial_point(&self, xi: f64) -> [f64; 2] {
        [self.spec.origin[0] + xi * self.dir[0], self.spec.origin[1] + xi * self.dir[1]]
    }

    fn invariants(&self, p: f64) -> Vec<f64> {
        let mut r = self.spec.state.clone();
        r[self.spec.active] = p;
        r
    }

    /// `(ψ, ψ', profile')` at `ξ`, where `ψ` is the active angle.
    fn angle(&self, xi: f64) -> Result<(f64, f64, f64)> {
        let (p, dp) = self.spec.profile.gradient(&[xi])?;
        let j = self.spec.active;
        let (psi, grad) = self.spec.system.phi()[j].gradient(&self.invariants(p))?;
        Ok((psi, grad[j] * dp[0], dp[0]))
    }

    fn local(&self, xi: f64, x: f64, y: f64) -> Result<Local> {
        let (p, dp) = self.spec.profile.gradient(&[xi])?;
        let j = self.spec.active;
        let (psi, grad) = self.spec.system.phi()[j].gradient(&self.invariants(p))?;
        let dpsi = grad[j] * dp[0];
        let q = self.initial_point(xi);
        let e = [psi.cos(), psi.sin()];
        let rel = [x - q[0], y - q[1]];
        let s = e[0] * rel[0] + e[1] * rel[1];
        Ok(Local {
            f: cross(e, rel),
            f_xi: -(dpsi * s + cross(e, self.dir)),
            psi,
            p,
            dp: dp[0],
        })
    }

    /// Brackets `[ξ_a, ξ_b]` of sign changes of the incidence function.
    fn brackets(&self, x: f64, y: f64) -> Vec<(f64, f64)> {
        let vals: Vec<f64> = self
            .nodes
            .iter()
            .map(|nd| nd.cos * (y - nd.q[1]) - nd.sin * (x - nd.q[0]))
            .collect();
        let mut out = Vec::new();
        let mut k = 0;
        while k < vals.len() {
            if vals[k] == 0.0 {
                out.push((self.nodes[k].xi, self.nodes[k].xi));
                k += 1;
                continue;
            }
            if k + 1 < vals.len() && vals[k + 1] != 0.0 && (vals[k] < 0.0) != (vals[k + 1] < 0.0) {
                out.push((self.nodes[k].xi, self.nodes[k + 1].xi));
            }
            k += 1;
        }
        out
    }

    /// The parameter `ξ` of the characteristic through `(x, y)`.
    pub fn solve_xi(&self, x: f64, y: f64) -> Result<f64> {
        let br = self.brackets(x, y);
        match br.len() {
            0 => Err(Error::NoCharacteristic { x, y }),
            1 => self.refine(br[0], x, y),
            roots => Err(Error::GradientCatastrophe { x, y, roots }),
        }
    }

    fn refine(&self, (mut a, mut b): (f64, f64), x: f64, y: f64) -> Result<f64> {
        if a == b {
            return Ok(a);
        }
        let mut fa = self.local(a, x, y)?.f;
        let mut xi = 0.5 * (a + b);
        for _ in 0..MAX_ITER {
            let l = self.local(xi, x, y)?;
            if l.f == 0.0 {
                return Ok(xi);
            }
            if (l.f < 0.0) == (fa < 0.0) {
                a = xi;
                fa = l.f;
            } else {
                b = xi;
            }
            let newton = xi - l.f / l.f_xi;
            let next = if newton.is_finite() && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
            if (next - xi).abs() <= ROOT_TOL * (1.0 + xi.abs()) || (b - a) <= ROOT_TOL {
                return Ok(next);
            }
            xi = next;
        }
        Err(Error::NoConvergence(format!("characteristic foot through ({x}, {y})")))
    }

    fn check_single_valued(&self) -> Result<()> {
        let d = &self.domain;
        let pts: Vec<(f64, f64)> = (0..CHECK_NODES)
            .flat_map(|a| {
                (0..CHECK_NODES).map(move |b| {
                    let t = |k: usize| k as f64 / (CHECK_NODES - 1) as f64;
                    (d.x0 + (d.x1 - d.x0) * t(a), d.y0 + (d.y1 - d.y0) * t(b))
                })
            })
            .collect();
        let bad: Vec<(f64, f64, usize)> = pts
            .par_iter()
            .filter_map(|&(x, y)| {
                let n = self.brackets(x, y).len();
                (n > 1).then_some((x, y, n))
            })
            .collect();
        let dist = |&(x, y, _): &(f64, f64, usize)| {
            cross(self.dir, [x - self.spec.origin[0], y - self.spec.origin[1]]).abs()
        };
        match bad.iter().min_by(|a, b| dist(a).total_cmp(&dist(b))) {
            Some(&(x, y, roots)) => Err(Error::GradientCatastrophe { x, y, roots }),
            None => Ok(()),
        }
    }

    /// Distance along the characteristic from `initial_point(ξ)` to the
    /// point where neighbouring characteristics meet, if that point lies
    /// ahead in the direction `(cos φ, sin φ)`.
    pub fn crossing_length(&self, xi: f64) -> Result<Option<f64>> {
        let (psi, dpsi, _) = self.angle(xi)?;
        let c = cross([psi.cos(), psi.sin()], self.dir);
        let s = -c / dpsi;
        Ok((s.is_finite() && s > 0.0).then_some(s))
    }

    /// Transversal derivative of the active invariant at `initial_point(ξ)`.
    pub fn initial_w(&self, xi: f64) -> Result<f64> {
        let (psi, _, dp) = self.angle(xi)?;
        Ok(dp / cross([psi.cos(), psi.sin()], self.dir))
    }
}

impl SolutionField for SimpleWaveField {
    fn kind(&self) -> FieldKind {
        FieldKind::SimpleWave
    }

    fn dim(&self) -> usize {
        self.spec.state.len()
    }

    fn domain(&self) -> &Rect {
        &self.domain
    }

    fn sample(&self, x: f64, y: f64) -> Result<FieldSample> {
        self.domain.check(x, y)?;
        let xi = self.solve_xi(x, y)?;
        let l = self.local(xi, x, y)?;
        let j = self.spec.active;
        let n = self.dim();
        let mut s = FieldSample {
            r: self.invariants(l.p),
            rx: vec![0.0; n],
            ry: vec![0.0; n],
        };
        s.rx[j] = l.dp * l.psi.sin() / l.f_xi;
        s.ry[j] = -l.dp * l.psi.cos() / l.f_xi;
        Ok(s)
    }

    fn as_simple_wave(&self) -> Option<&SimpleWaveField> {
        Some(self)
    }
}
