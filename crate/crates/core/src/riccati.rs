//! Characteristic tracing and the Riccati law for the transversal derivative
//! `w_i` of a Riemann invariant.
//!
//! Along the `i`-th characteristic, `W = e^{−G_i} w_i` obeys
//! `W' + k W² = 0` with `k = e^{G_i} ∂_{r_i} φ_i`, so
//! `W(s) = W0 / (1 + W0 K(s))` with `K(s) = ∫₀ˢ k`. A zero of the
//! denominator inside the traced range is a gradient catastrophe.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{w_transversal, SolutionField};
use crate::richness::{reconstruct_g, DiagonalSystem};

/// Default RK4 step as a fraction of the domain diameter.
pub const DEFAULT_STEP_FRACTION: f64 = 1.0 / 2000.0;
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxLength,
    DomainExit,
    StrictnessLost(String),
    FieldFailure(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicCurve {
    pub index: usize,
    pub start: [f64; 2],
    pub step: f64,
    pub points: Vec<[f64; 2]>,
    pub s: Vec<f64>,
    pub stop: StopReason,
}

fn direction(field: &dyn SolutionField, sys: &DiagonalSystem, i: usize, p: [f64; 2]) -> Result<[f64; 2]> {
    let r = field.values(p[0], p[1])?;
    let phi = sys.phi()[i].eval(&r)?;
    Ok([phi.cos(), phi.sin()])
}

fn classify(e: Error) -> StopReason {
    match e {
        Error::OutsideDomain { .. } => StopReason::DomainExit,
        Error::CoincidentAngles { .. } => StopReason::StrictnessLost(e.to_string()),
        other => StopReason::FieldFailure(other.to_string()),
    }
}

/// Fixed-step classical RK4 for `(x', y') = (cos φ_i, sin φ_i)` from
/// `start`, stopping before the arclength would exceed `max_length` or when
/// the field can no longer be evaluated; the partial curve is kept.
pub fn trace_characteristic(
    field: &dyn SolutionField,
    sys: &DiagonalSystem,
    i: usize,
    start: [f64; 2],
    step: f64,
    max_length: f64,
) -> Result<CharacteristicCurve> {
    if i >= sys.dim() || field.dim() != sys.dim() {
        return Err(Error::Invalid(format!("index {i} does not fit the field / system")));
    }
    if !(step > 0.0) || !step.is_finite() || !(max_length >= 0.0) {
        return Err(Error::Invalid(format!("invalid step {step} or length {max_length}")));
    }
    sys.check_strict(&field.values(start[0], start[1])?)?;
    let mut curve = CharacteristicCurve {
        index: i,
        start,
        step,
        points: vec![start],
        s: vec![0.0],
        stop: StopReason::MaxLength,
    };
    let steps = (max_length / step * (1.0 + 1e-12)).floor() as usize;
    let h = step;
    let mut p = start;
    for m in 1..=steps {
        let advance = || -> Result<[f64; 2]> {
            let k1 = direction(field, sys, i, p)?;
            let k2 = direction(field, sys, i, [p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]])?;
            let k3 = direction(field, sys, i, [p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]])?;
            let k4 = direction(field, sys, i, [p[0] + h * k3[0], p[1] + h * k3[1]])?;
            let next = [
                p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            sys.check_strict(&field.values(next[0], next[1])?)?;
            Ok(next)
        };
        match advance() {
            Ok(next) => {
                p = next;
                curve.points.push(p);
                curve.s.push(m as f64 * h);
            }
            Err(e) => {
                curve.stop = classify(e);
                break;
            }
        }
    }
    Ok(curve)
}

/// `(G_i, k)` at a point, with `k = e^{G_i} ∂_{r_i} φ_i` and `G_i`
/// reconstructed from `g_base`.
pub fn riccati_coefficient(
    sys: &DiagonalSystem,
    field: &dyn SolutionField,
    i: usize,
    point: [f64; 2],
    g_base: &[f64],
) -> Result<(f64, f64)> {
    let r = field.values(point[0], point[1])?;
    let g = reconstruct_g(sys, i, g_base, &r)?;
    let dphi = sys.phi()[i].partial(i, &r)?;
    Ok((g, g.exp() * dphi))
}

#[derive(Debug, Clone, Serialize)]
pub struct RiccatiTrace {
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub g: Vec<f64>,
    pub k: Vec<f64>,
    pub big_k: Vec<f64>,
    pub big_w: Vec<f64>,
    pub w: Vec<f64>,
    pub w0: f64,
    pub s_star: Option<f64>,
}

impl RiccatiTrace {
    /// Largest `|W (1 + W0 K) − W0|` over samples before any blow-up.
    pub fn identity_defect(&self) -> f64 {
        self.s
            .iter()
            .enumerate()
            .take_while(|(_, s)| self.s_star.is_none_or(|st| **s < st))
            .map(|(m, _)| (self.big_w[m] * (1.0 + self.w0 * self.big_k[m]) - self.w0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["s", "x", "y", "G", "k", "K", "W", "w"]).map_err(io)?;
        for m in 0..self.s.len() {
            let row = [
                self.s[m], self.x[m], self.y[m], self.g[m], self.k[m], self.big_k[m], self.big_w[m], self.w[m],
            ];
            w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cumulative composite Simpson on uniform samples; odd nodes use the
/// third-order partial-panel rule.
fn cumulative_simpson(h: f64, f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    for m in 1..n {
        out[m] = if m % 2 == 0 {
            out[m - 2] + h / 3.0 * (f[m - 2] + 4.0 * f[m - 1] + f[m])
        } else if m + 1 < n {
            out[m - 1] + h / 12.0 * (5.0 * f[m - 1] + 8.0 * f[m] - f[m + 1])
        } else {
            out[m - 1] + h / 12.0 * (-f[m - 2] + 8.0 * f[m - 1] + 5.0 * f[m])
        };
    }
    out
}

/// First zero of `D = 1 + W0 K` on the samples, located by bisection on the
/// cubic Hermite interpolant with `D' = W0 k`.
fn first_crossing(s: &[f64], k: &[f64], big_k: &[f64], w0: f64) -> Option<f64> {
    let d = |m: usize| 1.0 + w0 * big_k[m];
    let m = (1..s.len()).find(|&m| d(m) <= 0.0)?;
    let (s0, s1) = (s[m - 1], s[m]);
    let h = s1 - s0;
    let (d0, d1) = (d(m - 1), d(m));
    let (m0, m1) = (w0 * k[m - 1] * h, w0 * k[m] * h);
    let herm = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * d0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * d1 + (t3 - t2) * m1
    };
    if d1 == 0.0 {
        return Some(s1);
    }
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if herm(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(s0 + 0.5 * (a + b) * h)
}

/// Samples `(G, k)` along the curve and solves the Riccati law in closed
/// form through `K`.
pub fn integrate_riccati<F>(curve: &CharacteristicCurve, k_sampler: F, w0: f64) -> Result<RiccatiTrace>
where
    F: Fn([f64; 2]) -> Result<(f64, f64)>,
{
    let mut g = Vec::with_capacity(curve.points.len());
    let mut k = Vec::with_capacity(curve.points.len());
    for &p in &curve.points {
        let (gv, kv) = k_sampler(p)?;
        g.push(gv);
        k.push(kv);
    }
    Ok(riccati_from_samples(curve, g, k, w0))
}

fn riccati_from_samples(curve: &CharacteristicCurve, g: Vec<f64>, k: Vec<f64>, w0: f64) -> RiccatiTrace {
    let big_k = cumulative_simpson(curve.step, &k);
    let big_w: Vec<f64> = big_k.iter().map(|kk| w0 / (1.0 + w0 * kk)).collect();
    let w = big_w.iter().zip(&g).map(|(bw, gv)| gv.exp() * bw).collect();
    let s_star = if w0 == 0.0 { None } else { first_crossing(&curve.s, &k, &big_k, w0) };
    RiccatiTrace {
        s: curve.s.clone(),
        x: curve.points.iter().map(|p| p[0]).collect(),
        y: curve.points.iter().map(|p| p[1]).collect(),
        g,
        k,
        big_k,
        big_w,
        w,
        w0,
        s_star,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialW {
    /// Measure `w_i` on the field at the start and convert with `e^{−G_i}`.
    FromField,
    /// Use this value of `W0 = e^{−G_i} w_i` directly.
    Given(f64),
}

#[derive(Debug, Clone)]
pub struct BlowupOptions {
    pub step: Option<f64>,
    pub max_length: f64,
    pub initial: InitialW,
    /// Base point of `G_i`; the invariants at the start by default.
    pub g_base: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupPrediction {
    pub index: usize,
    pub start: [f64; 2],
    pub s_star: Option<f64>,
    pub curve: CharacteristicCurve,
    pub trace: RiccatiTrace,
}

/// Trace, coefficient sampling and Riccati solution composed.
pub fn predict_blowup(
    field: &dyn SolutionField,
    sys: &DiagonalSystem,
    i: usize,
    start: [f64; 2],
    opts: &BlowupOptions,
) -> Result<BlowupPrediction> {
    let step = opts.step.unwrap_or(field.domain().diameter() * DEFAULT_STEP_FRACTION);
    let curve = trace_characteristic(field, sys, i, start, step, opts.max_length)?;
    let base = match &opts.g_base {
        Some(b) => b.clone(),
        None => field.values(start[0], start[1])?,
    };
    let sampler = |p: [f64; 2]| riccati_coefficient(sys, field, i, p, &base);
    let w0 = match opts.initial {
        InitialW::Given(v) => v,
        InitialW::FromField => {
            let (g0, _) = sampler(start)?;
            (-g0).exp() * w_transversal(field, sys, i, start[0], start[1])?
        }
    };
    let trace = integrate_riccati(&curve, sampler, w0)?;
    Ok(BlowupPrediction {
        index: i,
        start,
        s_star: trace.s_star,
        curve,
        trace,
    })
}

/// Largest `|e^{G_i} W(s) − w_i(s)|` over the samples before any blow-up,
/// with `w_i` measured directly on the field.
pub fn cross_check_w(
    field: &dyn SolutionField,
    sys: &DiagonalSystem,
    i: usize,
    curve: &CharacteristicCurve,
    trace: &RiccatiTrace,
) -> Result<CrossCheck> {
    let mut out = CrossCheck {
        max_deviation: 0.0,
        max_abs_w: 0.0,
        measured: Vec::new(),
    };
    for (m, p) in curve.points.iter().enumerate() {
        if trace.s_star.is_some_and(|st| curve.s[m] >= st) {
            break;
        }
        let measured = w_transversal(field, sys, i, p[0], p[1])?;
        out.max_deviation = out.max_deviation.max((trace.w[m] - measured).abs());
        out.max_abs_w = out.max_abs_w.max(measured.abs());
        out.measured.push(measured);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheck {
    pub max_deviation: f64,
    pub max_abs_w: f64,
    /// Field-measured `w_i` at the compared samples.
    pub measured: Vec<f64>,
}

impl CrossCheck {
    pub fn relative(&self) -> f64 {
        if self.max_abs_w == 0.0 {
            self.max_deviation
        } else {
            self.max_deviation / self.max_abs_w
        }
    }
}
