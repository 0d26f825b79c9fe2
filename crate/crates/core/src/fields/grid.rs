use std::io::{Read, Write};

use super::{FieldKind, FieldSample, Rect, SolutionField};
use crate::error::{Error, Result};

/// Samples on a regular tensor grid with bilinear interpolation. Partials are
/// the exact derivatives of the bilinear patch containing the query; on cell
/// edges the cell with the larger lower corner is used, clamped to the hull.
#[derive(Debug, Clone)]
pub struct GridField {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `values[k][iy * nx + ix]`.
    values: Vec<Vec<f64>>,
    domain: Rect,
}

fn check_axis(axis: &[f64], name: &str) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::Invalid(format!("{name} axis needs at least 2 nodes")));
    }
    if axis.windows(2).any(|w| !(w[0] < w[1])) || axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

fn locate(axis: &[f64], v: f64) -> (usize, f64) {
    let cell = axis.partition_point(|&a| a <= v).saturating_sub(1).min(axis.len() - 2);
    let t = (v - axis[cell]) / (axis[cell + 1] - axis[cell]);
    (cell, t)
}

impl GridField {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_axis(&xs, "x")?;
        check_axis(&ys, "y")?;
        let nodes = xs.len() * ys.len();
        if values.is_empty() {
            return Err(Error::Invalid("grid field needs at least one component".into()));
        }
        if let Some(bad) = values.iter().find(|v| v.len() != nodes) {
            return Err(Error::Dimension {
                expected: nodes,
                got: bad.len(),
            });
        }
        let domain = Rect::new(xs[0], xs[xs.len() - 1], ys[0], ys[ys.len() - 1])?;
        Ok(GridField { xs, ys, values, domain })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(xs: Vec<f64>, ys: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Vec<f64>>,
    {
        let mut values: Vec<Vec<f64>> = Vec::new();
        for &y in &ys {
            for &x in &xs {
                let v = f(x, y)?;
                if values.is_empty() {
                    values = vec![Vec::with_capacity(xs.len() * ys.len()); v.len()];
                }
                if v.len() != values.len() {
                    return Err(Error::Dimension {
                        expected: values.len(),
                        got: v.len(),
                    });
                }
                for (col, val) in values.iter_mut().zip(v) {
                    col.push(val);
                }
            }
        }
        GridField::new(xs, ys, values)
    }

    /// `n + 1` equally spaced nodes on `[lo, hi]`.
    pub fn uniform_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Reads CSV with header `x,y,r1,…,rn`, one row per grid node.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Config(e.to_string()))?.clone();
        let n = headers.len().saturating_sub(2);
        let expected: Vec<String> = ["x".to_string(), "y".to_string()]
            .into_iter()
            .chain((1..=n).map(|k| format!("r{k}")))
            .collect();
        if n == 0 || headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Config(format!("grid header must be {:?}, got {:?}", expected.join(","), headers)));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Config(format!("grid row {}: {e}", line + 2)))?;
            if row.len() != n + 2 {
                return Err(Error::Config(format!("grid row {} has {} columns", line + 2, row.len())));
            }
            rows.push(row);
        }
        let axis = |c: usize| {
            let mut a: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            a.sort_by(f64::total_cmp);
            a.dedup();
            a
        };
        let (xs, ys) = (axis(0), axis(1));
        if xs.len() * ys.len() != rows.len() {
            return Err(Error::Config(format!(
                "{} rows do not form a regular {}x{} grid",
                rows.len(),
                xs.len(),
                ys.len()
            )));
        }
        let mut values = vec![vec![f64::NAN; rows.len()]; n];
        for row in &rows {
            let ix = xs.partition_point(|&v| v < row[0]);
            let iy = ys.partition_point(|&v| v < row[1]);
            let idx = iy * xs.len() + ix;
            if !values[0][idx].is_nan() {
                return Err(Error::Config(format!("duplicate grid node ({}, {})", row[0], row[1])));
            }
            for k in 0..n {
                values[k][idx] = row[k + 2];
            }
        }
        GridField::new(xs, ys, values)
    }

    /// Writes CSV with header `x,y,r1,…,rn`, `y` varying slowest.
    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        let header: Vec<String> = ["x".to_string(), "y".to_string()]
            .into_iter()
            .chain((1..=self.values.len()).map(|k| format!("r{k}")))
            .collect();
        w.write_record(&header).map_err(io)?;
        for (iy, y) in self.ys.iter().enumerate() {
            for (ix, x) in self.xs.iter().enumerate() {
                let idx = iy * self.xs.len() + ix;
                let rec: Vec<String> = [*x, *y]
                    .into_iter()
                    .chain(self.values.iter().map(|v| v[idx]))
                    .map(|v| format!("{v:e}"))
                    .collect();
                w.write_record(&rec).map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl SolutionField for GridField {
    fn kind(&self) -> FieldKind {
        FieldKind::Grid
    }

    fn dim(&self) -> usize {
        self.values.len()
    }

    fn domain(&self) -> &Rect {
        &self.domain
    }

    fn sample(&self, x: f64, y: f64) -> Result<FieldSample> {
        self.domain.check(x, y)?;
        let (ix, tx) = locate(&self.xs, x);
        let (iy, ty) = locate(&self.ys, y);
        let hx = self.xs[ix + 1] - self.xs[ix];
        let hy = self.ys[iy + 1] - self.ys[iy];
        let nx = self.xs.len();
        let n = self.values.len();
        let mut s = FieldSample {
            r: Vec::with_capacity(n),
            rx: Vec::with_capacity(n),
            ry: Vec::with_capacity(n),
        };
        for v in &self.values {
            let f00 = v[iy * nx + ix];
            let f10 = v[iy * nx + ix + 1];
            let f01 = v[(iy + 1) * nx + ix];
            let f11 = v[(iy + 1) * nx + ix + 1];
            s.r.push(
                f00 * (1.0 - tx) * (1.0 - ty) + f10 * tx * (1.0 - ty) + f01 * (1.0 - tx) * ty + f11 * tx * ty,
            );
            s.rx.push(((f10 - f00) * (1.0 - ty) + (f11 - f01) * ty) / hx);
            s.ry.push(((f01 - f00) * (1.0 - tx) + (f11 - f10) * tx) / hy);
        }
        Ok(s)
    }
}
