use super::{FieldKind, FieldSample, Rect, SolutionField};
use crate::error::Result;
use crate::expr::Expression;

/// Components given as expressions in `x, y`; partials are exact.
#[derive(Debug, Clone)]
pub struct AnalyticField {
    components: Vec<Expression>,
    domain: Rect,
}

impl AnalyticField {
    pub fn new(components: Vec<Expression>, domain: Rect) -> Result<Self> {
        Ok(AnalyticField { components, domain })
    }

    pub fn parse(components: &[impl AsRef<str>], domain: Rect) -> Result<Self> {
        Self::parse_with_constants(components, domain, &[])
    }

    pub fn parse_with_constants(components: &[impl AsRef<str>], domain: Rect, constants: &[(String, f64)]) -> Result<Self> {
        let vars = ["x", "y"];
        let components = components
            .iter()
            .map(|s| Expression::parse_with_constants(s.as_ref(), &vars, constants))
            .collect::<Result<Vec<_>>>()?;
        Ok(AnalyticField { components, domain })
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }
}

impl SolutionField for AnalyticField {
    fn kind(&self) -> FieldKind {
        FieldKind::Analytic
    }

    fn dim(&self) -> usize {
        self.components.len()
    }

    fn domain(&self) -> &Rect {
        &self.domain
    }

    fn sample(&self, x: f64, y: f64) -> Result<FieldSample> {
        self.domain.check(x, y)?;
        let n = self.components.len();
        let mut s = FieldSample {
            r: Vec::with_capacity(n),
            rx: Vec::with_capacity(n),
            ry: Vec::with_capacity(n),
        };
        for e in &self.components {
            let (v, g) = e.gradient(&[x, y])?;
            s.r.push(v);
            s.rx.push(g[0]);
            s.ry.push(g[1]);
        }
        Ok(s)
    }
}
