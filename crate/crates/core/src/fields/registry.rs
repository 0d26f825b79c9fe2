use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{AnalyticField, GridField, Rect, SimpleWaveField, SimpleWaveSpec, SolutionField};
use crate::error::{Error, Result};
use crate::richness::DiagonalSystem;

/// Everything a field description may refer to besides its own table.
#[derive(Debug, Clone, Copy, Default)]
pub struct FieldContext<'a> {
    pub system: Option<&'a DiagonalSystem>,
    pub base_dir: Option<&'a Path>,
    pub constants: &'a [(String, f64)],
}

/// Builds one kind of [`SolutionField`] from a TOML table.
pub trait FieldBuilder: Send + Sync {
    fn kind(&self) -> &'static str;
    fn build(&self, table: &toml::Table, ctx: &FieldContext<'_>) -> Result<Box<dyn SolutionField>>;
}

/// Field builders keyed by the table's `kind` entry.
pub struct FieldRegistry {
    builders: BTreeMap<&'static str, Box<dyn FieldBuilder>>,
}

impl Default for FieldRegistry {
    fn default() -> Self {
        let mut r = FieldRegistry {
            builders: BTreeMap::new(),
        };
        r.register(Box::new(AnalyticBuilder));
        r.register(Box::new(GridBuilder));
        r.register(Box::new(SimpleWaveBuilder));
        r
    }
}

impl FieldRegistry {
    pub fn register(&mut self, builder: Box<dyn FieldBuilder>) {
        self.builders.insert(builder.kind(), builder);
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.builders.keys().copied().collect()
    }

    pub fn build(&self, table: &toml::Table, ctx: &FieldContext<'_>) -> Result<Box<dyn SolutionField>> {
        let kind = table
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Config("field table needs a string `kind`".into()))?;
        let builder = self.builders.get(kind).ok_or_else(|| {
            Error::Config(format!("unknown field kind `{kind}`; known: {}", self.kinds().join(", ")))
        })?;
        let mut rest = table.clone();
        rest.remove("kind");
        builder.build(&rest, ctx)
    }
}

pub(crate) fn from_table<T: DeserializeOwned>(table: &toml::Table) -> Result<T> {
    toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

fn rect(d: [f64; 4]) -> Result<Rect> {
    Rect::new(d[0], d[1], d[2], d[3])
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyticCfg {
    components: Vec<String>,
    domain: [f64; 4],
}

struct AnalyticBuilder;

impl FieldBuilder for AnalyticBuilder {
    fn kind(&self) -> &'static str {
        "analytic"
    }

    fn build(&self, table: &toml::Table, ctx: &FieldContext<'_>) -> Result<Box<dyn SolutionField>> {
        let c: AnalyticCfg = from_table(table)?;
        Ok(Box::new(AnalyticField::parse_with_constants(&c.components, rect(c.domain)?, ctx.constants)?))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridCfg {
    path: PathBuf,
}

struct GridBuilder;

impl FieldBuilder for GridBuilder {
    fn kind(&self) -> &'static str {
        "grid"
    }

    fn build(&self, table: &toml::Table, ctx: &FieldContext<'_>) -> Result<Box<dyn SolutionField>> {
        let c: GridCfg = from_table(table)?;
        let path = match ctx.base_dir {
            Some(dir) if c.path.is_relative() => dir.join(&c.path),
            _ => c.path,
        };
        let file = std::fs::File::open(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok(Box::new(GridField::from_csv(file)?))
    }
}

/// Indices are 1-based as in the invariant names `r1 … rn`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimpleWaveCfg {
    active: usize,
    state: Vec<f64>,
    origin: [f64; 2],
    direction: [f64; 2],
    profile: String,
    xi_range: [f64; 2],
    domain: [f64; 4],
}

struct SimpleWaveBuilder;

impl FieldBuilder for SimpleWaveBuilder {
    fn kind(&self) -> &'static str {
        "simple-wave"
    }

    fn build(&self, table: &toml::Table, ctx: &FieldContext<'_>) -> Result<Box<dyn SolutionField>> {
        let c: SimpleWaveCfg = from_table(table)?;
        let system = ctx
            .system
            .ok_or_else(|| Error::Config("a simple-wave field needs a diagonal system".into()))?;
        if c.active == 0 {
            return Err(Error::Config("`active` is 1-based".into()));
        }
        let spec = SimpleWaveSpec {
            system: system.clone(),
            active: c.active - 1,
            state: c.state,
            origin: c.origin,
            direction: c.direction,
            profile: crate::expr::Expression::parse_with_constants(&c.profile, &["xi"], ctx.constants)?,
            xi_range: (c.xi_range[0], c.xi_range[1]),
        };
        Ok(Box::new(SimpleWaveField::new(spec, rect(c.domain)?)?))
    }
}
