//! TOML scenario files: one system plus the analyses to run on it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geoflow::build_system22;
use crate::pencil::QuasiLinearSystem;
use crate::richness::DiagonalSystem;
use crate::sampling::DomainBox;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    pub system: SystemConfig,
    pub pencil: Option<PencilConfig>,
    pub richness: Option<RichnessConfig>,
    pub riccati: Option<RiccatiConfig>,
    #[serde(default)]
    pub fields: Vec<FieldCheckConfig>,
    pub claws: Option<ClawsConfig>,
    pub geoflow: Option<GeoflowConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// Angles `phi` or speeds `lambda` (converted with `atan`) in the
    /// invariants `vars`.
    Diagonal {
        vars: Vec<String>,
        phi: Option<Vec<String>>,
        lambda: Option<Vec<String>>,
        region: Region,
    },
    Quasilinear {
        vars: Vec<String>,
        a: Vec<Vec<String>>,
        b: Vec<Vec<String>>,
        region: Region,
    },
    /// The coefficient system of a cubic integral in `(u, v, Lambda)`.
    GeodesicCubic { a: f64, b: f64, region: Region },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PencilExpect {
    Strict,
    NonStrict,
    Degenerate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilConfig {
    /// States to report in full; the region centre if empty.
    #[serde(default)]
    pub states: Vec<Vec<f64>>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Expected fan at the first state, in radians mod π.
    pub fan: Option<Vec<f64>>,
    #[serde(default = "default_rotations")]
    pub rotations: usize,
    pub expect: Option<PencilExpect>,
}

fn default_resolution() -> usize {
    5
}

fn default_rotations() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RichnessExpect {
    Rich,
    NotRich,
    Vacuous,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenConfig {
    pub point: Vec<f64>,
    /// 1-based `(i, j, k)`.
    pub triple: [usize; 3],
    /// Expected raw residual, if recorded.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RichnessConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub tol: Option<f64>,
    pub golden: Option<GoldenConfig>,
    #[serde(default = "default_g_targets")]
    pub g_targets: usize,
    #[serde(default = "default_rotations")]
    pub rotations: usize,
    pub expect: Option<RichnessExpect>,
}

fn default_samples() -> usize {
    100
}

fn default_g_targets() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialWConfig {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowupExpect {
    Blowup,
    None,
    Flat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiccatiConfig {
    /// 1-based characteristic family.
    pub index: usize,
    pub start: [f64; 2],
    pub max_length: f64,
    pub step: Option<f64>,
    /// `"field"` or a number giving `W0`.
    #[serde(default = "default_w0")]
    pub w0: InitialWConfig,
    pub g_base: Option<Vec<f64>>,
    /// Step-halving levels for the blow-up estimate; 0 disables the study.
    #[serde(default)]
    pub halvings: usize,
    pub expect: Option<BlowupExpect>,
    pub field: toml::Table,
}

fn default_w0() -> InitialWConfig {
    InitialWConfig::Named("field".into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldCheckConfig {
    /// Whether the field is claimed to solve the system.
    pub exact: bool,
    #[serde(default = "default_probe")]
    pub probe: usize,
    #[serde(flatten)]
    pub field: toml::Table,
}

fn default_probe() -> usize {
    9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassFail {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClawsConfig {
    pub g: Vec<String>,
    pub h: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub tol: Option<f64>,
    pub det_tol: Option<f64>,
    /// Require `C = I` at every sample.
    #[serde(default)]
    pub identity: bool,
    pub expect: Option<PassFail>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoflowConfig {
    pub u: String,
    pub v: String,
    pub lambda: String,
    /// `[x, y, p1, p2]`.
    pub start: [f64; 4],
    pub t_final: f64,
    pub dt: f64,
    /// Re-run at `dt/2` and report the drift reduction.
    #[serde(default)]
    pub halving: bool,
    #[serde(default = "default_drift_tol")]
    pub drift_tol: f64,
    /// `p2` is an integral (metric independent of `y`).
    #[serde(default)]
    pub linear_integral: bool,
    /// `F` is claimed to be an integral of the flow.
    #[serde(default = "yes")]
    pub integral: bool,
    #[serde(default)]
    pub fibre_points: Vec<[f64; 2]>,
    /// Random constant states from the region for the fibre checks.
    #[serde(default)]
    pub random_states: usize,
    #[serde(default = "default_transport")]
    pub transport_grid: [usize; 3],
}

fn default_drift_tol() -> f64 {
    1e-6
}

fn yes() -> bool {
    true
}

fn default_transport() -> [usize; 3] {
    [5, 16, 24]
}

/// A parsed system ready for analysis.
#[derive(Debug, Clone)]
pub enum SystemModel {
    Diagonal(DiagonalSystem),
    Quasilinear(QuasiLinearSystem),
    GeodesicCubic { a: f64, b: f64, system: QuasiLinearSystem },
}

impl SystemModel {
    pub fn dim(&self) -> usize {
        match self {
            SystemModel::Diagonal(d) => d.dim(),
            SystemModel::Quasilinear(q) | SystemModel::GeodesicCubic { system: q, .. } => q.dim(),
        }
    }

    pub fn variables(&self) -> Vec<String> {
        match self {
            SystemModel::Diagonal(d) => d.variables().to_vec(),
            SystemModel::Quasilinear(q) | SystemModel::GeodesicCubic { system: q, .. } => q.variables().to_vec(),
        }
    }

    /// `(A, B)` form; diagonal systems use `diag(cos φ), diag(sin φ)`.
    pub fn quasilinear(&self) -> Result<QuasiLinearSystem> {
        match self {
            SystemModel::Diagonal(d) => d.as_quasilinear(),
            SystemModel::Quasilinear(q) | SystemModel::GeodesicCubic { system: q, .. } => Ok(q.clone()),
        }
    }

    pub fn diagonal(&self) -> Option<&DiagonalSystem> {
        match self {
            SystemModel::Diagonal(d) => Some(d),
            _ => None,
        }
    }
}

/// A scenario with its system parsed and its sampling region checked.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub source: String,
    pub base_dir: Option<PathBuf>,
    pub constants: Vec<(String, f64)>,
    pub system: SystemModel,
    pub region: DomainBox,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scenario::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses every expression of the system; errors here are configuration errors.
    pub fn prepare(self, source: impl Into<String>, base_dir: Option<PathBuf>) -> Result<Prepared> {
        let constants: Vec<(String, f64)> = self.constants.iter().map(|(k, v)| (k.clone(), *v)).collect();
        let region_cfg = match &self.system {
            SystemConfig::Diagonal { region, .. }
            | SystemConfig::Quasilinear { region, .. }
            | SystemConfig::GeodesicCubic { region, .. } => region,
        };
        let region = DomainBox::new(region_cfg.lo.clone(), region_cfg.hi.clone())?;
        let system = match &self.system {
            SystemConfig::Diagonal { vars, phi, lambda, .. } => {
                for (label, list) in [("phi", phi), ("lambda", lambda)] {
                    if let Some(list) = list {
                        check_expressions(&format!("system.{label}"), list, vars, &constants)?;
                    }
                }
                let sys = match (phi, lambda) {
                    (Some(p), None) => DiagonalSystem::from_phi(vars, p, &constants)?,
                    (None, Some(l)) => DiagonalSystem::from_lambda(vars, l, &constants)?,
                    _ => return Err(Error::Config("a diagonal system needs exactly one of `phi`, `lambda`".into())),
                };
                SystemModel::Diagonal(sys.with_domain(region.clone())?)
            }
            SystemConfig::Quasilinear { vars, a, b, .. } => {
                for (label, m) in [("a", a), ("b", b)] {
                    for (row, list) in m.iter().enumerate() {
                        check_expressions(&format!("system.{label}[{row}]"), list, vars, &constants)?;
                    }
                }
                SystemModel::Quasilinear(QuasiLinearSystem::parse(vars, a, b, &constants)?)
            }
            SystemConfig::GeodesicCubic { a, b, .. } => SystemModel::GeodesicCubic {
                a: *a,
                b: *b,
                system: build_system22(*a, *b),
            },
        };
        if region.dim() != system.dim() {
            return Err(Error::Config(format!(
                "region has dimension {}, system has {}",
                region.dim(),
                system.dim()
            )));
        }
        Ok(Prepared {
            scenario: self,
            source: source.into(),
            base_dir,
            constants,
            system,
            region,
        })
    }
}

/// Parses each expression on its own so that a failure can name the entry
/// and point at the offending position.
pub(crate) fn check_expressions(
    label: &str,
    list: &[String],
    vars: &[impl AsRef<str>],
    constants: &[(String, f64)],
) -> Result<()> {
    for (k, text) in list.iter().enumerate() {
        if let Err(e) = Expression::parse_with_constants(text, vars, constants) {
            return Err(annotate(&format!("{label}[{k}]"), text, e));
        }
    }
    Ok(())
}

pub(crate) fn annotate(label: &str, text: &str, e: Error) -> Error {
    let offset = match &e {
        Error::Syntax { offset, .. } | Error::UnknownIdentifier { offset, .. } => Some(*offset),
        _ => None,
    };
    match offset {
        Some(o) => {
            let col = text.get(..o.min(text.len())).map_or(o, |s| s.chars().count());
            Error::Config(format!("{label}: {e}\n    {text}\n    {}^", " ".repeat(col)))
        }
        None => Error::Config(format!("{label}: {e}")),
    }
}
