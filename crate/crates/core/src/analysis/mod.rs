//! Scenario-driven analyses, their registry and the JSON report.

mod claws;
mod geoflow;
mod pencil;
mod report;
mod riccati;
mod richness;
mod scenario;
pub mod svg;

use std::path::PathBuf;

use serde::Serialize;

use crate::error::Result;
use crate::pencil::{normalize_angle, projective_distance};

pub use report::{Report, ScenarioReport, Timing, SCHEMA_VERSION};
pub use scenario::{
    BlowupExpect, ClawsConfig, FieldCheckConfig, GeoflowConfig, GoldenConfig, InitialWConfig, PassFail, PencilConfig,
    PencilExpect, Prepared, Region, RiccatiConfig, RichnessConfig, RichnessExpect, Scenario, SystemConfig,
    SystemModel,
};

/// Settings shared by every analysis of one run.
#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub seed: u64,
    /// Overrides each analysis' primary tolerance.
    pub tol: Option<f64>,
}

/// One named pass/fail criterion with the measured value.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    /// Passes when `value > threshold`.
    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            pass: value > threshold,
        }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            pass: ok,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

/// An output file produced by an analysis, written by the caller.
#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub file: String,
    #[serde(skip)]
    pub content: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub analysis: &'static str,
    pub status: Status,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
    pub artifacts: Vec<Artifact>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// The error came from the scenario configuration rather than the numerics.
    #[serde(skip)]
    pub config_error: bool,
}

impl Outcome {
    pub fn new(analysis: &'static str, checks: Vec<Check>, summary: impl Serialize, artifacts: Vec<Artifact>) -> Self {
        let status = if checks.iter().all(|c| c.pass) { Status::Pass } else { Status::Fail };
        Outcome {
            analysis,
            status,
            checks,
            summary: serde_json::to_value(summary).unwrap_or(serde_json::Value::Null),
            artifacts,
            error: None,
            config_error: false,
        }
    }

    fn failed(analysis: &'static str, e: crate::Error) -> Self {
        Outcome {
            analysis,
            status: Status::Error,
            checks: Vec::new(),
            summary: serde_json::Value::Null,
            artifacts: Vec::new(),
            config_error: matches!(e, crate::Error::Config(_)),
            error: Some(e.to_string()),
        }
    }
}

fn not_configured(name: &str) -> crate::Error {
    crate::Error::Config(format!("scenario has no [{name}] section"))
}

/// Largest distance mod π between matched sorted fans.
pub(crate) fn fan_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a: Vec<f64> = a.iter().map(|v| normalize_angle(*v)).collect();
    let mut b: Vec<f64> = b.iter().map(|v| normalize_angle(*v)).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    // Try every cyclic alignment; angles near 0 and π wrap.
    (0..a.len().max(1))
        .map(|shift| {
            a.iter()
                .enumerate()
                .map(|(k, x)| projective_distance(*x, b[(k + shift) % b.len()]))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// An analysis selectable by subcommand name.
pub trait Analysis: Send + Sync {
    fn name(&self) -> &'static str;
    /// Whether the scenario configures this analysis.
    fn applies(&self, scenario: &Prepared) -> bool;
    fn run(&self, scenario: &Prepared, ctx: &RunContext) -> Result<Outcome>;
}

/// Analyses in reporting order.
pub struct AnalysisRegistry {
    analyses: Vec<Box<dyn Analysis>>,
}

impl Default for AnalysisRegistry {
    fn default() -> Self {
        let mut r = AnalysisRegistry { analyses: Vec::new() };
        r.register(Box::new(pencil::PencilAnalysis));
        r.register(Box::new(richness::RichnessAnalysis));
        r.register(Box::new(riccati::RiccatiAnalysis));
        r.register(Box::new(claws::ClawsAnalysis));
        r.register(Box::new(geoflow::GeoflowAnalysis));
        r
    }
}

impl AnalysisRegistry {
    /// Adds an analysis, replacing one with the same name.
    pub fn register(&mut self, analysis: Box<dyn Analysis>) {
        match self.analyses.iter().position(|a| a.name() == analysis.name()) {
            Some(k) => self.analyses[k] = analysis,
            None => self.analyses.push(analysis),
        }
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.analyses.iter().map(|a| a.name()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&dyn Analysis> {
        self.analyses.iter().find(|a| a.name() == name).map(|a| a.as_ref())
    }

    /// Runs the named analysis, or every applicable one for `None`.
    /// Analysis failures are recorded in the outcome, not returned.
    pub fn run(&self, scenario: &Prepared, only: Option<&str>, ctx: &RunContext) -> Vec<(Outcome, f64)> {
        self.analyses
            .iter()
            .filter(|a| only.is_none_or(|n| n == a.name()))
            .filter(|a| a.applies(scenario))
            .map(|a| {
                let start = std::time::Instant::now();
                let out = a.run(scenario, ctx).unwrap_or_else(|e| Outcome::failed(a.name(), e));
                (out, start.elapsed().as_secs_f64())
            })
            .collect()
    }
}

/// Bundled scenario files, embedded at build time.
pub const CATALOG: &[(&str, &str)] = &[
    ("eps3", include_str!("../../catalog/eps3.toml")),
    ("eps4", include_str!("../../catalog/eps4.toml")),
    ("quad", include_str!("../../catalog/quad.toml")),
    ("decoupled", include_str!("../../catalog/decoupled.toml")),
    ("constant", include_str!("../../catalog/constant.toml")),
    ("rotated-eps", include_str!("../../catalog/rotated-eps.toml")),
    ("two-component", include_str!("../../catalog/two-component.toml")),
    ("perturbed", include_str!("../../catalog/perturbed.toml")),
    ("sq", include_str!("../../catalog/sq.toml")),
    ("cyc", include_str!("../../catalog/cyc.toml")),
    ("sinmix", include_str!("../../catalog/sinmix.toml")),
    ("prod", include_str!("../../catalog/prod.toml")),
    ("compressive", include_str!("../../catalog/compressive.toml")),
    ("expansive", include_str!("../../catalog/expansive.toml")),
    ("flat-trace", include_str!("../../catalog/flat-trace.toml")),
    ("cubic-a0-b1", include_str!("../../catalog/cubic-a0-b1.toml")),
    ("cubic-a0-b0", include_str!("../../catalog/cubic-a0-b0.toml")),
    ("claws-system22", include_str!("../../catalog/claws-system22.toml")),
    ("claws-corrupted", include_str!("../../catalog/claws-corrupted.toml")),
    ("claws-linear", include_str!("../../catalog/claws-linear.toml")),
    ("flat-metric", include_str!("../../catalog/flat-metric.toml")),
    ("liouville", include_str!("../../catalog/liouville.toml")),
];

/// Parses a bundled scenario by name.
pub fn catalog_scenario(name: &str) -> Result<Prepared> {
    let (_, text) = CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| crate::Error::Config(format!("no bundled scenario `{name}`")))?;
    Scenario::from_toml(text)?.prepare(format!("catalog:{name}"), None)
}

/// Every bundled scenario, in catalog order.
pub fn catalog() -> Result<Vec<Prepared>> {
    CATALOG.iter().map(|(n, _)| catalog_scenario(n)).collect()
}

/// Loads a scenario file; relative paths inside it resolve against its directory.
pub fn load_scenario(path: &std::path::Path) -> Result<Prepared> {
    let base: Option<PathBuf> = path.parent().map(|p| p.to_path_buf());
    Scenario::load(path)?.prepare(path.display().to_string(), base)
}

/// Runs `only` (or everything applicable) on each scenario and assembles the report.
pub fn run_scenarios(
    registry: &AnalysisRegistry,
    scenarios: &[Prepared],
    only: Option<&str>,
    command: &str,
    ctx: &RunContext,
) -> Report {
    let start = std::time::Instant::now();
    let mut timing = Timing::default();
    let reports = scenarios
        .iter()
        .map(|sc| {
            let outcomes = registry.run(sc, only, ctx);
            for (o, secs) in &outcomes {
                timing.analyses.push(report::AnalysisTiming {
                    scenario: sc.scenario.name.clone(),
                    analysis: o.analysis,
                    seconds: *secs,
                });
            }
            ScenarioReport::new(sc, outcomes.into_iter().map(|(o, _)| o).collect())
        })
        .collect();
    timing.total_seconds = start.elapsed().as_secs_f64();
    Report::new(command, ctx, reports, timing)
}
