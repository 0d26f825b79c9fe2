use serde::Serialize;

use super::{Outcome, Prepared, RunContext, Scenario, Status};

/// Bumped whenever a field of the JSON report changes meaning or shape.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub source: String,
    pub config: Scenario,
    pub analyses: Vec<Outcome>,
    pub status: Status,
}

impl ScenarioReport {
    pub fn new(sc: &Prepared, analyses: Vec<Outcome>) -> Self {
        ScenarioReport {
            name: sc.scenario.name.clone(),
            source: sc.source.clone(),
            config: sc.scenario.clone(),
            status: worst(analyses.iter().map(|a| a.status)),
            analyses,
        }
    }
}

fn worst(it: impl Iterator<Item = Status>) -> Status {
    it.fold(Status::Pass, |acc, s| match (acc, s) {
        (Status::Error, _) | (_, Status::Error) => Status::Error,
        (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
        _ => Status::Pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisTiming {
    pub scenario: String,
    pub analysis: &'static str,
    pub seconds: f64,
}

/// Wall-clock figures; the only part of a report that varies between runs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub analyses: Vec<AnalysisTiming>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub tol: Option<f64>,
    pub scenarios: Vec<ScenarioReport>,
    pub status: Status,
    pub timing: Timing,
}

impl Report {
    pub fn new(command: &str, ctx: &RunContext, scenarios: Vec<ScenarioReport>, timing: Timing) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed: ctx.seed,
            tol: ctx.tol,
            status: worst(scenarios.iter().map(|s| s.status)),
            scenarios,
            timing,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// The JSON report without the `timing` member.
    pub fn to_json_without_timing(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serialises");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        serde_json::to_string_pretty(&v).expect("report serialises")
    }
}
