//! `charfan` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use charfan_core::analysis::{self, AnalysisRegistry, Prepared, Report, RunContext, Status};

#[derive(Parser)]
#[command(name = "charfan", version, about = "Characteristic fans, richness and blow-up analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Pencil, characteristic fan and hyperbolicity scan.
    Pencil(Options),
    /// Richness residual sweep, verdicts and G-closedness.
    Richness(Options),
    /// Solution-field checks, characteristic trace and blow-up prediction.
    Riccati(Options),
    /// Conservation-form verification.
    Claws(Options),
    /// Geodesic integration, fibre analysis and transport residuals.
    Geoflow(Options),
    /// Every analysis a scenario configures.
    All(Options),
    /// List the bundled scenarios.
    Catalog,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(clap::Args, Clone)]
struct Options {
    /// Scenario file; the bundled catalog is used when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "charfan-out")]
    out: PathBuf,
    /// Sampling seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output formats.
    #[arg(long, value_delimiter = ',', default_value = "csv,json,svg")]
    format: Vec<Format>,
    /// Overrides the primary tolerance of each analysis.
    #[arg(long)]
    tol: Option<f64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Pencil(_) => "pencil",
            Command::Richness(_) => "richness",
            Command::Riccati(_) => "riccati",
            Command::Claws(_) => "claws",
            Command::Geoflow(_) => "geoflow",
            Command::All(_) => "all",
            Command::Catalog => "catalog",
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("CHARFAN_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("CHARFAN_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("CHARFAN_THREADS must be a positive integer, got `0`".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn write_outputs(report: &Report, dir: &Path, formats: &[Format]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if formats.contains(&Format::Json) {
        let p = dir.join("report.json");
        std::fs::write(&p, report.to_json())?;
        written.push(p);
    }
    for sc in &report.scenarios {
        for art in sc.analyses.iter().flat_map(|a| &a.artifacts) {
            let wanted = match Path::new(&art.file).extension().and_then(|e| e.to_str()) {
                Some("csv") => formats.contains(&Format::Csv),
                Some("svg") => formats.contains(&Format::Svg),
                _ => true,
            };
            if wanted {
                let p = dir.join(&art.file);
                std::fs::write(&p, &art.content)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

fn print_summary(report: &Report) {
    for sc in &report.scenarios {
        for a in &sc.analyses {
            let status = match a.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Error => "ERROR",
            };
            println!("{:<16} {:<9} {status}", sc.name, a.analysis);
            for c in a.checks.iter().filter(|c| !c.pass) {
                println!("    {}: {:e} (threshold {:e})", c.name, c.value, c.threshold);
            }
            if let Some(e) = &a.error {
                println!("    {e}");
            }
        }
    }
}

fn run(command: &Command) -> Result<ExitCode, (u8, String)> {
    let opts = match command {
        Command::Catalog => {
            for (name, _) in analysis::CATALOG {
                let desc = analysis::catalog_scenario(name).map(|s| s.scenario.description).unwrap_or_default();
                println!("{name:<16} {desc}");
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Pencil(o)
        | Command::Richness(o)
        | Command::Riccati(o)
        | Command::Claws(o)
        | Command::Geoflow(o)
        | Command::All(o) => o,
    };
    configure_threads().map_err(|e| (1, e))?;
    let mut scenarios: Vec<Prepared> = match &opts.config {
        Some(p) => vec![analysis::load_scenario(p).map_err(|e| (1, e.to_string()))?],
        None => analysis::catalog().map_err(|e| (1, e.to_string()))?,
    };
    let registry = AnalysisRegistry::default();
    let only = match command {
        Command::All(_) => None,
        c => Some(c.name()),
    };
    if let Some(name) = only {
        let analysis = registry.get(name).ok_or_else(|| (1, format!("unknown analysis `{name}`")))?;
        scenarios.retain(|sc| analysis.applies(sc));
    }
    if scenarios.is_empty() {
        return Err((1, format!("no scenario configures the `{}` analysis", command.name())));
    }
    let ctx = RunContext {
        seed: opts.seed,
        tol: opts.tol,
    };
    let report = analysis::run_scenarios(&registry, &scenarios, only, command.name(), &ctx);
    print_summary(&report);
    let written = write_outputs(&report, &opts.out, &opts.format).map_err(|e| (1, format!("{}: {e}", opts.out.display())))?;
    println!("wrote {} file(s) to {}", written.len(), opts.out.display());

    let outcomes = || report.scenarios.iter().flat_map(|s| &s.analyses);
    if let Some(e) = outcomes().find(|a| a.config_error).and_then(|a| a.error.clone()) {
        return Err((1, e));
    }
    Ok(match report.status {
        Status::Pass => ExitCode::SUCCESS,
        Status::Fail | Status::Error => ExitCode::from(2),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
