use std::path::Path;

use serde::Serialize;

use crate::design::EstimationMode;
use crate::error::Result;
use crate::scenarios::{ScenarioConfig, SimReport};

/// Identifies the column layout of `results.csv`; bump on any change.
pub const CSV_SCHEMA: &str = "npolar-results-v1";

pub struct PointResult {
    pub index: usize,
    pub config: ScenarioConfig,
    pub report: std::result::Result<SimReport, String>,
    pub design_seconds: f64,
    pub run_seconds: f64,
    pub cache_hits: usize,
}

/// One row of `results.csv`. Multi-valued cells are `key=value` lists
/// joined by `;`, keys in sorted or terminal order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    pub schema: &'static str,
    pub point: usize,
    pub scenario: String,
    pub group: String,
    pub n: u32,
    pub block_length: usize,
    pub delta_c: f64,
    pub delta_s: f64,
    pub seed: u64,
    pub trials: usize,
    pub estimation: String,
    pub designed_rates: String,
    pub theoretical_rates: String,
    pub rate_gap: String,
    pub error_rates: String,
    pub distortions: String,
    pub events: String,
    pub status: String,
}

fn join<'a>(items: impl IntoIterator<Item = (&'a str, String)>) -> String {
    items
        .into_iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

impl CsvRow {
    pub fn new(r: &PointResult) -> Self {
        let c = &r.config;
        let mut row = CsvRow {
            schema: CSV_SCHEMA,
            point: r.index,
            scenario: c.scenario.to_string(),
            group: c
                .group
                .iter()
                .map(|f| f.to_string())
                .collect::<Vec<_>>()
                .join("x"),
            n: c.n,
            block_length: 1 << c.n,
            delta_c: c.thresholds.delta_c,
            delta_s: c.thresholds.delta_s,
            seed: c.seed,
            trials: c.trials,
            estimation: match c.estimation {
                EstimationMode::Exact => "exact".into(),
                EstimationMode::MonteCarlo { trials } => format!("monte_carlo:{trials}"),
            },
            designed_rates: String::new(),
            theoretical_rates: String::new(),
            rate_gap: String::new(),
            error_rates: String::new(),
            distortions: String::new(),
            events: String::new(),
            status: "ok".into(),
        };
        match &r.report {
            Ok(rep) => {
                row.designed_rates = join(
                    rep.terminals
                        .iter()
                        .map(|t| (t.tag.as_str(), t.designed_rate.to_string())),
                );
                row.theoretical_rates = join(
                    rep.terminals
                        .iter()
                        .map(|t| (t.tag.as_str(), t.theoretical_rate.to_string())),
                );
                row.rate_gap = rep.max_rate_gap().to_string();
                let (errors, dist): (Vec<_>, Vec<_>) =
                    rep.metrics.iter().partition(|(k, _)| k.contains("error"));
                row.error_rates = join(
                    errors
                        .into_iter()
                        .map(|(k, e)| (k.as_str(), e.mean.to_string())),
                );
                row.distortions = join(
                    dist.into_iter()
                        .map(|(k, e)| (k.as_str(), e.mean.to_string())),
                );
                row.events = join(
                    rep.events
                        .iter()
                        .filter(|(k, _)| !k.starts_with("block_errors"))
                        .map(|(k, v)| (k.as_str(), v.to_string())),
                );
            }
            Err(e) => row.status = format!("error: {e}"),
        }
        row
    }
}

#[derive(Serialize)]
struct PointJson<'a> {
    point: usize,
    status: &'a str,
    error: Option<&'a str>,
    config: &'a ScenarioConfig,
    report: Option<&'a SimReport>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    schema: &'static str,
    name: Option<&'a str>,
    points: Vec<PointJson<'a>>,
}

pub fn write_artifacts(out: &Path, name: Option<&str>, results: &[PointResult]) -> Result<()> {
    let mut csv = csv::Writer::from_path(out.join("results.csv"))?;
    for r in results {
        csv.serialize(CsvRow::new(r))?;
    }
    csv.flush()?;

    let points = results
        .iter()
        .map(|r| PointJson {
            point: r.index,
            status: if r.report.is_ok() { "ok" } else { "error" },
            error: r.report.as_ref().err().map(String::as_str),
            config: &r.config,
            report: r.report.as_ref().ok(),
        })
        .collect();
    let json = serde_json::to_string_pretty(&ReportJson {
        schema: CSV_SCHEMA,
        name,
        points,
    })?;
    std::fs::write(out.join("report.json"), json + "\n")?;

    let mut t = csv::Writer::from_path(out.join("timings.csv"))?;
    t.write_record([
        "point",
        "scenario",
        "n",
        "design_seconds",
        "run_seconds",
        "cache_hits",
    ])?;
    for r in results {
        t.write_record([
            r.index.to_string(),
            r.config.scenario.to_string(),
            r.config.n.to_string(),
            format!("{:.3}", r.design_seconds),
            format!("{:.3}", r.run_seconds),
            r.cache_hits.to_string(),
        ])?;
    }
    t.flush()?;
    Ok(())
}
