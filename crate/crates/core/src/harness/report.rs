use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::runner::RunReport;
use super::HarnessError;
use crate::scalar::Scalar;
use crate::trust_collector::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected json or csv)")),
        }
    }
}

pub const CSV_HEADER: &str = "scenario,round,controllers,switches,publishes,paired_reads,probe_exchanges,total_messages,wall_seconds,trusted,untrusted,tied";

/// Pretty JSON. Timing is dropped unless `include_timing` is set.
pub fn to_json<F: Scalar>(report: &RunReport<F>, include_timing: bool) -> Result<String, HarnessError> {
    let text = if include_timing {
        serde_json::to_string_pretty(report)
    } else {
        let mut stripped = report.clone();
        stripped.wall_seconds = None;
        serde_json::to_string_pretty(&stripped)
    };
    text.map_err(HarnessError::Encode)
}

/// One row per round of every report, for re-plotting message counts and
/// timings against network size.
pub fn write_csv<F: Scalar, W: Write>(reports: &[RunReport<F>], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for report in reports {
        let n = report.scenario.controllers;
        let m = report
            .scenario
            .switches
            .unwrap_or_else(|| n * report.scenario.switches_per_controller.unwrap_or(0));
        for (i, round) in report.per_round.iter().enumerate() {
            let metrics = round.metrics.unwrap_or_default();
            let wall = report
                .wall_seconds
                .as_ref()
                .and_then(|w| w.get(i))
                .map(|s| format!("{s:.6}"))
                .unwrap_or_default();
            let count = |v: Verdict| round.verdicts.values().filter(|x| **x == v).count();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                report.scenario_name,
                round.round,
                n,
                m,
                metrics.publishes,
                metrics.paired_reads,
                metrics.probe_exchanges,
                metrics.total_messages,
                wall,
                count(Verdict::Trusted),
                count(Verdict::Untrusted),
                count(Verdict::TiedNeedsReview),
            )?;
        }
    }
    out.flush()
}

pub fn emit_report<F: Scalar>(
    report: &RunReport<F>,
    format: ReportFormat,
    path: &Path,
    include_timing: bool,
) -> Result<(), HarnessError> {
    let io_err = |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Json => {
            let text = to_json(report, include_timing)?;
            out.write_all(text.as_bytes()).map_err(io_err)?;
            out.write_all(b"\n").map_err(io_err)?;
            out.flush().map_err(io_err)
        }
        ReportFormat::Csv => write_csv(std::slice::from_ref(report), out).map_err(io_err),
    }
}
