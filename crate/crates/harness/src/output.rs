//! CSV and JSON outputs.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::experiment::ExperimentReport;

/// One row of `report.csv`. The column set is fixed.
#[derive(Debug, Serialize)]
pub struct ReportRow<'a> {
    pub experiment_id: &'a str,
    pub protocol: String,
    pub n: usize,
    pub quorum: String,
    pub lme: bool,
    pub clients: usize,
    pub repetition: u32,
    pub convergence_time_s: Option<f64>,
    pub cvf_stuttering: u64,
    pub cvf_statechanging: u64,
    pub seed: u64,
}

pub const REPORT_COLUMNS: [&str; 11] = [
    "experiment_id",
    "protocol",
    "n",
    "quorum",
    "lme",
    "clients",
    "repetition",
    "convergence_time_s",
    "cvf_stuttering",
    "cvf_statechanging",
    "seed",
];

pub fn report_rows(report: &ExperimentReport) -> Vec<ReportRow<'_>> {
    let config = report.config();
    report
        .runs
        .iter()
        .map(|run| ReportRow {
            experiment_id: &config.id,
            protocol: config.protocol.to_string(),
            n: report.provenance.nodes,
            quorum: config.quorum.to_string(),
            lme: config.lme,
            clients: config.clients,
            repetition: run.repetition,
            convergence_time_s: run.metrics.convergence_time_s(),
            cvf_stuttering: run.metrics.cvf_stuttering,
            cvf_statechanging: run.metrics.cvf_state_changing,
            seed: run.seed,
        })
        .collect()
}

pub fn write_report_csv<W: Write>(out: W, reports: &[ExperimentReport]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for report in reports {
        for row in report_rows(report) {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct PatternRow<'a> {
    experiment_id: &'a str,
    repetition: u32,
    time: f64,
    fraction: f64,
}

/// Matched-fraction samples, time in seconds.
pub fn write_pattern_csv<W: Write>(out: W, reports: &[ExperimentReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for report in reports {
        for run in &report.runs {
            for &(t, fraction) in &run.metrics.matched_series {
                w.serialize(PatternRow {
                    experiment_id: &report.config().id,
                    repetition: run.repetition,
                    time: t as f64 / 1e6,
                    fraction,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_json<W: Write>(out: W, reports: &[ExperimentReport]) -> Result<()> {
    serde_json::to_writer_pretty(out, reports)?;
    Ok(())
}
