//! Run reports: one JSON document per run, plus CSV curves and a timings
//! sidecar next to it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{error_kind, CliError};
use crate::scenario::{GridSpec, Scenario};
use crate::tasks::{Outputs, Timings};

pub const SCHEMA: &str = "matweight-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Task without a verdict that ran to completion.
    Done,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass | Status::Done => 0,
            Status::Fail => 2,
            Status::Error => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub scenario: Scenario,
    pub provenance: Provenance,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Outputs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

impl Report {
    pub fn new(scenario: &Scenario, result: Result<Outputs, CliError>) -> Self {
        let provenance = Provenance { seed: scenario.seed, version: env!("CARGO_PKG_VERSION").to_string(), grid: scenario.grid };
        let (status, outputs, error) = match result {
            Ok(o) => {
                let status = match o.pass() {
                    Some(true) => Status::Pass,
                    Some(false) => Status::Fail,
                    None => Status::Done,
                };
                (status, Some(o), None)
            }
            Err(e) => (Status::Error, None, Some(error_record(&e))),
        };
        Self { schema: SCHEMA.to_string(), scenario: scenario.clone(), provenance, status, outputs, error }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// CSV curves carried by the outputs, keyed by file suffix.
    pub fn curves(&self) -> Vec<(&'static str, String)> {
        match &self.outputs {
            Some(Outputs::Moduli(m)) => vec![("tail", m.tail.to_csv()), ("equicontinuity", m.equicontinuity.to_csv())],
            _ => Vec::new(),
        }
    }
}

pub fn error_record(e: &CliError) -> ErrorRecord {
    match e {
        CliError::Schema { .. } => ErrorRecord { kind: "Schema".into(), message: e.to_string(), context: None },
        CliError::Task { context, source } => ErrorRecord { kind: error_kind(source), message: source.to_string(), context: Some(context.clone()) },
        CliError::Io(m) => ErrorRecord { kind: "Io".into(), message: m.clone(), context: None },
    }
}

/// `<dir>/<stem>.<suffix>.<ext>` next to `out`.
pub fn sidecar(out: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    out.with_file_name(format!("{stem}.{suffix}.{ext}"))
}

/// Writes the report, its curves and the timings sidecar.
pub fn write_report(report: &Report, timings: &Timings, out: Option<&Path>) -> Result<(), CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    match out {
        Some(out) => {
            std::fs::write(out, report.to_json()).map_err(|e| io(out, e))?;
            for (suffix, csv) in report.curves() {
                let p = sidecar(out, suffix, "csv");
                std::fs::write(&p, csv).map_err(|e| io(&p, e))?;
            }
            let p = sidecar(out, "timings", "json");
            let t = serde_json::to_string_pretty(timings).expect("timings serialize");
            std::fs::write(&p, t + "\n").map_err(|e| io(&p, e))?;
        }
        None => {
            print!("{}", report.to_json());
            for (name, secs) in &timings.phases {
                eprintln!("{name}: {secs:.3} s");
            }
        }
    }
    Ok(())
}
