//! CSV and JSON emission. Every data file starts with config-hash and seed
//! stamp lines so any artifact can be traced to the run that produced it.

use crate::config::fmt_float;
use crate::CliResult;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub struct CsvBuilder {
    text: String,
    width: usize,
}

impl CsvBuilder {
    pub fn new(hash: &str, seed: u64) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# config_hash={hash}");
        let _ = writeln!(text, "# seed={seed}");
        CsvBuilder { text, width: 0 }
    }

    pub fn comment(&mut self, note: &str) {
        let _ = writeln!(self.text, "# {note}");
    }

    pub fn header(&mut self, columns: &[&str]) {
        self.width = columns.len();
        let _ = writeln!(self.text, "{}", columns.join(","));
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.width, "csv row width mismatch");
        let joined: Vec<String> = values.iter().map(|v| fmt_float(*v)).collect();
        let _ = writeln!(self.text, "{}", joined.join(","));
    }

    pub fn write_to(self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.text)?;
        Ok(())
    }
}

#[derive(Serialize)]
pub struct RunReport {
    pub model: String,
    pub engine: String,
    pub config_hash: String,
    pub seed: u64,
    pub final_fidelity: f64,
    pub kinematic_phase: f64,
    pub final_energy: f64,
    pub trace_minimum_time: f64,
    pub trace_minimum: f64,
    pub boundary_residuals: [f64; 8],
    pub leakage: Option<f64>,
}

pub fn write_report(dir: &Path, report: &RunReport) -> CliResult<()> {
    let path = dir.join(format!("report_{}.json", report.model));
    let mut text = serde_json::to_string_pretty(report).expect("report serialization");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
