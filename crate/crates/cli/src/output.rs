//! Report emission. JSON goes through serde_json; CSV floats use 17
//! significant digits so every value round-trips.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::config::Format;
use crate::CliError;

/// A rendered command result: the JSON document and a flat table.
pub struct Output {
    pub json: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// `x` with 17 significant digits; empty for a missing value.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

impl Output {
    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("report is serializable");
                s.push('\n');
                Ok(s.into_bytes())
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Input(format!("csv: {e}"));
                w.write_record(&self.header).map_err(io)?;
                for row in &self.rows {
                    w.write_record(row).map_err(io)?;
                }
                w.into_inner().map_err(|e| CliError::Input(format!("csv: {e}")))
            }
        }
    }

    /// Writes to `out`, or stdout when absent.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<(), CliError> {
        let bytes = self.render(format)?;
        match out {
            Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
            None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::Input(format!("stdout: {e}"))),
        }
    }
}
