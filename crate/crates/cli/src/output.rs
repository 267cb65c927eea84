use std::io::Write;
use std::path::PathBuf;

use anholkit::report::{num_text, CheckResult};
use anholkit::{Error, Result};
use serde_json::Value;

/// Destination of a command's result: a file or stdout.
pub struct Sink {
    path: Option<PathBuf>,
}

impl Sink {
    pub fn new(path: Option<PathBuf>) -> Sink {
        Sink { path }
    }

    pub fn text(&self, text: &str) -> Result<()> {
        let io = |e: std::io::Error| Error::Scenario(format!("cannot write output: {e}"));
        match &self.path {
            Some(p) => std::fs::write(p, text).map_err(io),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(io)
            }
        }
    }

    pub fn json(&self, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Scenario(e.to_string()))?;
        text.push('\n');
        self.text(&text)
    }
}

pub fn table_csv(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let err = |e: csv::Error| Error::Scenario(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Scenario(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Scenario(e.to_string()))
}

pub fn checks_csv(checks: &[CheckResult]) -> Result<String> {
    let header = ["check", "max_residual", "mean_residual", "tolerance", "samples", "pass"].map(String::from);
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                num_text(c.max_residual),
                num_text(c.mean_residual),
                num_text(c.tolerance),
                c.samples.to_string(),
                c.pass.to_string(),
            ]
        })
        .collect();
    table_csv(&header, &rows)
}
