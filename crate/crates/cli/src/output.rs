use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

pub const TOOL: &str = "capcover";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// One self-describing output record.
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord<T> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub params: ExperimentConfig,
    pub seed: Option<u64>,
    pub wall_clock_seconds: Option<f64>,
    pub result: T,
}

impl<T> RunRecord<T> {
    pub fn new(command: &'static str, params: ExperimentConfig, seed: Option<u64>, elapsed: Option<Duration>, result: T) -> Self {
        RunRecord {
            tool: TOOL,
            version: VERSION,
            command,
            params,
            seed,
            wall_clock_seconds: elapsed.map(|e| e.as_secs_f64()),
            result,
        }
    }
}

pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// CSV with one line per record: provenance columns, then the flattened
/// result fields, then the wall-clock time.
pub fn write_csv<T: Serialize>(out: Option<&Path>, records: &[RunRecord<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for (i, r) in records.iter().enumerate() {
        let Value::Object(row) = serde_json::to_value(&r.result)? else {
            bail!("result is not a flat record");
        };
        if i == 0 {
            let mut header = vec!["tool", "version", "command", "seed"];
            header.extend(row.keys().map(String::as_str));
            header.push("wallClockSeconds");
            w.write_record(&header)?;
        }
        let mut fields = vec![
            r.tool.to_string(),
            r.version.to_string(),
            r.command.to_string(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
        ];
        fields.extend(row.values().map(cell));
        fields.push(r.wall_clock_seconds.map(|s| s.to_string()).unwrap_or_default());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `x` with `digits` significant digits, or `-` when absent.
pub fn num(x: Option<f64>, digits: usize) -> String {
    match x {
        None => "-".into(),
        Some(v) if v.is_infinite() => if v > 0.0 { "inf" } else { "-inf" }.into(),
        Some(v) if v == 0.0 => format!("{v:.prec$}", prec = digits.saturating_sub(1)),
        Some(v) if (1e-4..1e6).contains(&v.abs()) => {
            let decimals = (digits as i32 - 1 - v.abs().log10().floor() as i32).max(0) as usize;
            format!("{v:.decimals$}")
        }
        Some(v) => format!("{v:.prec$e}", prec = digits.saturating_sub(1)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_cells() {
        assert_eq!(num(None, 4), "-");
        assert_eq!(num(Some(0.5), 4), "0.5000");
        assert_eq!(num(Some(0.006), 2), "0.0060");
        assert_eq!(num(Some(1234.5678), 6), "1234.57");
        assert_eq!(num(Some(1e-9), 3), "1.00e-9");
        assert_eq!(num(Some(f64::INFINITY), 3), "inf");
    }
}
