use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of an ε-sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub mm_value: f64,
    pub dirichlet: f64,
    pub potential: f64,
    pub willmore: f64,
    /// Length of the `u = 1/2` level curve.
    pub jump_length: f64,
    /// `2k·jump_length`.
    pub sharp_line_energy: f64,
    /// `mm_value / sharp_line_energy`, or 0 without a level curve.
    pub ratio: f64,
    pub iterations: usize,
    /// Zero in deterministic mode.
    pub wallclock_seconds: f64,
}

impl SweepRecord {
    pub const COLUMNS: [&'static str; 10] = [
        "eps",
        "mm_value",
        "dirichlet",
        "potential",
        "willmore",
        "jump_length",
        "sharp_line_energy",
        "ratio",
        "iterations",
        "wallclock_seconds",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Unsupported(format!("report format `{s}`"))),
        }
    }
}

pub fn write_report(records: &[SweepRecord], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let file = BufWriter::new(File::create(path.as_ref())?);
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
            w.write_record(SweepRecord::COLUMNS)?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => write_json(records, file)?,
    }
    Ok(())
}

pub fn read_report(format: ReportFormat, path: impl AsRef<Path>) -> Result<Vec<SweepRecord>> {
    let path = path.as_ref();
    match format {
        ReportFormat::Csv => {
            let mut r = csv::Reader::from_path(path)?;
            Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
        }
        ReportFormat::Json => Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?),
    }
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, mut w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json_file<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_json(value, BufWriter::new(File::create(path.as_ref())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(eps: f64) -> SweepRecord {
        SweepRecord {
            eps,
            mm_value: 0.34,
            dirichlet: 0.17,
            potential: 0.17,
            willmore: 0.0,
            jump_length: 1.0,
            sharp_line_energy: 1.0 / 3.0,
            ratio: 1.02,
            iterations: 12,
            wallclock_seconds: 0.0,
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_report(&[], ReportFormat::Csv, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", SweepRecord::COLUMNS.join(",")));
    }

    #[test]
    fn one_record_is_two_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_report(&[record(0.1)], ReportFormat::Csv, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("0.1,0.34,"));
        assert_eq!(read_report(ReportFormat::Csv, &path).unwrap(), vec![record(0.1)]);
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let records = vec![record(0.2), record(0.1)];
        write_report(&records, ReportFormat::Json, &path).unwrap();
        assert_eq!(read_report(ReportFormat::Json, &path).unwrap(), records);
        let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let keys: Vec<&String> = value[0].as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 10);
    }

    #[test]
    fn format_names() {
        assert_eq!("CSV".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
