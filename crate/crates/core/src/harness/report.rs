use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::phase::PhaseReport;
use crate::error::{CsError, Result};
use crate::filter::{FilterDistribution, RandomFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = CsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(CsError::Config(format!("unknown report format '{other}'"))),
        }
    }
}

pub fn write_report<W: Write>(report: &PhaseReport, format: ReportFormat, out: W) -> Result<()> {
    if report.cells.is_empty() {
        return Err(CsError::Config("report has no cells".into()));
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(out);
            for c in &report.cells {
                w.serialize(c)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn emit_report(report: &PhaseReport, format: ReportFormat, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_report(report, format, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json_report(path: &Path) -> Result<PhaseReport> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDump {
    pub n: usize,
    pub distribution: FilterDistribution,
    pub seed: u64,
    pub taps: Vec<f64>,
}

impl From<&RandomFilter> for FilterDump {
    fn from(f: &RandomFilter) -> Self {
        Self {
            n: f.n(),
            distribution: f.distribution(),
            seed: f.seed(),
            taps: f.taps().to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{CellSummary, ExperimentConfig};

    fn one_cell() -> PhaseReport {
        PhaseReport {
            config: ExperimentConfig::default(),
            cells: vec![CellSummary {
                sparsity: 1,
                m: 8,
                trials: 1,
                successes: 1,
                success_rate: 1.0,
                cert_rate: 1.0,
                mean_iterations: 12.0,
                gate_m: 0.1 + 0.2,
                root_seed: 7,
            }],
            cubic_gate: 1.0,
        }
    }

    #[test]
    fn csv_schema() {
        let mut buf = Vec::new();
        write_report(&one_cell(), ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "S,m,trials,successes,success_rate,cert_rate,mean_iterations,gate_m,root_seed");
        assert!(lines[1].starts_with("1,8,1,1,1.0,"));
        assert_eq!(lines[1].split(',').count(), 9);
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        emit_report(&one_cell(), ReportFormat::Json, &path).unwrap();
        assert_eq!(read_json_report(&path).unwrap(), one_cell());
    }

    #[test]
    fn empty_and_unwritable() {
        let mut r = one_cell();
        r.cells.clear();
        assert!(matches!(write_report(&r, ReportFormat::Csv, Vec::new()), Err(CsError::Config(_))));
        let e = emit_report(&one_cell(), ReportFormat::Csv, Path::new("/nonexistent/dir/out.csv"));
        assert!(matches!(e, Err(CsError::Io(_))));
    }
}
