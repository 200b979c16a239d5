//! Per-episode metrics rows and their CSV persistence.
//!
//! Float columns use Rust's shortest round-trip formatting, so a metrics file
//! is a pure function of the run's inputs.

use super::HarnessError;
use crate::env::{LandingZone, Termination};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const METRICS_HEADER: &str = "episode,return,steps,termination,zone,wall_ms,avg50";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based episode index.
    pub episode: u32,
    pub ret: f64,
    pub steps: u32,
    pub termination: Termination,
    pub zone: Option<LandingZone>,
    /// Episode duration in simulated milliseconds (steps x dt).
    pub wall_ms: u64,
    /// Mean return over the trailing window (50), shorter at the start.
    pub avg50: f64,
}

impl EpisodeRecord {
    fn to_csv_line(&self) -> String {
        let zone = match self.zone {
            Some(z) => z.to_string(),
            None => "none".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.episode, self.ret, self.steps, self.termination, zone, self.wall_ms, self.avg50
        )
    }
}

/// Append-oriented CSV writer; one flush per record keeps completed episodes
/// on disk even if the run aborts.
pub struct MetricsWriter {
    out: BufWriter<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self, HarnessError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{METRICS_HEADER}")?;
        Ok(Self { out })
    }

    pub fn write(&mut self, record: &EpisodeRecord) -> Result<(), HarnessError> {
        writeln!(self.out, "{}", record.to_csv_line())?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpisodeRecord>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == METRICS_HEADER => {}
        Some(other) => {
            return Err(HarnessError::Metrics(format!(
                "unexpected header '{other}'"
            )))
        }
        None => return Err(HarnessError::Metrics("empty file".into())),
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        records
            .push(parse_line(line).map_err(|e| {
                HarnessError::Metrics(format!("line {}: {e} in '{line}'", idx + 2))
            })?);
    }
    Ok(records)
}

fn parse_line(line: &str) -> Result<EpisodeRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 7 {
        return Err(format!("expected 7 fields, got {}", fields.len()));
    }
    let termination = match fields[3] {
        "running" => Termination::Running,
        "landed" => Termination::Landed,
        "time_out" => Termination::TimeOut,
        "out_of_range" => Termination::OutOfRange,
        other => return Err(format!("unknown termination '{other}'")),
    };
    let zone = match fields[4] {
        "none" => None,
        "red" => Some(LandingZone::Red),
        "green" => Some(LandingZone::Green),
        "off" => Some(LandingZone::Off),
        other => return Err(format!("unknown zone '{other}'")),
    };
    Ok(EpisodeRecord {
        episode: fields[0].parse().map_err(|_| "bad episode".to_string())?,
        ret: fields[1].parse().map_err(|_| "bad return".to_string())?,
        steps: fields[2].parse().map_err(|_| "bad steps".to_string())?,
        termination,
        zone,
        wall_ms: fields[5].parse().map_err(|_| "bad wall_ms".to_string())?,
        avg50: fields[6].parse().map_err(|_| "bad avg50".to_string())?,
    })
}

/// Trailing mean over up to `window` values: entry `k` averages
/// `values[k + 1 - min(window, k + 1) ..= k]`. Sums each window directly so
/// the result is the exact windowed mean, not a drifting rolling sum.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0);
    (0..values.len())
        .map(|k| {
            let lo = (k + 1).saturating_sub(window);
            values[lo..=k].iter().sum::<f64>() / (k - lo + 1) as f64
        })
        .collect()
}
