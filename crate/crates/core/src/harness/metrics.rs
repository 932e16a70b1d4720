use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sim::{AssociationState, DelayReport, Mode};

pub const CSV_HEADER: &str = "iteration,seed,algorithm,total_delay_s,edge_delay_s,cloud_delay_s,hit_ratio,jt_fraction,mean_reward";

/// One line of the per-iteration metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    pub seed: u64,
    pub algorithm: String,
    pub total_delay_s: f64,
    pub edge_delay_s: f64,
    pub cloud_delay_s: f64,
    pub hit_ratio: f64,
    pub jt_fraction: f64,
    pub mean_reward: f64,
}

impl MetricsRow {
    pub fn from_report(
        iteration: usize,
        seed: u64,
        algorithm: &str,
        report: &DelayReport,
        assoc: &AssociationState,
        mean_reward: f64,
    ) -> Self {
        Self {
            iteration,
            seed,
            algorithm: algorithm.to_string(),
            total_delay_s: report.total,
            edge_delay_s: report.edge_delay,
            cloud_delay_s: report.cloud_delay,
            hit_ratio: report.hit_ratio(),
            jt_fraction: jt_fraction(assoc),
            mean_reward,
        }
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.seed,
            self.algorithm,
            self.total_delay_s,
            self.edge_delay_s,
            self.cloud_delay_s,
            self.hit_ratio,
            self.jt_fraction,
            self.mean_reward
        )
    }
}

/// Share of edge-served users that are served jointly.
pub fn jt_fraction(assoc: &AssociationState) -> f64 {
    let served = assoc.modes().iter().filter(|&&m| m != Mode::Cloud).count();
    if served == 0 {
        return 0.0;
    }
    let joint = assoc.modes().iter().filter(|&&m| m == Mode::Joint).count();
    joint as f64 / served as f64
}

/// Append-only CSV sink flushed after every row.
pub struct MetricsWriter {
    out: BufWriter<File>,
}

impl MetricsWriter {
    /// Truncates `path` and writes the header.
    pub fn create(path: &Path) -> std::io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{CSV_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    /// Opens `path` for appending, writing the header only if it is empty.
    pub fn append(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let empty = file.metadata()?.len() == 0;
        let mut out = BufWriter::new(file);
        if empty {
            writeln!(out, "{CSV_HEADER}")?;
            out.flush()?;
        }
        Ok(Self { out })
    }

    pub fn write(&mut self, row: &MetricsRow) -> std::io::Result<()> {
        writeln!(self.out, "{}", row.csv_line())?;
        self.out.flush()
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, csv::Error> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().collect()
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> std::io::Result<()> {
    let mut w = MetricsWriter::create(path)?;
    for r in rows {
        w.write(r)?;
    }
    Ok(())
}
