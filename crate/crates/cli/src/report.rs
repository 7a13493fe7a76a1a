//! Tabular reports written as JSON and CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use htq_core::CheckRow;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    /// Diagnostic value without a pass/fail gate.
    Info,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Info => "INFO",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub id: String,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub estimate: f64,
    pub target: Option<f64>,
    pub std_error: Option<f64>,
    pub z: Option<f64>,
    pub tol: Option<f64>,
    pub status: Status,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Row {
    pub fn from_check(c: &CheckRow, eps: Option<f64>, seed: Option<u64>) -> Self {
        Self {
            id: c.id.clone(),
            eps,
            seed,
            estimate: c.estimate,
            target: Some(c.target),
            std_error: (c.std_error > 0.0).then_some(c.std_error),
            z: finite(c.z),
            tol: Some(c.tol),
            status: if c.pass { Status::Pass } else { Status::Fail },
        }
    }

    pub fn info(
        id: impl Into<String>,
        eps: f64,
        seed: Option<u64>,
        estimate: f64,
        se: Option<f64>,
    ) -> Self {
        Self {
            id: id.into(),
            eps: Some(eps),
            seed,
            estimate,
            target: None,
            std_error: se,
            z: None,
            tol: None,
            status: Status::Info,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnsembleRef {
    pub eps: f64,
    pub seed: u64,
    pub n_samples: usize,
    pub hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub system: String,
    pub ensembles: Vec<EnsembleRef>,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.status == Status::Fail)
            .count()
    }

    /// Writes `<stem>.json` and `<stem>.csv`. The CSV carries the ensemble
    /// hashes in a leading comment line.
    pub fn write(&self, dir: &Path, stem: &str) -> anyhow::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json = dir.join(format!("{stem}.json"));
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut f = BufWriter::new(File::create(&json)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        f.flush()?;

        let mut f = BufWriter::new(File::create(&csv_path)?);
        let hashes: Vec<String> = self
            .ensembles
            .iter()
            .map(|e| format!("eps={}:seed={}:{}", e.eps, e.seed, e.hash))
            .collect();
        writeln!(f, "# ensembles {}", hashes.join(" "))?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record([
            "id",
            "eps",
            "seed",
            "estimate",
            "target",
            "std_error",
            "z",
            "tol",
            "status",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.id.clone(),
                opt(r.eps),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                r.estimate.to_string(),
                opt(r.target),
                opt(r.std_error),
                opt(r.z),
                opt(r.tol),
                r.status.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok((json, csv_path))
    }

    /// Fixed-width table for the terminal.
    pub fn print(&self) {
        println!(
            "{:<44} {:>6} {:>5} {:>12} {:>12} {:>10} {:>8}  status",
            "id", "eps", "seed", "estimate", "target", "std_err", "z"
        );
        for r in &self.rows {
            println!(
                "{:<44} {:>6} {:>5} {:>12.6} {:>12} {:>10} {:>8}  {}",
                r.id,
                r.eps.map(|e| e.to_string()).unwrap_or_default(),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                r.estimate,
                r.target.map(|t| format!("{t:.6}")).unwrap_or_default(),
                r.std_error.map(|t| format!("{t:.2e}")).unwrap_or_default(),
                r.z.map(|t| format!("{t:+.2}")).unwrap_or_default(),
                r.status.as_str()
            );
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
