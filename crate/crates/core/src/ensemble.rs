//! Thinned stationary samples and their on-disk form.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stochastics::{ArrivalKind, Boundary, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    Switch { n: usize },
    ThreeQueue,
    NSystem,
}

impl SystemKind {
    /// Length of the queue vector.
    pub fn width(&self) -> usize {
        match *self {
            Self::Switch { n } => n * n,
            Self::ThreeQueue => 3,
            Self::NSystem => 2,
        }
    }

    /// Per-sample auxiliary columns: unused service for the discrete systems,
    /// three boundary indicators for the N-system.
    pub fn aux_width(&self) -> usize {
        match *self {
            Self::NSystem => 3,
            other => other.width(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub system: SystemKind,
    pub eps: f64,
    pub nu: Vec<f64>,
    pub rates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<ArrivalKind>,
    /// Streams of the replicas, in merge order.
    pub streams: Vec<RngStream>,
    pub burn_in: u64,
    pub thin: u64,
    pub n_samples: usize,
}

impl EnsembleMeta {
    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("metadata serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Boundary indicators recorded with each N-system sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Indicators {
    pub q1_le_q2: bool,
    pub q2_eq0: bool,
    pub both_eq0: bool,
}

impl Indicators {
    pub fn of(q1: u32, q2: u32) -> Self {
        Self {
            q1_le_q2: q1 <= q2,
            q2_eq0: q2 == 0,
            both_eq0: q1 == 0 && q2 == 0,
        }
    }
}

/// Samples stored row-major in flat buffers. Row `k` holds the queue vector
/// observed at `slots[k]` together with the unused service of that slot's
/// transition (discrete systems) or the boundary indicators (N-system).
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryEnsemble {
    pub meta: EnsembleMeta,
    q: Vec<u32>,
    aux: Vec<u8>,
    slots: Vec<u64>,
}

impl StationaryEnsemble {
    pub fn new(meta: EnsembleMeta) -> Self {
        let cap = meta.n_samples;
        let w = meta.system.width();
        let aw = meta.system.aux_width();
        Self {
            meta,
            q: Vec::with_capacity(cap * w),
            aux: Vec::with_capacity(cap * aw),
            slots: Vec::with_capacity(cap),
        }
    }

    pub fn system(&self) -> SystemKind {
        self.meta.system
    }

    pub fn width(&self) -> usize {
        self.meta.system.width()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn push(&mut self, slot: u64, q: &[u32], aux: &[u8]) {
        debug_assert_eq!(q.len(), self.width());
        debug_assert_eq!(aux.len(), self.meta.system.aux_width());
        self.slots.push(slot);
        self.q.extend_from_slice(q);
        self.aux.extend_from_slice(aux);
    }

    pub fn push_nsys(&mut self, step: u64, q: [u32; 2]) {
        let ind = Indicators::of(q[0], q[1]);
        self.push(
            step,
            &q,
            &[ind.q1_le_q2 as u8, ind.q2_eq0 as u8, ind.both_eq0 as u8],
        );
    }

    pub fn q(&self, k: usize) -> &[u32] {
        let w = self.width();
        &self.q[k * w..(k + 1) * w]
    }

    /// Unused service of sample `k`; for the N-system these are the indicator
    /// bits in the order `q1<=q2, q2==0, q1==q2==0`.
    pub fn aux(&self, k: usize) -> &[u8] {
        let w = self.meta.system.aux_width();
        &self.aux[k * w..(k + 1) * w]
    }

    pub fn u(&self, k: usize) -> Result<&[u8]> {
        match self.meta.system {
            SystemKind::NSystem => Err(Error::SystemMismatch(
                "the N-system ensemble records indicators, not unused service".into(),
            )),
            _ => Ok(self.aux(k)),
        }
    }

    pub fn indicators(&self, k: usize) -> Result<Indicators> {
        match self.meta.system {
            SystemKind::NSystem => {
                let a = self.aux(k);
                Ok(Indicators {
                    q1_le_q2: a[0] != 0,
                    q2_eq0: a[1] != 0,
                    both_eq0: a[2] != 0,
                })
            }
            _ => Err(Error::SystemMismatch(
                "boundary indicators exist only for the N-system".into(),
            )),
        }
    }

    pub fn slot(&self, k: usize) -> u64 {
        self.slots[k]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[u32], &[u8])> + '_ {
        (0..self.len()).map(move |k| (self.q(k), self.aux(k)))
    }

    /// Column `i` of `q` as floats, scaled by `scale`.
    pub fn q_column(&self, i: usize, scale: f64) -> Vec<f64> {
        let w = self.width();
        self.q[i..]
            .iter()
            .step_by(w)
            .map(|&v| v as f64 * scale)
            .collect()
    }

    /// Concatenates replicas in the given order. All parts must share every
    /// metadata field except the stream list and sample counts.
    pub fn merge(parts: Vec<StationaryEnsemble>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let mut out = iter.next().ok_or(Error::EmptyEnsemble)?;
        for part in iter {
            let mut a = out.meta.clone();
            let mut b = part.meta.clone();
            a.streams.clear();
            b.streams.clear();
            a.n_samples = 0;
            b.n_samples = 0;
            if a != b {
                return Err(Error::SystemMismatch(
                    "cannot merge ensembles with different parameters".into(),
                ));
            }
            out.meta.streams.extend(part.meta.streams);
            out.q.extend(part.q);
            out.aux.extend(part.aux);
            out.slots.extend(part.slots);
        }
        out.meta.n_samples = out.len();
        Ok(out)
    }

    fn header(&self) -> Vec<String> {
        let w = self.width();
        match self.meta.system {
            SystemKind::NSystem => [
                "step",
                "q1",
                "q2",
                "ind_q1le_q2",
                "ind_q2eq0",
                "ind_botheq0",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            _ => std::iter::once("slot".to_string())
                .chain((1..=w).map(|k| format!("q_{k}")))
                .chain((1..=w).map(|k| format!("u_{k}")))
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(self.header())?;
        let mut row: Vec<String> = Vec::new();
        for k in 0..self.len() {
            row.clear();
            row.push(self.slots[k].to_string());
            row.extend(self.q(k).iter().map(u32::to_string));
            row.extend(self.aux(k).iter().map(u8::to_string));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and the `<stem>.json` metadata sidecar into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        self.write_csv(BufWriter::new(File::create(&csv_path)?))?;
        let mut f = BufWriter::new(File::create(&json_path)?);
        serde_json::to_writer_pretty(&mut f, &self.meta)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok((csv_path, json_path))
    }

    /// Reads a CSV written by [`save`](Self::save) together with its sidecar.
    pub fn load(csv_path: &Path) -> Result<Self> {
        let json_path = csv_path.with_extension("json");
        let meta: EnsembleMeta = serde_json::from_reader(BufReader::new(File::open(&json_path)?))?;
        let mut ens = Self::new(meta);
        let expected = ens.header();
        let mut rdr = csv::Reader::from_reader(BufReader::new(File::open(csv_path)?));
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != expected {
            return Err(Error::Format(format!(
                "header {header:?} does not match the metadata system"
            )));
        }
        let w = ens.width();
        let mut q = vec![0u32; w];
        let mut aux = vec![0u8; ens.meta.system.aux_width()];
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<u64> {
                rec.get(i)
                    .ok_or_else(|| Error::Format("short row".into()))?
                    .parse::<u64>()
                    .map_err(|e| Error::Format(format!("column {i}: {e}")))
            };
            let slot = parse(0)?;
            for (i, v) in q.iter_mut().enumerate() {
                *v = u32::try_from(parse(1 + i)?).map_err(|e| Error::Format(e.to_string()))?;
            }
            for (i, v) in aux.iter_mut().enumerate() {
                let x = parse(1 + w + i)?;
                if x > 1 {
                    return Err(Error::Format(format!("flag column holds {x}")));
                }
                *v = x as u8;
            }
            ens.push(slot, &q, &aux);
        }
        if ens.len() != ens.meta.n_samples {
            return Err(Error::Format(format!(
                "metadata promises {} rows, file has {}",
                ens.meta.n_samples,
                ens.len()
            )));
        }
        Ok(ens)
    }
}
