//! Moments of the perpendicular component of `q`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{StationaryEnsemble, SystemKind};
use crate::error::{Error, Result};
use crate::geometry::{norm, threeq_perp, BMatrix, ConeProjector, SubspaceProjector};
use crate::stats::{batch_means, MeanSe, DEFAULT_BATCHES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerpKind {
    Subspace,
    /// The cone `K` for the switch, `(q2 - q1)⁺` for the N-system.
    Cone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub kind: PerpKind,
    pub order: u32,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SscReport {
    pub system: SystemKind,
    pub eps: f64,
    pub rows: Vec<MomentRow>,
    /// `E‖q‖²`, for contrast.
    pub mean_sq_norm: MeanSe,
    pub ensemble_hash: String,
}

impl SscReport {
    pub fn moment(&self, kind: PerpKind, order: u32) -> Option<&MomentRow> {
        self.rows
            .iter()
            .find(|r| r.kind == kind && r.order == order)
    }

    /// The collapse notion used for boundedness checks: cone for the switch
    /// and N-system, subspace for the three-queue system.
    pub fn primary_kind(&self) -> PerpKind {
        match self.system {
            SystemKind::ThreeQueue => PerpKind::Subspace,
            _ => PerpKind::Cone,
        }
    }
}

pub const ORDERS: [u32; 3] = [1, 2, 4];

/// `E‖q_⊥‖^r` for `r ∈ {1, 2, 4}` under each available notion of collapse.
pub fn ssc_report(ens: &StationaryEnsemble) -> Result<SscReport> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut norms: Vec<(PerpKind, Vec<f64>)> = Vec::new();
    match ens.system() {
        SystemKind::Switch { n } => {
            let sub = SubspaceProjector::new(&BMatrix::switch(n)?);
            let cone = ConeProjector::new(n)?;
            let mut distinct: HashMap<&[u32], (f64, f64)> = HashMap::new();
            for (q, _) in ens.rows() {
                distinct.entry(q).or_insert((0.0, 0.0));
            }
            let keys: Vec<&[u32]> = distinct.keys().copied().collect();
            let vals = keys
                .par_iter()
                .map(|q| {
                    let x: Vec<f64> = q.iter().map(|&v| v as f64).collect();
                    let s = sub.project(&x)?.perp_norm();
                    let c = cone.project(&x)?.0.perp_norm();
                    Ok((s, c))
                })
                .collect::<Result<Vec<_>>>()?;
            for (k, v) in keys.into_iter().zip(vals) {
                distinct.insert(k, v);
            }
            let (s, c): (Vec<f64>, Vec<f64>) = ens.rows().map(|(q, _)| distinct[q]).unzip();
            norms.push((PerpKind::Subspace, s));
            norms.push((PerpKind::Cone, c));
        }
        SystemKind::ThreeQueue => {
            let s = ens
                .rows()
                .map(|(q, _)| norm(&threeq_perp([q[0] as f64, q[1] as f64, q[2] as f64])))
                .collect();
            norms.push((PerpKind::Subspace, s));
        }
        SystemKind::NSystem => {
            let c = ens
                .rows()
                .map(|(q, _)| (q[1] as f64 - q[0] as f64).max(0.0))
                .collect();
            norms.push((PerpKind::Cone, c));
        }
    }
    let mut rows = Vec::new();
    for (kind, xs) in &norms {
        for order in ORDERS {
            let p: Vec<f64> = xs.iter().map(|x| x.powi(order as i32)).collect();
            let m = batch_means(&p, DEFAULT_BATCHES);
            rows.push(MomentRow {
                kind: *kind,
                order,
                value: m.mean,
                std_error: m.se,
            });
        }
    }
    let sq: Vec<f64> = ens
        .rows()
        .map(|(q, _)| q.iter().map(|&v| (v as f64).powi(2)).sum())
        .collect();
    Ok(SscReport {
        system: ens.system(),
        eps: ens.meta.eps,
        rows,
        mean_sq_norm: batch_means(&sq, DEFAULT_BATCHES),
        ensemble_hash: ens.meta.hash(),
    })
}
