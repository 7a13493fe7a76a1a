//! Exact finite-ε steady-state identities, as pass/fail rows.

use serde::{Deserialize, Serialize};

use crate::ensemble::{StationaryEnsemble, SystemKind};
use crate::error::{Error, Result};
use crate::stats::{batch_means, DEFAULT_BATCHES};

/// Allowed deviation in standard errors.
pub const Z_TOL: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub id: String,
    pub estimate: f64,
    pub target: f64,
    pub std_error: f64,
    pub z: f64,
    /// Largest accepted `|z|`, or for exact comparisons the absolute tolerance.
    pub tol: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn z_test(id: impl Into<String>, estimate: f64, target: f64, se: f64) -> Self {
        let diff = estimate - target;
        let z = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY * diff.signum()
        };
        Self {
            id: id.into(),
            estimate,
            target,
            std_error: se,
            z,
            tol: Z_TOL,
            pass: z.abs() <= Z_TOL,
        }
    }

    pub fn absolute(id: impl Into<String>, estimate: f64, target: f64, tol: f64) -> Self {
        Self {
            id: id.into(),
            estimate,
            target,
            std_error: 0.0,
            z: f64::NAN,
            tol,
            pass: (estimate - target).abs() <= tol,
        }
    }
}

fn mean_row(
    ens: &StationaryEnsemble,
    id: String,
    target: f64,
    f: impl Fn(&[u32], &[u8]) -> f64,
) -> CheckRow {
    let xs: Vec<f64> = ens.rows().map(|(q, a)| f(q, a)).collect();
    let m = batch_means(&xs, DEFAULT_BATCHES);
    CheckRow::z_test(id, m.mean, target, m.se)
}

/// `E[Σ_j u_{i,j}] = ε` for every input `i` and `E[Σ_i u_{i,j}] = ε` for every output `j`.
pub fn switch_identity_checks(ens: &StationaryEnsemble) -> Result<Vec<CheckRow>> {
    let SystemKind::Switch { n } = ens.system() else {
        return Err(Error::SystemMismatch("expected a switch ensemble".into()));
    };
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let eps = ens.meta.eps;
    let mut rows = Vec::with_capacity(2 * n);
    for i in 0..n {
        rows.push(mean_row(
            ens,
            format!("switch-unused-service-input-{}", i + 1),
            eps,
            |_, u| (0..n).map(|j| u[i + n * j] as f64).sum(),
        ));
    }
    for j in 0..n {
        rows.push(mean_row(
            ens,
            format!("switch-unused-service-output-{}", j + 1),
            eps,
            |_, u| (0..n).map(|i| u[i + n * j] as f64).sum(),
        ));
    }
    Ok(rows)
}

/// `E[u2] = E[u3] = ε` and `u1 ≡ 0`.
pub fn threeq_identity_checks(ens: &StationaryEnsemble) -> Result<Vec<CheckRow>> {
    if ens.system() != SystemKind::ThreeQueue {
        return Err(Error::SystemMismatch(
            "expected a three-queue ensemble".into(),
        ));
    }
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let eps = ens.meta.eps;
    let u1_total: f64 = ens.rows().map(|(_, u)| u[0] as f64).sum();
    Ok(vec![
        CheckRow::absolute("threeq-unused-service-q1-zero", u1_total, 0.0, 0.0),
        mean_row(ens, "threeq-unused-service-q2".into(), eps, |_, u| {
            u[1] as f64
        }),
        mean_row(ens, "threeq-unused-service-q3".into(), eps, |_, u| {
            u[2] as f64
        }),
    ])
}

/// `P(q1 <= q2) = 1 - λ1/μ1` and `μ2 P(q2 = 0) + μ1 P(q1 = q2 = 0) = μ1 + μ2 - λ1 - λ2`.
/// On the corner trajectory the targets are `ε` and `γε(μ1 + μ2)`.
pub fn nsys_identity_checks(ens: &StationaryEnsemble) -> Result<Vec<CheckRow>> {
    if ens.system() != SystemKind::NSystem {
        return Err(Error::SystemMismatch(
            "expected an N-system ensemble".into(),
        ));
    }
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mu = ens
        .meta
        .mu
        .ok_or_else(|| Error::Format("N-system metadata without μ".into()))?;
    let lam = &ens.meta.rates;
    let mut rows = vec![
        mean_row(
            ens,
            "nsys-P(q1<=q2)".into(),
            1.0 - lam[0] / mu[0],
            |_, a| a[0] as f64,
        ),
        mean_row(
            ens,
            "nsys-boundary-identity".into(),
            mu[0] + mu[1] - lam[0] - lam[1],
            |_, a| mu[1] * a[1] as f64 + mu[0] * a[2] as f64,
        ),
    ];
    if let Some(gamma) = ens.meta.gamma {
        // Same identity written in heavy-traffic form.
        let eps = ens.meta.eps;
        rows.push(mean_row(
            ens,
            "nsys-boundary-identity-gamma-eps".into(),
            gamma * eps * (mu[0] + mu[1]),
            |_, a| mu[1] * a[1] as f64 + mu[0] * a[2] as f64,
        ));
    }
    Ok(rows)
}

pub fn identity_checks(ens: &StationaryEnsemble) -> Result<Vec<CheckRow>> {
    match ens.system() {
        SystemKind::Switch { .. } => switch_identity_checks(ens),
        SystemKind::ThreeQueue => threeq_identity_checks(ens),
        SystemKind::NSystem => nsys_identity_checks(ens),
    }
}

/// `P(q1 = q2 = 0)/ε` must fall as `ε` falls. Ensembles may come in any
/// order; they are sorted by decreasing `ε`.
pub fn boundary_trend(ensembles: &[&StationaryEnsemble]) -> Result<CheckRow> {
    let mut pts = Vec::with_capacity(ensembles.len());
    for e in ensembles {
        if e.system() != SystemKind::NSystem {
            return Err(Error::SystemMismatch("expected N-system ensembles".into()));
        }
        let xs: Vec<f64> = e.rows().map(|(_, a)| a[2] as f64).collect();
        pts.push((
            e.meta.eps,
            batch_means(&xs, DEFAULT_BATCHES).mean / e.meta.eps,
        ));
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let decreasing = pts.windows(2).all(|w| w[1].1 < w[0].1);
    let last = pts.last().map_or(f64::NAN, |p| p.1);
    let first = pts.first().map_or(f64::NAN, |p| p.1);
    Ok(CheckRow {
        id: "nsys-P(q1=q2=0)/eps-decreasing".into(),
        estimate: last,
        target: first,
        std_error: 0.0,
        z: f64::NAN,
        tol: 0.0,
        pass: decreasing && pts.len() >= 2,
    })
}
