//! State-space-collapse geometry.
//!
//! The switch collapses onto the subspace `S = {B w}` and, more tightly, onto
//! the cone `K = {B r : r >= 0}`; the three-queue system onto `S = {y1 = y2 + y3}`;
//! the N-system onto one of three planar cones depending on which face of the
//! capacity boundary the load approaches.
//!
//! Queue vectors of the switch are indexed column-major: queue `(i, j)` (input
//! `i`, output `j`, both zero based) lives at `i + n * j`.

mod nnls;

pub use nnls::{nnls, NnlsOptions};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BKind {
    Switch { n: usize },
    ThreeQueue,
}

/// The 0/1 incidence matrix `B` whose column space is the collapse subspace.
#[derive(Clone, Debug)]
pub struct BMatrix {
    kind: BKind,
    mat: DMatrix<f64>,
}

impl BMatrix {
    pub fn switch(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "port count must be at least 1"));
        }
        let mut mat = DMatrix::zeros(n * n, 2 * n);
        for j in 0..n {
            for i in 0..n {
                let k = i + n * j;
                mat[(k, i)] = 1.0;
                mat[(k, n + j)] = 1.0;
            }
        }
        Ok(Self {
            kind: BKind::Switch { n },
            mat,
        })
    }

    pub fn three_queue() -> Self {
        let mat = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        Self {
            kind: BKind::ThreeQueue,
            mat,
        }
    }

    pub fn kind(&self) -> BKind {
        self.kind
    }

    /// Length of the queue vector.
    pub fn rows(&self) -> usize {
        self.mat.nrows()
    }

    /// Length of the low-dimensional representation.
    pub fn cols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// `D = BᵀB`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.mat.transpose() * &self.mat
    }

    pub fn apply(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_len(w.len(), self.cols())?;
        let w = DVector::from_column_slice(w);
        Ok((&self.mat * w).as_slice().to_vec())
    }

    pub fn transpose_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x.len(), self.rows())?;
        let x = DVector::from_column_slice(x);
        Ok((self.mat.transpose() * x).as_slice().to_vec())
    }

    /// `θ = Bφ` for a complex low-dimensional frequency.
    pub fn lift(&self, phi: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(phi.len(), self.cols())?;
        Ok((0..self.rows())
            .map(|k| {
                (0..self.cols())
                    .filter(|&c| self.mat[(k, c)] != 0.0)
                    .map(|c| phi[c])
                    .sum()
            })
            .collect())
    }

    /// `Dφ`, i.e. the vector of `⟨d_i, φ⟩` over the columns of `D`.
    pub fn gram_apply(&self, phi: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(phi.len(), self.cols())?;
        let d = self.gram();
        Ok((0..self.cols())
            .map(|i| (0..self.cols()).map(|c| phi[c] * d[(i, c)]).sum())
            .collect())
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionTarget {
    SubspaceS,
    ConeK,
    ConeK1,
    ConeK2,
    ConeK3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub x_par: Vec<f64>,
    pub x_perp: Vec<f64>,
    pub target: ProjectionTarget,
}

impl Decomposition {
    fn from_parallel(x: &[f64], x_par: Vec<f64>, target: ProjectionTarget) -> Self {
        let x_perp = x.iter().zip(&x_par).map(|(a, b)| a - b).collect();
        Self {
            x_par,
            x_perp,
            target,
        }
    }

    pub fn perp_norm(&self) -> f64 {
        norm(&self.x_perp)
    }
}

/// Low-dimensional representation `r >= 0` with `x_par = B r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeRepresentation {
    pub r: Vec<f64>,
    pub normalized: bool,
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Orthogonal projector onto the column space of `B`.
///
/// For the switch `D = BᵀB` is singular (`B [1; -1] = 0`), so the projector is
/// built from the pseudoinverse: `A = B D⁺ Bᵀ`.
#[derive(Clone, Debug)]
pub struct SubspaceProjector {
    a: DMatrix<f64>,
}

impl SubspaceProjector {
    pub fn new(b: &BMatrix) -> Self {
        let d_pinv = b
            .gram()
            .pseudo_inverse(1e-12)
            .expect("pseudo-inverse of a Gram matrix with non-negative tolerance");
        let a = b.matrix() * d_pinv * b.matrix().transpose();
        Self { a }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn project(&self, x: &[f64]) -> Result<Decomposition> {
        check_len(x.len(), self.dim())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("x", "non-finite entry"));
        }
        let x_par = (&self.a * DVector::from_column_slice(x))
            .as_slice()
            .to_vec();
        Ok(Decomposition::from_parallel(
            x,
            x_par,
            ProjectionTarget::SubspaceS,
        ))
    }
}

/// Projects `x` onto the collapse subspace. The length of `x` selects the
/// system: `n²` for an `n`-port switch, or 3 for the three-queue system when
/// `n` is `None`.
pub fn project_subspace(x: &[f64], n: Option<usize>) -> Result<Decomposition> {
    let b = match n {
        Some(n) => BMatrix::switch(n)?,
        None => BMatrix::three_queue(),
    };
    SubspaceProjector::new(&b).project(x)
}

/// Closed-form perpendicular component for the three-queue subspace.
pub fn threeq_perp(x: [f64; 3]) -> [f64; 3] {
    let c = (x[1] + x[2] - x[0]) / 3.0;
    [-c, c, c]
}

/// Projection onto the switch cone `K = {B r : r >= 0}` by non-negative least
/// squares.
#[derive(Clone, Debug)]
pub struct ConeProjector {
    n: usize,
    b: BMatrix,
    options: NnlsOptions,
}

impl ConeProjector {
    pub fn new(n: usize) -> Result<Self> {
        let b = BMatrix::switch(n)?;
        let options = NnlsOptions {
            tolerance: 1e-10,
            max_iter: 100 * 2 * n,
        };
        Ok(Self { n, b, options })
    }

    pub fn project(&self, x: &[f64]) -> Result<(Decomposition, ConeRepresentation)> {
        check_len(x.len(), self.n * self.n)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("x", "non-finite entry"));
        }
        let rhs = DVector::from_column_slice(x);
        let r = nnls(self.b.matrix(), &rhs, self.options)?;
        let x_par = (self.b.matrix() * &r).as_slice().to_vec();
        let rep = self.normalize(r.as_slice(), &x_par);
        Ok((
            Decomposition::from_parallel(x, x_par, ProjectionTarget::ConeK),
            rep,
        ))
    }

    /// Applies the shift `r - w [1_n; -1_n]`, which leaves `B r` unchanged,
    /// so that `min_i r_i = 0`. Of the two shifts that achieve this the one
    /// of smaller magnitude is taken (ties zero the input half).
    fn normalize(&self, r: &[f64], x_par: &[f64]) -> ConeRepresentation {
        let n = self.n;
        let m_in = r[..n].iter().copied().fold(f64::INFINITY, f64::min);
        let m_out = r[n..].iter().copied().fold(f64::INFINITY, f64::min);
        if m_in.min(m_out) <= 0.0 {
            let r = r.iter().map(|v| v.max(0.0)).collect();
            return ConeRepresentation {
                r,
                normalized: true,
            };
        }
        let w = if m_in <= m_out { m_in } else { -m_out };
        let shifted: Vec<f64> = r
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let v = if k < n { v - w } else { v + w };
                v.max(0.0)
            })
            .collect();
        let check = self.b.apply(&shifted).expect("length 2n");
        let moved = check
            .iter()
            .zip(x_par)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved > 1e-9 {
            ConeRepresentation {
                r: r.to_vec(),
                normalized: false,
            }
        } else {
            ConeRepresentation {
                r: shifted,
                normalized: true,
            }
        }
    }
}

pub fn project_cone_switch(x: &[f64], n: usize) -> Result<(Decomposition, ConeRepresentation)> {
    ConeProjector::new(n)?.project(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NsysCone {
    K1,
    K2,
    K3,
}

/// Closed-form projections onto the N-system cones.
pub fn project_cones_nsys(y: [f64; 2], cone: NsysCone) -> Decomposition {
    let mid = 0.5 * (y[0] + y[1]);
    let (par, target) = match cone {
        NsysCone::K1 => ([mid, mid], ProjectionTarget::ConeK1),
        NsysCone::K2 => ([y[0], 0.0], ProjectionTarget::ConeK2),
        NsysCone::K3 if y[1] <= y[0] => (y, ProjectionTarget::ConeK3),
        NsysCone::K3 => ([mid, mid], ProjectionTarget::ConeK3),
    };
    Decomposition::from_parallel(&y, par.to_vec(), target)
}
