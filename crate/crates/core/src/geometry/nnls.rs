//! Lawson–Hanson active-set non-negative least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NnlsOptions {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for NnlsOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iter: 0,
        }
    }
}

/// Solves `min ‖A x - b‖₂` subject to `x >= 0`.
///
/// `max_iter == 0` means `100 * ncols`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, opts: NnlsOptions) -> Result<DVector<f64>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: b.len(),
        });
    }
    let max_iter = if opts.max_iter == 0 {
        100 * n
    } else {
        opts.max_iter
    };
    let col_scale = (0..n).map(|j| a.column(j).norm()).fold(0.0, f64::max);
    let tol = opts.tolerance * (1.0 + b.norm()) * col_scale.max(1.0);

    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    // Columns that entered, then failed to move off zero. Excluded until the
    // passive set next changes.
    let mut blocked = vec![false; n];
    let mut iter = 0;

    loop {
        let w = a.transpose() * (b - a * &x);
        let entering = (0..n)
            .filter(|&j| !passive[j] && !blocked[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = entering else { break };
        passive[j] = true;

        let mut first = true;
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(Error::NnlsNonConvergence(max_iter));
            }
            let z = passive_solve(a, b, &passive);
            if first && z[j] <= 0.0 {
                // Numerically the column adds nothing; park it.
                passive[j] = false;
                blocked[j] = true;
                break;
            }
            first = false;
            let infeasible: Vec<usize> = (0..n).filter(|&p| passive[p] && z[p] <= 0.0).collect();
            if infeasible.is_empty() {
                x = z;
                blocked.fill(false);
                break;
            }
            let alpha = infeasible
                .iter()
                .map(|&p| x[p] / (x[p] - z[p]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * alpha;
            for p in 0..n {
                if passive[p] && x[p] <= opts.tolerance {
                    passive[p] = false;
                    x[p] = 0.0;
                }
            }
            blocked.fill(false);
        }
    }
    Ok(x)
}

/// Unconstrained least squares on the passive columns, zero elsewhere.
fn passive_solve(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let mut out = DVector::zeros(passive.len());
    if idx.is_empty() {
        return out;
    }
    let sub = a.select_columns(&idx);
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-12)
        .expect("svd computed with both factors");
    for (k, &j) in idx.iter().enumerate() {
        out[j] = sol[k];
    }
    out
}
