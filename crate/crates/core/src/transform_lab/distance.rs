//! Two-sample distances between the scaled ensemble and limit-law draws.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::StationaryEnsemble;
use crate::error::{Error, Result};
use crate::limit_theory::LimitLaw;

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup_x |F_a(x) - F_b(x)|` of the two empirical CDFs. Ties are handled by
/// consuming every copy of a value before comparing.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `∫ |F_a - F_b| dx`; for equal sizes this is the mean of `|a_(k) - b_(k)|`.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let (a, b) = (sorted(a), sorted(b));
    if a.len() == b.len() {
        return crate::stats::pairwise_sum(
            &a.iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .collect::<Vec<_>>(),
        ) / a.len() as f64;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut x = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - x);
        x = next;
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalDistance {
    pub label: String,
    pub ks: f64,
    pub wasserstein1: f64,
    /// `|mean_a - mean_b|`.
    pub moment_gap_1: f64,
    /// `|E a² - E b²|`.
    pub moment_gap_2: f64,
    pub mean_ensemble: f64,
    pub mean_law: f64,
}

fn marginal(label: String, a: &[f64], b: &[f64]) -> MarginalDistance {
    let mean = |x: &[f64]| crate::stats::pairwise_sum(x) / x.len() as f64;
    let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    MarginalDistance {
        label,
        ks: ks_two_sample(a, b),
        wasserstein1: wasserstein1(a, b),
        moment_gap_1: (mean(a) - mean(b)).abs(),
        moment_gap_2: (sq(a) - sq(b)).abs(),
        mean_ensemble: mean(a),
        mean_law: mean(b),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub law: LimitLaw,
    pub eps: f64,
    pub marginals: Vec<MarginalDistance>,
    /// The linear functional `⟨1, εq⟩`.
    pub sum: MarginalDistance,
    pub n_ensemble: usize,
    pub n_law: usize,
    pub ensemble_hash: String,
}

impl DistanceReport {
    pub fn max_ks(&self) -> f64 {
        self.marginals.iter().map(|m| m.ks).fold(0.0, f64::max)
    }

    pub fn max_wasserstein1(&self) -> f64 {
        self.marginals
            .iter()
            .map(|m| m.wasserstein1)
            .fold(0.0, f64::max)
    }
}

/// Scales the ensemble by `eps` and compares each coordinate, and the sum of
/// coordinates, with `n_law` draws from `law`.
pub fn compare_to_limit<R: Rng + ?Sized>(
    ens: &StationaryEnsemble,
    eps: f64,
    law: &LimitLaw,
    n_law: usize,
    rng: &mut R,
) -> Result<DistanceReport> {
    if ens.width() != law.dim() {
        return Err(Error::Dimension {
            expected: law.dim(),
            got: ens.width(),
        });
    }
    if ens.is_empty() || n_law == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let w = law.dim();
    let mut draws = vec![0.0; n_law * w];
    for row in draws.chunks_exact_mut(w) {
        law.sample_into(rng, row);
    }
    let mut marginals = Vec::with_capacity(w);
    for i in 0..w {
        let a = ens.q_column(i, eps);
        let b: Vec<f64> = draws[i..].iter().step_by(w).copied().collect();
        marginals.push(marginal(format!("q{}", i + 1), &a, &b));
    }
    let sa: Vec<f64> = ens
        .rows()
        .map(|(q, _)| q.iter().map(|&v| v as f64).sum::<f64>() * eps)
        .collect();
    let sb: Vec<f64> = draws.chunks_exact(w).map(|r| r.iter().sum()).collect();
    Ok(DistanceReport {
        law: *law,
        eps,
        marginals,
        sum: marginal("sum".into(), &sa, &sb),
        n_ensemble: ens.len(),
        n_law,
        ensemble_hash: ens.meta.hash(),
    })
}
