//! Means and standard errors for (possibly autocorrelated) sample sequences.

use serde::{Deserialize, Serialize};

/// Number of batches used by [`batch_means`].
pub const DEFAULT_BATCHES: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// Sample mean with the i.i.d. standard error `sd / √n`.
pub fn iid(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let mean = pairwise_sum(xs) / n as f64;
    let se = if n > 1 {
        let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64 / n as f64).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, se, n }
}

/// Non-overlapping batch means. The sequence is cut into `batches` contiguous
/// blocks (the remainder is dropped from the variance estimate only) and the
/// standard error is that of the block averages. Falls back to [`iid`] when
/// there are too few samples per block.
pub fn batch_means(xs: &[f64], batches: usize) -> MeanSe {
    let n = xs.len();
    let batches = batches.max(2);
    if n < 2 * batches {
        return iid(xs);
    }
    let size = n / batches;
    let avgs: Vec<f64> = xs
        .chunks_exact(size)
        .take(batches)
        .map(|c| pairwise_sum(c) / size as f64)
        .collect();
    let b = iid(&avgs);
    MeanSe {
        mean: pairwise_sum(xs) / n as f64,
        se: b.se,
        n,
    }
}

/// Ratio `Σ y / Σ x` with a batch-means delta-method standard error, for
/// conditional means `E[Y | event]` written as `y = Y·1{event}`, `x = 1{event}`.
/// Returns `None` when `Σ x = 0`.
pub fn ratio_batch_means(y: &[f64], x: &[f64], batches: usize) -> Option<MeanSe> {
    assert_eq!(y.len(), x.len());
    let sx = pairwise_sum(x);
    if sx == 0.0 {
        return None;
    }
    let r = pairwise_sum(y) / sx;
    let xbar = sx / x.len() as f64;
    // Linearized influence values: (y - r x) / E[x].
    let z: Vec<f64> = y.iter().zip(x).map(|(y, x)| (y - r * x) / xbar).collect();
    let se = batch_means(&z, batches).se;
    Some(MeanSe {
        mean: r,
        se,
        n: x.iter().filter(|&&v| v != 0.0).count(),
    })
}

/// Summation with `O(log n)` error growth and a fixed evaluation order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
