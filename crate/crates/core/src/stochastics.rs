//! Random streams, arrival families and heavy-traffic rate schedules.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Addresses one independent ChaCha stream. Replicas share `base_seed` and
/// differ in `stream_id`, so results do not depend on thread scheduling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub base_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(base_seed: u64, stream_id: u64) -> Self {
        Self {
            base_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalKind {
    Bernoulli,
    UniformInt,
    Deterministic,
}

/// Per-slot arrival law of a single queue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalFamily {
    /// `a ∈ {0, 1}` with `P(a = 1) = p`.
    Bernoulli {
        p: f64,
    },
    /// Uniform on `{0, …, a_max}`, mean `a_max / 2`.
    UniformInt {
        a_max: u32,
    },
    Deterministic {
        value: u32,
    },
}

impl ArrivalFamily {
    /// The member of `kind` with mean `lambda`.
    pub fn with_mean(kind: ArrivalKind, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::param(
                "lambda",
                format!("{lambda} is not a valid rate"),
            ));
        }
        match kind {
            ArrivalKind::Bernoulli if lambda <= 1.0 => Ok(Self::Bernoulli { p: lambda }),
            ArrivalKind::Bernoulli => Err(Error::param(
                "lambda",
                format!("Bernoulli arrivals need a mean in [0,1], got {lambda}"),
            )),
            ArrivalKind::UniformInt => {
                let a_max = 2.0 * lambda;
                if (a_max - a_max.round()).abs() > 1e-9 {
                    return Err(Error::param(
                        "lambda",
                        format!("uniform integer arrivals need 2λ integral, got λ = {lambda}"),
                    ));
                }
                Ok(Self::UniformInt {
                    a_max: a_max.round() as u32,
                })
            }
            ArrivalKind::Deterministic => {
                if (lambda - lambda.round()).abs() > 1e-9 {
                    return Err(Error::param(
                        "lambda",
                        format!("deterministic arrivals need an integer mean, got {lambda}"),
                    ));
                }
                Ok(Self::Deterministic {
                    value: lambda.round() as u32,
                })
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Bernoulli { p } => p,
            Self::UniformInt { a_max } => a_max as f64 / 2.0,
            Self::Deterministic { value } => value as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Bernoulli { p } => p * (1.0 - p),
            Self::UniformInt { a_max } => {
                let m = a_max as f64 + 1.0;
                (m * m - 1.0) / 12.0
            }
            Self::Deterministic { .. } => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            Self::Bernoulli { p } => u32::from(rng.random::<f64>() < p),
            Self::UniformInt { a_max } => rng.random_range(0..=a_max),
            Self::Deterministic { value } => value,
        }
    }
}

/// One draw per queue into `out`.
pub fn sample_arrivals<R: Rng + ?Sized>(families: &[ArrivalFamily], rng: &mut R, out: &mut [u32]) {
    for (slot, fam) in out.iter_mut().zip(families) {
        *slot = fam.sample(rng);
    }
}

/// Per-queue variances. With `symmetric` set, also checks every variance is
/// the same and returns that common value in each slot.
pub fn variance_vector(families: &[ArrivalFamily], symmetric: bool) -> Result<Vec<f64>> {
    let v: Vec<f64> = families.iter().map(ArrivalFamily::variance).collect();
    if symmetric {
        if let Some(&first) = v.first() {
            if v.iter()
                .any(|&x| (x - first).abs() > 1e-12 * (1.0 + first.abs()))
            {
                return Err(Error::param("arrivals", "variances are not all equal"));
            }
        }
    }
    Ok(v)
}

/// `-mean * ln(1 - p)`.
pub fn exp_inverse_cdf(mean: f64, p: f64) -> f64 {
    -mean * (-p).ln_1p()
}

pub fn sample_exponential<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    let p: f64 = Open01.sample(rng);
    exp_inverse_cdf(mean, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Boundary {
    F1,
    F2,
    F3,
}

/// How arrival rates approach the capacity boundary as `ε → 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HeavyTrafficSchedule {
    /// `λ = (1 - ε) ν` for a doubly stochastic `ν` (row-major is not used;
    /// `nu[i + n j]`).
    Switch { nu: Vec<f64> },
    /// `λ = (1 - ε) ν` with `ν1 + ν2 = 1`, `ν1 + ν3 = 1`.
    ThreeQueue { nu: [f64; 3] },
    /// `λ1 = (1 - ε) ν1`, `λ2 = (1 - γε) ν2 + ε ν1 (1 - γ)`.
    NSystem {
        mu: [f64; 2],
        nu: [f64; 2],
        boundary: Boundary,
        gamma: f64,
    },
}

impl HeavyTrafficSchedule {
    /// Checks that `ν` lies on the stated boundary face.
    pub fn validate(&self) -> Result<()> {
        const TOL: f64 = 1e-9;
        match self {
            Self::Switch { nu } => {
                let n = (nu.len() as f64).sqrt().round() as usize;
                if n == 0 || n * n != nu.len() {
                    return Err(Error::param(
                        "nu",
                        format!("switch needs n² entries, got {}", nu.len()),
                    ));
                }
                positive("nu", nu)?;
                for p in 0..n {
                    let row: f64 = (0..n).map(|j| nu[p + n * j]).sum();
                    let col: f64 = (0..n).map(|i| nu[i + n * p]).sum();
                    if (row - 1.0).abs() > TOL || (col - 1.0).abs() > TOL {
                        return Err(Error::param(
                            "nu",
                            format!(
                                "port {} sums are {row} (input) and {col} (output), expected 1",
                                p + 1
                            ),
                        ));
                    }
                }
            }
            Self::ThreeQueue { nu } => {
                positive("nu", nu)?;
                if (nu[0] + nu[1] - 1.0).abs() > TOL || (nu[0] + nu[2] - 1.0).abs() > TOL {
                    return Err(Error::param("nu", "need ν1 + ν2 = 1 and ν1 + ν3 = 1"));
                }
            }
            Self::NSystem {
                mu,
                nu,
                boundary,
                gamma,
            } => {
                positive("mu", mu)?;
                positive("nu", nu)?;
                if !(*gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::param(
                        "gamma",
                        format!("must be positive, got {gamma}"),
                    ));
                }
                let total = (nu[0] + nu[1]) - (mu[0] + mu[1]);
                let first = nu[0] - mu[0];
                let ok = match boundary {
                    Boundary::F1 => total.abs() <= TOL && first < -TOL,
                    Boundary::F2 => first.abs() <= TOL && total < -TOL,
                    Boundary::F3 => first.abs() <= TOL && (nu[1] - mu[1]).abs() <= TOL,
                };
                if !ok {
                    return Err(Error::param(
                        "nu",
                        format!(
                            "({}, {}) is not on boundary {boundary:?} for μ = ({}, {})",
                            nu[0], nu[1], mu[0], mu[1]
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn make_rates(&self, eps: f64) -> Result<Vec<f64>> {
        check_eps(eps)?;
        self.validate()?;
        let rates = match self {
            Self::Switch { nu } => nu.iter().map(|v| (1.0 - eps) * v).collect(),
            Self::ThreeQueue { nu } => nu.iter().map(|v| (1.0 - eps) * v).collect(),
            Self::NSystem { nu, gamma, .. } => vec![
                (1.0 - eps) * nu[0],
                (1.0 - gamma * eps) * nu[1] + eps * nu[0] * (1.0 - gamma),
            ],
        };
        if let Some(bad) = rates.iter().find(|&&l| l <= 0.0 || !l.is_finite()) {
            return Err(Error::param(
                "nu",
                format!("arrival rate {bad} must be positive at ε = {eps}"),
            ));
        }
        Ok(rates)
    }
}

fn positive(field: &'static str, v: &[f64]) -> Result<()> {
    match v.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        Some(bad) => Err(Error::param(
            field,
            format!("entries must be positive, got {bad}"),
        )),
        None => Ok(()),
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Epsilon(eps))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4)
            .map(|_| RngStream::new(7, 0).rng().random())
            .collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let x: u64 = RngStream::new(7, 0).rng().random();
        let y: u64 = RngStream::new(7, 1).rng().random();
        assert_ne!(x, y);
    }

    #[test]
    fn family_moments() {
        let f = ArrivalFamily::with_mean(ArrivalKind::UniformInt, 1.5).unwrap();
        assert_eq!(f, ArrivalFamily::UniformInt { a_max: 3 });
        assert!((f.variance() - 15.0 / 12.0).abs() < 1e-15);
        assert!(ArrivalFamily::with_mean(ArrivalKind::UniformInt, 0.7).is_err());
        assert!(ArrivalFamily::with_mean(ArrivalKind::Bernoulli, 1.2).is_err());
        assert!(ArrivalFamily::with_mean(ArrivalKind::Deterministic, 0.5).is_err());
        let b = ArrivalFamily::with_mean(ArrivalKind::Bernoulli, 0.25).unwrap();
        assert!((b.variance() - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn empirical_mean_and_variance() {
        let mut rng = RngStream::new(3, 0).rng();
        for fam in [
            ArrivalFamily::Bernoulli { p: 0.3 },
            ArrivalFamily::UniformInt { a_max: 4 },
        ] {
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| fam.sample(&mut rng) as f64).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!((m - fam.mean()).abs() < 5.0 * (fam.variance() / n as f64).sqrt());
            assert!((v - fam.variance()).abs() < 0.02 * fam.variance());
        }
    }

    #[test]
    fn exponential_inverse_cdf() {
        assert_eq!(exp_inverse_cdf(2.0, 0.0), 0.0);
        assert!((exp_inverse_cdf(1.0, 0.5) - std::f64::consts::LN_2).abs() < 1e-15);
        let mut rng = RngStream::new(11, 2).rng();
        let n = 200_000;
        let m = (0..n)
            .map(|_| sample_exponential(&mut rng, 0.75))
            .sum::<f64>()
            / n as f64;
        assert!((m - 0.75).abs() < 0.01);
    }

    #[test]
    fn schedules() {
        let s = HeavyTrafficSchedule::ThreeQueue {
            nu: [0.5, 0.5, 0.5],
        };
        let r = s.make_rates(0.1).unwrap();
        assert!((r[0] - 0.45).abs() < 1e-15);
        assert!(matches!(s.make_rates(1.5), Err(Error::Epsilon(_))));
        assert!(matches!(s.make_rates(0.0), Err(Error::Epsilon(_))));
        let n = HeavyTrafficSchedule::NSystem {
            mu: [1.0, 1.0],
            nu: [1.0, 1.0],
            boundary: Boundary::F3,
            gamma: 0.5,
        };
        let r = n.make_rates(0.2).unwrap();
        assert!((r[0] - 0.8).abs() < 1e-15);
        assert!((r[1] - (0.9 + 0.1)).abs() < 1e-15);
        let n = HeavyTrafficSchedule::NSystem {
            mu: [1.0, 1.0],
            nu: [1.0, 1.0],
            boundary: Boundary::F3,
            gamma: 2.0,
        };
        let r = n.make_rates(0.1).unwrap();
        assert!((r[0] - 0.9).abs() < 1e-15);
        assert!((r[1] - 0.7).abs() < 1e-12);
        let sw = HeavyTrafficSchedule::Switch { nu: vec![0.25; 4] };
        assert!(sw.make_rates(0.1).is_err());
        let sw = HeavyTrafficSchedule::Switch { nu: vec![0.5; 4] };
        let r = sw.make_rates(0.1).unwrap();
        assert!(r.iter().all(|&l| (l - 0.45).abs() < 1e-15));
        let bad = HeavyTrafficSchedule::Switch {
            nu: vec![0.0, 1.0, 1.0, 0.0],
        };
        assert!(bad.make_rates(0.1).is_err());
        let off = HeavyTrafficSchedule::NSystem {
            mu: [1.0, 1.0],
            nu: [0.5, 1.0],
            boundary: Boundary::F3,
            gamma: 1.0,
        };
        assert!(off.make_rates(0.1).is_err());
    }
}
