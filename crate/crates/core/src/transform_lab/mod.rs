//! Empirical transforms, functional-equation residuals, collapse diagnostics
//! and distances between scaled ensembles and limit laws.

mod checks;
mod distance;
mod ssc;

pub use checks::{
    boundary_trend, identity_checks, nsys_identity_checks, switch_identity_checks,
    threeq_identity_checks, CheckRow, Z_TOL,
};
pub use distance::{
    compare_to_limit, ks_two_sample, wasserstein1, DistanceReport, MarginalDistance,
};
pub use ssc::{ssc_report, MomentRow, PerpKind, SscReport};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{StationaryEnsemble, SystemKind};
use crate::error::{Error, Result};
use crate::geometry::ConeProjector;
use crate::limit_theory::{Frequency, FrequencyDomain, ResidualSystem};
use crate::stats::{batch_means, ratio_batch_means, DEFAULT_BATCHES};

type C = Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformEstimate {
    pub value: C,
    /// Batch-means standard errors of the real and imaginary parts.
    pub std_error: [f64; 2],
    /// The same, assuming independent samples.
    pub iid_std_error: [f64; 2],
    pub n_samples: usize,
    pub frequency: Frequency,
    pub eps: f64,
}

impl TransformEstimate {
    /// Standard error of the complex value as a whole.
    pub fn se_norm(&self) -> f64 {
        self.std_error[0].hypot(self.std_error[1])
    }
}

/// Which exponent the boundary terms use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MExponent {
    /// Switch: the full `⟨θ, q⟩`. Three-queue: `⟨d2,φ⟩q3` and `⟨d1,φ⟩q2`.
    #[default]
    Standard,
    /// Switch: `Σ_{l ≠ i, n+j} ⟨d_l, φ⟩ r_l` with `r` the normalized cone
    /// representation of `q`. Three-queue: the full `⟨θ, q⟩`.
    Alternate,
}

pub fn domain_of(system: SystemKind) -> FrequencyDomain {
    match system {
        SystemKind::Switch { n } => FrequencyDomain::Switch { n },
        SystemKind::ThreeQueue => FrequencyDomain::ThreeQueue,
        SystemKind::NSystem => FrequencyDomain::NSystem,
    }
}

fn check_inputs(ens: &StationaryEnsemble, freq: &Frequency) -> Result<()> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if domain_of(ens.system()) != freq.domain() {
        return Err(Error::SystemMismatch(format!(
            "ensemble of {:?} with a {:?} frequency",
            ens.system(),
            freq.domain()
        )));
    }
    Ok(())
}

fn dot(theta: &[C], q: &[u32]) -> C {
    theta.iter().zip(q).map(|(t, &x)| t * x as f64).sum()
}

fn summarize(values: &[C], scale: f64, freq: &Frequency, eps: f64) -> TransformEstimate {
    let re: Vec<f64> = values.iter().map(|z| z.re * scale).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im * scale).collect();
    let (bre, bim) = (
        batch_means(&re, DEFAULT_BATCHES),
        batch_means(&im, DEFAULT_BATCHES),
    );
    let (ire, iim) = (crate::stats::iid(&re), crate::stats::iid(&im));
    TransformEstimate {
        value: C::new(bre.mean, bim.mean),
        std_error: [bre.se, bim.se],
        iid_std_error: [ire.se, iim.se],
        n_samples: values.len(),
        frequency: freq.clone(),
        eps,
    }
}

/// Sample mean of `e^{ε⟨θ, q⟩}`.
pub fn estimate_l(
    ens: &StationaryEnsemble,
    freq: &Frequency,
    eps: f64,
) -> Result<TransformEstimate> {
    check_inputs(ens, freq)?;
    let theta = freq.theta();
    let vals: Vec<C> = (0..ens.len())
        .map(|k| (dot(&theta, ens.q(k)) * eps).exp())
        .collect();
    Ok(summarize(&vals, 1.0, freq, eps))
}

/// Boundary term `k` (zero based).
///
/// * switch, `k < n²`: `(1/ε) E[u_k e^{ε·exponent}]`;
/// * three-queue, `k ∈ {1, 2}`: `M2`, `M3` as `(1/ε) E[u_{k+1} e^{…}]`;
/// * N-system, `k = 0`: `E[e^{ε(φ1+φ2)q2} | q1 <= q2]`; `k = 1`:
///   `E[e^{εφ1 q1} | q2 = 0]`.
pub fn estimate_m(
    ens: &StationaryEnsemble,
    freq: &Frequency,
    eps: f64,
    k: usize,
    form: MExponent,
) -> Result<TransformEstimate> {
    check_inputs(ens, freq)?;
    let phi = freq.phi();
    match ens.system() {
        SystemKind::Switch { n } => {
            if k >= n * n {
                return Err(Error::Dimension {
                    expected: n * n,
                    got: k,
                });
            }
            let theta = freq.theta();
            let vals: Vec<C> = match form {
                MExponent::Standard => (0..ens.len())
                    .map(|s| {
                        if ens.aux(s)[k] == 0 {
                            C::new(0.0, 0.0)
                        } else {
                            (dot(&theta, ens.q(s)) * eps).exp()
                        }
                    })
                    .collect(),
                MExponent::Alternate => {
                    let proj = ConeProjector::new(n)?;
                    let dphi = freq.d_phi();
                    let (i, j) = (k % n, k / n);
                    let mut vals = Vec::with_capacity(ens.len());
                    for s in 0..ens.len() {
                        if ens.aux(s)[k] == 0 {
                            vals.push(C::new(0.0, 0.0));
                            continue;
                        }
                        let x: Vec<f64> = ens.q(s).iter().map(|&v| v as f64).collect();
                        let (_, rep) = proj.project(&x)?;
                        let e: C = (0..2 * n)
                            .filter(|&l| l != i && l != n + j)
                            .map(|l| dphi[l] * rep.r[l])
                            .sum();
                        vals.push((e * eps).exp());
                    }
                    vals
                }
            };
            Ok(summarize(&vals, 1.0 / eps, freq, eps))
        }
        SystemKind::ThreeQueue => {
            if !(k == 1 || k == 2) {
                return Err(Error::param(
                    "k",
                    "three-queue boundary terms are 1 (M2) and 2 (M3)",
                ));
            }
            let theta = freq.theta();
            let d = freq.d_phi();
            let vals: Vec<C> = (0..ens.len())
                .map(|s| {
                    if ens.aux(s)[k] == 0 {
                        return C::new(0.0, 0.0);
                    }
                    let q = ens.q(s);
                    let e = match form {
                        MExponent::Standard if k == 1 => d[1] * q[2] as f64,
                        MExponent::Standard => d[0] * q[1] as f64,
                        MExponent::Alternate => dot(&theta, q),
                    };
                    (e * eps).exp()
                })
                .collect();
            Ok(summarize(&vals, 1.0 / eps, freq, eps))
        }
        SystemKind::NSystem => {
            let (name, pick): (&'static str, fn(&crate::ensemble::Indicators) -> bool) = match k {
                0 => ("M1", |i| i.q1_le_q2),
                1 => ("M2", |i| i.q2_eq0),
                _ => {
                    return Err(Error::param(
                        "k",
                        "N-system boundary terms are 0 (M1) and 1 (M2)",
                    ))
                }
            };
            let n = ens.len();
            let (mut yre, mut yim, mut x) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for s in 0..n {
                let ind = ens.indicators(s)?;
                if !pick(&ind) {
                    continue;
                }
                let q = ens.q(s);
                let e = if k == 0 {
                    (phi[0] + phi[1]) * q[1] as f64
                } else {
                    phi[0] * q[0] as f64
                };
                let v = (e * eps).exp();
                yre[s] = v.re;
                yim[s] = v.im;
                x[s] = 1.0;
            }
            let re = ratio_batch_means(&yre, &x, DEFAULT_BATCHES)
                .ok_or(Error::NoBoundarySamples(name))?;
            let im = ratio_batch_means(&yim, &x, DEFAULT_BATCHES)
                .ok_or(Error::NoBoundarySamples(name))?;
            Ok(TransformEstimate {
                value: C::new(re.mean, im.mean),
                std_error: [re.se, im.se],
                iid_std_error: [re.se, im.se],
                n_samples: re.n,
                frequency: freq.clone(),
                eps,
            })
        }
    }
}

/// All boundary terms in the order [`ResidualSystem`] expects.
pub fn estimate_all_m(
    ens: &StationaryEnsemble,
    freq: &Frequency,
    eps: f64,
    form: MExponent,
) -> Result<Vec<TransformEstimate>> {
    let ks: Vec<usize> = match ens.system() {
        SystemKind::Switch { n } => (0..n * n).collect(),
        SystemKind::ThreeQueue => vec![1, 2],
        SystemKind::NSystem => vec![0, 1],
    };
    ks.into_iter()
        .map(|k| estimate_m(ens, freq, eps, k, form))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualEstimate {
    pub value: C,
    /// First-order propagated standard error of `|value|`, covariances ignored.
    pub std_error: f64,
    /// `2 × std_error`.
    pub band: f64,
    pub frequency: Frequency,
    pub eps: f64,
}

/// Plugs empirical `L̂`, `M̂` into the functional equation.
pub fn empirical_residual(
    ens: &StationaryEnsemble,
    freq: &Frequency,
    eps: f64,
    sys: &ResidualSystem,
    form: MExponent,
) -> Result<ResidualEstimate> {
    if sys.domain() != freq.domain() {
        return Err(Error::SystemMismatch(
            "residual parameters do not match the frequency".into(),
        ));
    }
    let l = estimate_l(ens, freq, eps)?;
    let ms = estimate_all_m(ens, freq, eps, form)?;
    let (a, b) = sys.coefficients(freq)?;
    let m_vals: Vec<C> = ms.iter().map(|m| m.value).collect();
    let value = crate::limit_theory::functional_residual(sys, l.value, &m_vals, freq)?;
    let var = a.norm_sqr() * l.se_norm().powi(2)
        + b.iter()
            .zip(&ms)
            .map(|(b, m)| b.norm_sqr() * m.se_norm().powi(2))
            .sum::<f64>();
    let se = var.sqrt();
    Ok(ResidualEstimate {
        value,
        std_error: se,
        band: 2.0 * se,
        frequency: freq.clone(),
        eps,
    })
}

/// Where arrival variances are evaluated: at the simulated rates `λ` or at
/// the boundary point `ν` reached as `ε → 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceAt {
    #[default]
    Simulated,
    Limit,
}

/// Per-queue arrival variances of a discrete-system ensemble.
pub fn arrival_variances(ens: &StationaryEnsemble, at: VarianceAt) -> Vec<f64> {
    let meta = &ens.meta;
    let rates = match at {
        VarianceAt::Simulated => &meta.rates,
        VarianceAt::Limit => &meta.nu,
    };
    rates.iter().map(|&l| variance_for(meta, l)).collect()
}

/// Functional-equation parameters implied by an ensemble's metadata, using
/// the arrival variances at the simulated `ε`.
pub fn residual_system_for(ens: &StationaryEnsemble) -> Result<ResidualSystem> {
    residual_system_at(ens, VarianceAt::Simulated)
}

pub fn residual_system_at(ens: &StationaryEnsemble, at: VarianceAt) -> Result<ResidualSystem> {
    let meta = &ens.meta;
    match meta.system {
        SystemKind::Switch { n } => Ok(ResidualSystem::Switch {
            n,
            sigma2: arrival_variances(ens, at),
        }),
        SystemKind::ThreeQueue => {
            let v = arrival_variances(ens, at);
            Ok(ResidualSystem::ThreeQueue {
                sigma2: [v[0], v[1], v[2]],
            })
        }
        SystemKind::NSystem => Ok(ResidualSystem::NSystem {
            mu: meta
                .mu
                .ok_or_else(|| Error::Format("N-system metadata without μ".into()))?,
            gamma: meta
                .gamma
                .ok_or_else(|| Error::Format("N-system metadata without γ".into()))?,
        }),
    }
}

/// Arrival variance at rate `lambda`; Bernoulli unless the metadata says otherwise.
fn variance_for(meta: &crate::ensemble::EnsembleMeta, lambda: f64) -> f64 {
    use crate::stochastics::{ArrivalFamily, ArrivalKind};
    let kind = meta.arrivals.unwrap_or(ArrivalKind::Bernoulli);
    ArrivalFamily::with_mean(kind, lambda)
        .map(|f| f.variance())
        .unwrap_or(lambda * (1.0 - lambda))
}
