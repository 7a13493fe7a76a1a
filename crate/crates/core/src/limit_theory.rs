//! Heavy-traffic limit laws, their Laplace transforms and the functional
//! equations they satisfy.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BMatrix;
use crate::stochastics::{sample_exponential, Boundary};

type C = Complex64;

const DOMAIN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrequencyDomain {
    /// `φ ∈ C^{2n}` with `Re⟨d_i, φ⟩ <= 0`; `θ = Bφ`.
    Switch { n: usize },
    /// `φ ∈ C²` with `Re(Dφ) <= 0`; `θ = Bφ = (φ1+φ2, φ1, φ2)`.
    ThreeQueue,
    /// `φ ∈ C²` with `Re φ1 <= 0`, `Re(φ1+φ2) <= 0`; `θ = φ`.
    NSystem,
}

impl FrequencyDomain {
    pub fn phi_len(&self) -> usize {
        match *self {
            Self::Switch { n } => 2 * n,
            Self::ThreeQueue | Self::NSystem => 2,
        }
    }

    pub fn theta_len(&self) -> usize {
        match *self {
            Self::Switch { n } => n * n,
            Self::ThreeQueue => 3,
            Self::NSystem => 2,
        }
    }

    /// The quantities whose real parts must be non-positive.
    fn constraints(&self, phi: &[C]) -> Vec<C> {
        match *self {
            Self::Switch { n } => {
                let sum_in: C = phi[..n].iter().sum();
                let sum_out: C = phi[n..].iter().sum();
                // ⟨d_i, φ⟩ = n φ_i + Σ_out for inputs, and symmetrically.
                (0..n)
                    .map(|i| phi[i] * n as f64 + sum_out)
                    .chain((0..n).map(|j| phi[n + j] * n as f64 + sum_in))
                    .collect()
            }
            Self::ThreeQueue => vec![phi[0] * 2.0 + phi[1], phi[0] + phi[1] * 2.0],
            Self::NSystem => vec![phi[0], phi[0] + phi[1]],
        }
    }
}

/// A complex frequency checked against its system's admissible domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    phi: Vec<C>,
    domain: FrequencyDomain,
}

impl Frequency {
    pub fn new(domain: FrequencyDomain, phi: Vec<C>) -> Result<Self> {
        if phi.len() != domain.phi_len() {
            return Err(Error::Dimension {
                expected: domain.phi_len(),
                got: phi.len(),
            });
        }
        if phi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Domain("non-finite component".into()));
        }
        if let Some(bad) = domain.constraints(&phi).iter().find(|c| c.re > DOMAIN_TOL) {
            return Err(Error::Domain(format!(
                "constraint with real part {} > 0",
                bad.re
            )));
        }
        Ok(Self { phi, domain })
    }

    pub fn zero(domain: FrequencyDomain) -> Self {
        Self {
            phi: vec![C::new(0.0, 0.0); domain.phi_len()],
            domain,
        }
    }

    pub fn real(domain: FrequencyDomain, phi: &[f64]) -> Result<Self> {
        Self::new(domain, phi.iter().map(|&x| C::new(x, 0.0)).collect())
    }

    pub fn phi(&self) -> &[C] {
        &self.phi
    }

    pub fn domain(&self) -> FrequencyDomain {
        self.domain
    }

    pub fn is_zero(&self) -> bool {
        self.phi.iter().all(|z| *z == C::new(0.0, 0.0))
    }

    /// The queue-space frequency `θ`.
    pub fn theta(&self) -> Vec<C> {
        match self.domain {
            FrequencyDomain::Switch { n } => BMatrix::switch(n)
                .and_then(|b| b.lift(&self.phi))
                .expect("length checked at construction"),
            FrequencyDomain::ThreeQueue => {
                vec![self.phi[0] + self.phi[1], self.phi[0], self.phi[1]]
            }
            FrequencyDomain::NSystem => self.phi.clone(),
        }
    }

    /// `Dφ`: the switch factors `⟨d_k, φ⟩` or the three-queue pair.
    pub fn d_phi(&self) -> Vec<C> {
        match self.domain {
            FrequencyDomain::NSystem => self.phi.clone(),
            d => d.constraints(&self.phi),
        }
    }
}

/// Frequencies with real parts uniform on `[-2, 0]` and imaginary parts on
/// `[-2, 2]`, kept only if admissible.
pub fn random_frequencies<R: Rng + ?Sized>(
    domain: FrequencyDomain,
    count: usize,
    rng: &mut R,
) -> Vec<Frequency> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let phi = (0..domain.phi_len())
            .map(|_| C::new(rng.random_range(-2.0..=0.0), rng.random_range(-2.0..=2.0)))
            .collect();
        if let Ok(f) = Frequency::new(domain, phi) {
            out.push(f);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitLaw {
    /// `B(Υ - min Υ · 1)` with `Υ_k` i.i.d. exponential of mean `σ²/2`.
    SwitchSymmetric { n: usize, sigma2: f64 },
    /// `(Υ1+Υ2, Υ1, Υ2)`, means `(3σ2²+σ3²)/8` and `(σ2²+3σ3²)/8`.
    ThreeQueue {
        s2: f64,
        s3: f64,
        /// Whether `2σ1² = σ2² + σ3²` held for the variances supplied.
        hypothesis: bool,
    },
    /// `(Υ2, Υ2)`, mean `1/(2γ)`.
    NSysF1 { gamma: f64 },
    /// `(Υ1, 0)`, mean 1.
    NSysF2,
    /// `(Υ1+Υ2, Υ2)`, means 1 and `1/(2γ)`.
    NSysF3 { gamma: f64, symmetric_service: bool },
}

impl LimitLaw {
    pub fn switch_symmetric(n: usize, sigma2: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        positive("sigma2", sigma2)?;
        Ok(Self::SwitchSymmetric { n, sigma2 })
    }

    /// Takes all three variances so the hypothesis can be checked.
    pub fn three_queue(sigma2: [f64; 3]) -> Result<Self> {
        positive("sigma2_2", sigma2[1])?;
        positive("sigma2_3", sigma2[2])?;
        let lhs = 2.0 * sigma2[0];
        let rhs = sigma2[1] + sigma2[2];
        Ok(Self::ThreeQueue {
            s2: sigma2[1],
            s3: sigma2[2],
            hypothesis: (lhs - rhs).abs() <= 1e-9 * (1.0 + rhs),
        })
    }

    pub fn nsys(boundary: Boundary, gamma: f64, mu: [f64; 2]) -> Result<Self> {
        positive("gamma", gamma)?;
        Ok(match boundary {
            Boundary::F1 => Self::NSysF1 { gamma },
            Boundary::F2 => Self::NSysF2,
            Boundary::F3 => Self::NSysF3 {
                gamma,
                symmetric_service: (mu[0] - mu[1]).abs() <= 1e-12 * mu[0].abs().max(1.0),
            },
        })
    }

    pub fn dim(&self) -> usize {
        match *self {
            Self::SwitchSymmetric { n, .. } => n * n,
            Self::ThreeQueue { .. } => 3,
            _ => 2,
        }
    }

    pub fn domain(&self) -> FrequencyDomain {
        match *self {
            Self::SwitchSymmetric { n, .. } => FrequencyDomain::Switch { n },
            Self::ThreeQueue { .. } => FrequencyDomain::ThreeQueue,
            _ => FrequencyDomain::NSystem,
        }
    }

    /// Whether the law's limit hypothesis was met by its parameters.
    pub fn hypothesis_holds(&self) -> bool {
        match *self {
            Self::ThreeQueue { hypothesis, .. } => hypothesis,
            Self::NSysF3 {
                symmetric_service, ..
            } => symmetric_service,
            _ => true,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            Self::SwitchSymmetric { n, sigma2 } => {
                let mut ups = [0.0f64; 64];
                let ups: &mut [f64] = if 2 * n <= 64 {
                    &mut ups[..2 * n]
                } else {
                    // Large switches are rare; allocate.
                    out.copy_from_slice(&sample_limit_switch(n, sigma2, rng));
                    return;
                };
                switch_fill(n, sigma2, rng, ups, out);
            }
            Self::ThreeQueue { s2, s3, .. } => {
                out.copy_from_slice(&sample_limit_threeq(s2, s3, rng))
            }
            Self::NSysF1 { gamma } => {
                out.copy_from_slice(&sample_limit_nsys(Boundary::F1, gamma, rng))
            }
            Self::NSysF2 => out.copy_from_slice(&sample_limit_nsys(Boundary::F2, 1.0, rng)),
            Self::NSysF3 { gamma, .. } => {
                out.copy_from_slice(&sample_limit_nsys(Boundary::F3, gamma, rng))
            }
        }
    }

    /// Exact mean vector.
    pub fn mean(&self) -> Vec<f64> {
        match *self {
            Self::SwitchSymmetric { n, sigma2 } => {
                // E[Υ_k - min Υ] = σ²/2 - σ²/(4n) for each of the two terms.
                vec![2.0 * (sigma2 / 2.0 - sigma2 / (4.0 * n as f64)); n * n]
            }
            Self::ThreeQueue { s2, s3, .. } => {
                let (a, b) = threeq_means(s2, s3);
                vec![a + b, a, b]
            }
            Self::NSysF1 { gamma } => vec![0.5 / gamma, 0.5 / gamma],
            Self::NSysF2 => vec![1.0, 0.0],
            Self::NSysF3 { gamma, .. } => vec![1.0 + 0.5 / gamma, 0.5 / gamma],
        }
    }

    /// `E[e^{⟨θ, X⟩}]` at an admissible frequency of the matching system.
    pub fn laplace(&self, freq: &Frequency) -> Result<C> {
        if freq.domain() != self.domain() {
            return Err(Error::SystemMismatch(format!(
                "frequency for {:?} used with law {:?}",
                freq.domain(),
                self
            )));
        }
        Ok(match *self {
            Self::SwitchSymmetric { n, sigma2 } => laplace_limit_switch(freq, n, sigma2)?.0,
            Self::ThreeQueue { s2, s3, .. } => laplace_limit_threeq(freq, s2, s3)?.0,
            Self::NSysF1 { gamma } => {
                let p = freq.phi();
                C::new(1.0, 0.0) / (1.0 - (p[0] + p[1]) / (2.0 * gamma))
            }
            Self::NSysF2 => C::new(1.0, 0.0) / (1.0 - freq.phi()[0]),
            Self::NSysF3 { gamma, .. } => laplace_limit_nsys(freq, gamma)?.0,
        })
    }
}

fn positive(field: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be positive, got {x}")))
    }
}

fn threeq_means(s2: f64, s3: f64) -> (f64, f64) {
    ((3.0 * s2 + s3) / 8.0, (s2 + 3.0 * s3) / 8.0)
}

fn switch_fill<R: Rng + ?Sized>(
    n: usize,
    sigma2: f64,
    rng: &mut R,
    ups: &mut [f64],
    out: &mut [f64],
) {
    for u in ups.iter_mut() {
        *u = sample_exponential(rng, sigma2 / 2.0);
    }
    let m = ups.iter().copied().fold(f64::INFINITY, f64::min);
    for j in 0..n {
        for i in 0..n {
            out[i + n * j] = (ups[i] - m) + (ups[n + j] - m);
        }
    }
}

pub fn sample_limit_switch<R: Rng + ?Sized>(n: usize, sigma2: f64, rng: &mut R) -> Vec<f64> {
    let mut ups = vec![0.0; 2 * n];
    let mut out = vec![0.0; n * n];
    switch_fill(n, sigma2, rng, &mut ups, &mut out);
    out
}

/// Closed-form `(L, M)` of the switch limit in `φ` coordinates.
pub fn laplace_limit_switch(freq: &Frequency, n: usize, sigma2: f64) -> Result<(C, Vec<C>)> {
    expect_domain(freq, FrequencyDomain::Switch { n })?;
    let h = sigma2 / 2.0;
    let factors: Vec<C> = freq.d_phi().iter().map(|d| 1.0 - d * h).collect();
    let prod: C = factors.iter().product();
    let total: C = freq.phi().iter().sum();
    let l = (1.0 - total * h) / prod;
    let mut m = vec![C::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            m[i + n * j] = factors[i] * factors[n + j] / (prod * n as f64);
        }
    }
    Ok((l, m))
}

pub fn sample_limit_threeq<R: Rng + ?Sized>(s2: f64, s3: f64, rng: &mut R) -> [f64; 3] {
    let (a, b) = threeq_means(s2, s3);
    let y1 = sample_exponential(rng, a);
    let y2 = sample_exponential(rng, b);
    [y1 + y2, y1, y2]
}

/// Closed-form `(L, M2, M3)` of the three-queue limit.
pub fn laplace_limit_threeq(freq: &Frequency, s2: f64, s3: f64) -> Result<(C, C, C)> {
    expect_domain(freq, FrequencyDomain::ThreeQueue)?;
    let (a, b) = threeq_means(s2, s3);
    let d = freq.d_phi();
    let f1 = 1.0 - d[0] * a;
    let f2 = 1.0 - d[1] * b;
    let one = C::new(1.0, 0.0);
    Ok((one / (f1 * f2), one / f2, one / f1))
}

pub fn sample_limit_nsys<R: Rng + ?Sized>(case: Boundary, gamma: f64, rng: &mut R) -> [f64; 2] {
    match case {
        Boundary::F1 => {
            let y2 = sample_exponential(rng, 0.5 / gamma);
            [y2, y2]
        }
        Boundary::F2 => [sample_exponential(rng, 1.0), 0.0],
        Boundary::F3 => {
            let y1 = sample_exponential(rng, 1.0);
            let y2 = sample_exponential(rng, 0.5 / gamma);
            [y1 + y2, y2]
        }
    }
}

/// Closed-form `(L, M1, M2)` of the N-system limit at the corner.
pub fn laplace_limit_nsys(freq: &Frequency, gamma: f64) -> Result<(C, C, C)> {
    expect_domain(freq, FrequencyDomain::NSystem)?;
    let p = freq.phi();
    let one = C::new(1.0, 0.0);
    let m2 = one / (1.0 - p[0]);
    let m1 = one / (1.0 - (p[0] + p[1]) / (2.0 * gamma));
    Ok((m1 * m2, m1, m2))
}

fn expect_domain(freq: &Frequency, want: FrequencyDomain) -> Result<()> {
    if freq.domain() == want {
        Ok(())
    } else {
        Err(Error::SystemMismatch(format!(
            "expected a {want:?} frequency, got {:?}",
            freq.domain()
        )))
    }
}

/// Parameters entering a system's functional equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResidualSystem {
    /// Diagonal arrival variances `σ²` (length `n²`).
    Switch {
        n: usize,
        sigma2: Vec<f64>,
    },
    ThreeQueue {
        sigma2: [f64; 3],
    },
    NSystem {
        mu: [f64; 2],
        gamma: f64,
    },
}

impl ResidualSystem {
    pub fn domain(&self) -> FrequencyDomain {
        match *self {
            Self::Switch { n, .. } => FrequencyDomain::Switch { n },
            Self::ThreeQueue { .. } => FrequencyDomain::ThreeQueue,
            Self::NSystem { .. } => FrequencyDomain::NSystem,
        }
    }

    /// Number of boundary terms `M`.
    pub fn m_len(&self) -> usize {
        match *self {
            Self::Switch { n, .. } => n * n,
            _ => 2,
        }
    }

    /// Coefficient of `L` and coefficients of each `M` term at `freq`; the
    /// residual is linear: `a L + Σ_k b_k M_k`.
    pub fn coefficients(&self, freq: &Frequency) -> Result<(C, Vec<C>)> {
        if freq.domain() != self.domain() {
            return Err(Error::SystemMismatch(format!(
                "frequency for {:?} used with {:?}",
                freq.domain(),
                self.domain()
            )));
        }
        let theta = freq.theta();
        Ok(match self {
            Self::Switch { n, sigma2 } => {
                if sigma2.len() != n * n {
                    return Err(Error::Dimension {
                        expected: n * n,
                        got: sigma2.len(),
                    });
                }
                let sum: C = theta.iter().sum();
                let quad: C = theta.iter().zip(sigma2).map(|(t, s)| t * t * *s).sum();
                (-sum / *n as f64 + quad * 0.5, theta)
            }
            Self::ThreeQueue { sigma2 } => {
                let sum: C = theta.iter().sum();
                let quad: C = theta.iter().zip(sigma2).map(|(t, s)| t * t * *s).sum();
                (-sum * 0.5 + quad * 0.5, vec![theta[1], theta[2]])
            }
            Self::NSystem { mu, gamma } => {
                let (p1, p2) = (theta[0], theta[1]);
                let [m1, m2] = *mu;
                let a =
                    (-*gamma * p2 + p2 * p2) * m2 + p2 * m1 * (1.0 - gamma) + (-p1 + p1 * p1) * m1;
                (a, vec![(p1 - p2) * m1, p2 * (*gamma * (m1 + m2))])
            }
        })
    }
}

/// Left-hand side of the functional equation for the supplied transform
/// values. `m` holds `M_1..M_{n²}` (switch), `M2, M3` (three-queue) or
/// `M1, M2` (N-system).
pub fn functional_residual(sys: &ResidualSystem, l: C, m: &[C], freq: &Frequency) -> Result<C> {
    if m.len() != sys.m_len() {
        return Err(Error::Dimension {
            expected: sys.m_len(),
            got: m.len(),
        });
    }
    let (a, b) = sys.coefficients(freq)?;
    Ok(a * l + b.iter().zip(m).map(|(b, m)| b * m).sum::<C>())
}

/// Residual of the closed-form solution; requires the symmetric hypotheses
/// to vanish.
pub fn closed_form_residual(sys: &ResidualSystem, freq: &Frequency) -> Result<C> {
    match sys {
        ResidualSystem::Switch { n, sigma2 } => {
            let (l, m) = laplace_limit_switch(freq, *n, sigma2[0])?;
            functional_residual(sys, l, &m, freq)
        }
        ResidualSystem::ThreeQueue { sigma2 } => {
            let (l, m2, m3) = laplace_limit_threeq(freq, sigma2[1], sigma2[2])?;
            functional_residual(sys, l, &[m2, m3], freq)
        }
        ResidualSystem::NSystem { gamma, mu } => {
            if mu[0] != mu[1] {
                return Err(Error::param("mu", "closed form needs mu1 = mu2"));
            }
            let (l, m1, m2) = laplace_limit_nsys(freq, *gamma)?;
            functional_residual(sys, l, &[m1, m2], freq)
        }
    }
}
