//! Discrete-time `n × n` input-queued switch.
//!
//! Each slot: a schedule `s(t)` (a perfect matching) is chosen from `q(t)`,
//! arrivals `a(t)` land, and `q(t+1) = [q(t) + a(t) - s(t)]⁺`. The unused
//! service `u(t) = q(t+1) - (q(t) + a(t) - s(t))` is 1 exactly where a
//! scheduled queue had nothing to send.

mod hungarian;

pub use hungarian::Hungarian;

use rand::Rng;
use rayon::prelude::*;

use crate::ensemble::{EnsembleMeta, StationaryEnsemble, SystemKind};
use crate::error::{Error, Result};
use crate::stochastics::{
    check_eps, sample_arrivals, ArrivalFamily, ArrivalKind, HeavyTrafficSchedule, RngStream,
};

/// A perfect matching: input `i` is connected to output `perm[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub perm: Vec<usize>,
}

impl Schedule {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.n()];
        self.perm
            .iter()
            .all(|&j| j < seen.len() && !std::mem::replace(&mut seen[j], true))
    }

    /// The induced 0/1 service vector of length `n²`.
    pub fn service_vector(&self) -> Vec<u8> {
        let n = self.n();
        let mut s = vec![0u8; n * n];
        for (i, &j) in self.perm.iter().enumerate() {
            s[i + n * j] = 1;
        }
        s
    }

    pub fn weight(&self, q: &[u32]) -> u64 {
        let n = self.n();
        self.perm
            .iter()
            .enumerate()
            .map(|(i, &j)| q[i + n * j] as u64)
            .sum()
    }
}

/// Anything that maps a queue vector to a schedule.
pub trait Scheduler {
    fn schedule(&mut self, q: &[u32], out: &mut Schedule);
}

impl<F: FnMut(&[u32], &mut Schedule)> Scheduler for F {
    fn schedule(&mut self, q: &[u32], out: &mut Schedule) {
        self(q, out)
    }
}

/// MaxWeight via the Hungarian algorithm, keeping its buffers between slots.
#[derive(Clone, Debug)]
pub struct MaxWeight {
    solver: Hungarian,
}

impl MaxWeight {
    pub fn new(n: usize) -> Self {
        Self {
            solver: Hungarian::new(n),
        }
    }
}

impl Scheduler for MaxWeight {
    fn schedule(&mut self, q: &[u32], out: &mut Schedule) {
        let n = self.solver.size();
        self.solver
            .solve_max(|i, j| q[i + n * j] as i64, &mut out.perm);
    }
}

/// Maximum-weight schedule for `q` (length `n²`).
pub fn maxweight_schedule(q: &[u32], n: usize) -> Schedule {
    let mut s = Schedule::identity(n);
    MaxWeight::new(n).schedule(q, &mut s);
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchState {
    pub q: Vec<u32>,
    pub t: u64,
}

impl SwitchState {
    pub fn empty(n: usize) -> Self {
        Self {
            q: vec![0; n * n],
            t: 0,
        }
    }
}

/// Advances `state` by one slot in place and writes the unused service.
pub fn step_in_place(state: &mut SwitchState, a: &[u32], sched: &Schedule, u: &mut [u8]) {
    let n = sched.n();
    u.fill(0);
    for (q, &a) in state.q.iter_mut().zip(a) {
        *q += a;
    }
    for (i, &j) in sched.perm.iter().enumerate() {
        let k = i + n * j;
        if state.q[k] > 0 {
            state.q[k] -= 1;
        } else {
            u[k] = 1;
        }
    }
    state.t += 1;
}

/// One slot: returns the next state and the unused service vector.
pub fn step(state: &SwitchState, a: &[u32], sched: &Schedule) -> (SwitchState, Vec<u8>) {
    let mut next = state.clone();
    let mut u = vec![0u8; state.q.len()];
    step_in_place(&mut next, a, sched, &mut u);
    (next, u)
}

/// Parameters of a switch run.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchSystem {
    pub n: usize,
    pub eps: f64,
    pub nu: Vec<f64>,
    pub families: Vec<ArrivalFamily>,
    pub kind: Option<ArrivalKind>,
}

impl SwitchSystem {
    /// `λ = (1 - ε) ν` with one arrival family of the given kind per queue.
    pub fn heavy_traffic(n: usize, nu: Vec<f64>, eps: f64, kind: ArrivalKind) -> Result<Self> {
        if nu.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: nu.len(),
            });
        }
        let sched = HeavyTrafficSchedule::Switch { nu: nu.clone() };
        let rates = sched.make_rates(eps)?;
        let families = rates
            .iter()
            .map(|&l| ArrivalFamily::with_mean(kind, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            eps,
            nu,
            families,
            kind: Some(kind),
        })
    }

    /// Arbitrary per-queue arrival laws; `ε` is read off as one minus the
    /// heaviest port load.
    pub fn with_arrivals(n: usize, families: Vec<ArrivalFamily>) -> Result<Self> {
        if families.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: families.len(),
            });
        }
        let means: Vec<f64> = families.iter().map(ArrivalFamily::mean).collect();
        let load = max_port_load(n, &means);
        if load >= 1.0 {
            return Err(Error::Capacity(format!(
                "heaviest port load is {load}, must be below 1"
            )));
        }
        Ok(Self {
            n,
            eps: 1.0 - load,
            nu: means,
            families,
            kind: None,
        })
    }

    pub fn uniform(n: usize, eps: f64) -> Result<Self> {
        Self::heavy_traffic(n, vec![1.0 / n as f64; n * n], eps, ArrivalKind::Bernoulli)
    }

    pub fn rates(&self) -> Vec<f64> {
        self.families.iter().map(ArrivalFamily::mean).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.families.iter().map(ArrivalFamily::variance).collect()
    }
}

fn max_port_load(n: usize, rates: &[f64]) -> f64 {
    (0..n)
        .flat_map(|p| {
            let row: f64 = (0..n).map(|j| rates[p + n * j]).sum();
            let col: f64 = (0..n).map(|i| rates[i + n * p]).sum();
            [row, col]
        })
        .fold(0.0, f64::max)
}

/// Burn-in, sample count and spacing of a stationary run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplingPlan {
    pub burn_in: u64,
    pub n_samples: usize,
    pub thin: u64,
}

impl SamplingPlan {
    /// `ceil(20/ε²)` burn-in slots and `ceil(1/ε)` slots between samples.
    pub fn discrete_default(eps: f64, n_samples: usize) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self {
            burn_in: (20.0 / (eps * eps)).ceil() as u64,
            n_samples,
            thin: (1.0 / eps).ceil() as u64,
        })
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::param("thin", "must be at least 1"));
        }
        Ok(())
    }

    /// Splits the sample budget over `replicas` runs, each with the full burn-in.
    pub fn split(&self, replicas: usize) -> Vec<SamplingPlan> {
        let replicas = replicas.max(1);
        (0..replicas)
            .map(|r| SamplingPlan {
                n_samples: self.n_samples / replicas + usize::from(r < self.n_samples % replicas),
                ..*self
            })
            .collect()
    }
}

/// Runs the switch under MaxWeight from the empty state.
pub fn run_stationary(
    system: &SwitchSystem,
    stream: RngStream,
    plan: SamplingPlan,
) -> Result<StationaryEnsemble> {
    run_stationary_with(system, stream, plan, MaxWeight::new(system.n))
}

/// Runs the switch under an arbitrary scheduler. Each stored row is the
/// post-transition queue `q(t+1)` with the unused service `u(t)` of that
/// transition, so `⟨q, u⟩ = 0` row by row.
pub fn run_stationary_with<S: Scheduler>(
    system: &SwitchSystem,
    stream: RngStream,
    plan: SamplingPlan,
    mut scheduler: S,
) -> Result<StationaryEnsemble> {
    plan.check()?;
    let n = system.n;
    let w = n * n;
    let meta = EnsembleMeta {
        system: SystemKind::Switch { n },
        eps: system.eps,
        nu: system.nu.clone(),
        rates: system.rates(),
        mu: None,
        gamma: None,
        boundary: None,
        arrivals: system.kind,
        streams: vec![stream],
        burn_in: plan.burn_in,
        thin: plan.thin,
        n_samples: plan.n_samples,
    };
    let mut ens = StationaryEnsemble::new(meta);
    let mut rng = stream.rng();
    let mut state = SwitchState::empty(n);
    let mut sched = Schedule::identity(n);
    let mut a = vec![0u32; w];
    let mut u = vec![0u8; w];
    let mut advance = |state: &mut SwitchState, rng: &mut rand_chacha::ChaCha8Rng, u: &mut [u8]| {
        scheduler.schedule(&state.q, &mut sched);
        sample_arrivals(&system.families, rng, &mut a);
        step_in_place(state, &a, &sched, u);
    };
    for _ in 0..plan.burn_in {
        advance(&mut state, &mut rng, &mut u);
    }
    for _ in 0..plan.n_samples {
        for _ in 0..plan.thin {
            advance(&mut state, &mut rng, &mut u);
        }
        ens.push(state.t, &state.q, &u);
    }
    Ok(ens)
}

/// Independent replicas on streams `0..replicas` of `base_seed`, run in
/// parallel and concatenated in stream order.
pub fn run_replicas(
    system: &SwitchSystem,
    base_seed: u64,
    replicas: usize,
    plan: SamplingPlan,
) -> Result<StationaryEnsemble> {
    let parts = plan
        .split(replicas)
        .into_par_iter()
        .enumerate()
        .map(|(r, p)| run_stationary(system, RngStream::new(base_seed, r as u64), p))
        .collect::<Result<Vec<_>>>()?;
    StationaryEnsemble::merge(parts)
}

/// A uniformly random permutation, for comparisons against MaxWeight.
pub fn random_schedule<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Schedule {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    Schedule { perm }
}
