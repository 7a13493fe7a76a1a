//! N-system: queue 1 is served by server 1 (rate μ1); queue 2 by server 2
//! (rate μ2) and, under MaxWeight, also by server 1 whenever `q1 <= q2`.
//! Simulated as the uniformized jump chain at rate `Λ = λ1 + λ2 + μ1 + μ2`.

use rand::Rng;
use rayon::prelude::*;

use crate::ensemble::{EnsembleMeta, StationaryEnsemble, SystemKind};
use crate::error::{Error, Result};
use crate::stochastics::{check_eps, Boundary, HeavyTrafficSchedule, RngStream};
use crate::switch_sim::SamplingPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsysEvent {
    Arrival1,
    Arrival2,
    Depart1,
    Depart2,
    SelfLoop,
}

const EVENTS: [NsysEvent; 5] = [
    NsysEvent::Arrival1,
    NsysEvent::Arrival2,
    NsysEvent::Depart1,
    NsysEvent::Depart2,
    NsysEvent::SelfLoop,
];

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct NSysState {
    pub q: [u32; 2],
    /// Expected elapsed time, `steps / Λ`.
    pub clock: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NSystem {
    pub lambda: [f64; 2],
    pub mu: [f64; 2],
    pub eps: f64,
    pub nu: [f64; 2],
    pub gamma: f64,
    pub boundary: Option<Boundary>,
}

impl NSystem {
    /// Rates on the heavy-traffic trajectory towards `ν` on `boundary`.
    pub fn heavy_traffic(
        mu: [f64; 2],
        nu: [f64; 2],
        boundary: Boundary,
        gamma: f64,
        eps: f64,
    ) -> Result<Self> {
        let sched = HeavyTrafficSchedule::NSystem {
            mu,
            nu,
            boundary,
            gamma,
        };
        let r = sched.make_rates(eps)?;
        let mut sys = Self::with_rates([r[0], r[1]], mu)?;
        sys.eps = eps;
        sys.nu = nu;
        sys.gamma = gamma;
        sys.boundary = Some(boundary);
        Ok(sys)
    }

    /// The symmetric corner case `μ = ν`.
    pub fn corner(mu: [f64; 2], gamma: f64, eps: f64) -> Result<Self> {
        Self::heavy_traffic(mu, mu, Boundary::F3, gamma, eps)
    }

    /// Fixed rates inside `λ1 < μ1`, `λ1 + λ2 < μ1 + μ2`.
    pub fn with_rates(lambda: [f64; 2], mu: [f64; 2]) -> Result<Self> {
        if lambda
            .iter()
            .chain(&mu)
            .any(|&x| !(x > 0.0 && x.is_finite()))
        {
            return Err(Error::param("lambda", "all rates must be positive"));
        }
        if lambda[0] >= mu[0] || lambda[0] + lambda[1] >= mu[0] + mu[1] {
            return Err(Error::Capacity(format!(
                "need λ1 < μ1 and λ1+λ2 < μ1+μ2, got λ = ({}, {}), μ = ({}, {})",
                lambda[0], lambda[1], mu[0], mu[1]
            )));
        }
        let eps = 1.0 - lambda[0] / mu[0];
        check_eps(eps)?;
        Ok(Self {
            lambda,
            mu,
            eps,
            nu: lambda,
            gamma: f64::NAN,
            boundary: None,
        })
    }

    pub fn uniformization_rate(&self) -> f64 {
        self.lambda[0] + self.lambda[1] + self.mu[0] + self.mu[1]
    }

    /// Transition rates out of `q`, indexed like [`NsysEvent`] minus the self-loop.
    pub fn rates_at(&self, q: [u32; 2]) -> [f64; 4] {
        let [l1, l2] = self.lambda;
        let [m1, m2] = self.mu;
        if q[0] > q[1] {
            [l1, l2, m1, if q[1] > 0 { m2 } else { 0.0 }]
        } else {
            [l1, l2, 0.0, if q[1] > 0 { m1 + m2 } else { 0.0 }]
        }
    }

    /// Probabilities of each event in one uniformized step.
    pub fn event_probabilities(&self, q: [u32; 2]) -> [f64; 5] {
        let big = self.uniformization_rate();
        let r = self.rates_at(q);
        let mut p = [0.0; 5];
        for k in 0..4 {
            p[k] = r[k] / big;
        }
        p[4] = 1.0 - p[..4].iter().sum::<f64>();
        p
    }

    /// Generator drift of `V(q) = (q2 - q1)⁺`.
    pub fn lyapunov_drift(&self, q: [u32; 2]) -> f64 {
        let v = |q: [i64; 2]| (q[1] - q[0]).max(0) as f64;
        let qi = [q[0] as i64, q[1] as i64];
        let r = self.rates_at(q);
        let moves = [[1, 0], [0, 1], [-1, 0], [0, -1]];
        r.iter()
            .zip(moves)
            .map(|(rate, d)| rate * (v([qi[0] + d[0], qi[1] + d[1]]) - v(qi)))
            .sum()
    }
}

/// Applies `event` to `q`, never letting a queue go negative.
pub fn apply_event(q: [u32; 2], event: NsysEvent) -> [u32; 2] {
    match event {
        NsysEvent::Arrival1 => [q[0] + 1, q[1]],
        NsysEvent::Arrival2 => [q[0], q[1] + 1],
        NsysEvent::Depart1 => [q[0].saturating_sub(1), q[1]],
        NsysEvent::Depart2 => [q[0], q[1].saturating_sub(1)],
        NsysEvent::SelfLoop => q,
    }
}

/// One uniformized step.
pub fn nsys_transition<R: Rng + ?Sized>(state: NSysState, rng: &mut R, sys: &NSystem) -> NSysState {
    let big = sys.uniformization_rate();
    let mut x = rng.random::<f64>() * big;
    let rates = sys.rates_at(state.q);
    let mut event = NsysEvent::SelfLoop;
    for (k, r) in rates.iter().enumerate() {
        if x < *r {
            event = EVENTS[k];
            break;
        }
        x -= r;
    }
    NSysState {
        q: apply_event(state.q, event),
        clock: state.clock + 1.0 / big,
    }
}

impl SamplingPlan {
    /// `ceil(40/ε²)` burn-in steps and `ceil(1/ε)` steps between samples.
    pub fn nsys_default(eps: f64, n_samples: usize) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self {
            burn_in: (40.0 / (eps * eps)).ceil() as u64,
            n_samples,
            thin: (1.0 / eps).ceil() as u64,
        })
    }
}

pub fn run_stationary_nsys(
    sys: &NSystem,
    stream: RngStream,
    plan: SamplingPlan,
) -> Result<StationaryEnsemble> {
    plan.check()?;
    let meta = EnsembleMeta {
        system: SystemKind::NSystem,
        eps: sys.eps,
        nu: sys.nu.to_vec(),
        rates: sys.lambda.to_vec(),
        mu: Some(sys.mu),
        gamma: sys.gamma.is_finite().then_some(sys.gamma),
        boundary: sys.boundary,
        arrivals: None,
        streams: vec![stream],
        burn_in: plan.burn_in,
        thin: plan.thin,
        n_samples: plan.n_samples,
    };
    let mut ens = StationaryEnsemble::new(meta);
    let mut rng = stream.rng();
    let mut state = NSysState::default();
    let mut steps = 0u64;
    for _ in 0..plan.burn_in {
        state = nsys_transition(state, &mut rng, sys);
    }
    steps += plan.burn_in;
    for _ in 0..plan.n_samples {
        for _ in 0..plan.thin {
            state = nsys_transition(state, &mut rng, sys);
        }
        steps += plan.thin;
        ens.push_nsys(steps, state.q);
    }
    Ok(ens)
}

pub fn run_replicas_nsys(
    sys: &NSystem,
    base_seed: u64,
    replicas: usize,
    plan: SamplingPlan,
) -> Result<StationaryEnsemble> {
    let parts = plan
        .split(replicas)
        .into_par_iter()
        .enumerate()
        .map(|(r, p)| run_stationary_nsys(sys, RngStream::new(base_seed, r as u64), p))
        .collect::<Result<Vec<_>>>()?;
    StationaryEnsemble::merge(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> NSystem {
        NSystem::corner([1.0, 1.0], 1.0, 0.1).unwrap()
    }

    #[test]
    fn empty_state_only_arrivals() {
        let s = sys();
        let p = s.event_probabilities([0, 0]);
        let big = s.uniformization_rate();
        assert!((p[0] - 0.9 / big).abs() < 1e-15);
        assert!((p[1] - 0.9 / big).abs() < 1e-15);
        assert_eq!(p[2], 0.0);
        assert_eq!(p[3], 0.0);
    }

    #[test]
    fn service_split() {
        let s = sys();
        let r = s.rates_at([3, 1]);
        assert_eq!(r[2], 1.0);
        assert_eq!(r[3], 1.0);
        let r = s.rates_at([1, 2]);
        assert_eq!(r[2], 0.0);
        assert_eq!(r[3], 2.0);
    }

    #[test]
    fn transition_frequencies() {
        let s = sys();
        let mut rng = RngStream::new(1, 0).rng();
        let n = 400_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            let next = nsys_transition(
                NSysState {
                    q: [1, 2],
                    clock: 0.0,
                },
                &mut rng,
                &s,
            );
            let k = match next.q {
                [2, 2] => 0,
                [1, 3] => 1,
                [0, 2] => 2,
                [1, 1] => 3,
                _ => 4,
            };
            counts[k] += 1;
        }
        let p = s.event_probabilities([1, 2]);
        for k in 0..5 {
            let phat = counts[k] as f64 / n as f64;
            assert!((phat - p[k]).abs() <= 4.0 * (p[k] * (1.0 - p[k]) / n as f64).sqrt() + 1e-12);
        }
    }

    #[test]
    fn rates_match_trajectory() {
        let s = NSystem::corner([1.0, 1.0], 2.0, 0.1).unwrap();
        assert!((s.lambda[0] - 0.9).abs() < 1e-15);
        assert!((s.lambda[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn drift_negative_above_diagonal() {
        let s = sys();
        for q1 in 0..10 {
            for d in 2..10 {
                assert!(s.lyapunov_drift([q1, q1 + d]) <= -s.mu[0] + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_unstable() {
        assert!(NSystem::with_rates([1.0, 0.5], [1.0, 1.0]).is_err());
        assert!(NSystem::with_rates([0.0, 0.5], [1.0, 1.0]).is_err());
    }
}
