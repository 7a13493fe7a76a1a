//! Three-queue system: a 2×2 switch without the fourth queue. Queue 1 shares
//! its input with queue 2 and its output with queue 3, so the only maximal
//! schedules are `(1,0,0)` and `(0,1,1)`.

use rayon::prelude::*;

use crate::ensemble::{EnsembleMeta, StationaryEnsemble, SystemKind};
use crate::error::Result;
use crate::stochastics::{
    sample_arrivals, ArrivalFamily, ArrivalKind, HeavyTrafficSchedule, RngStream,
};
use crate::switch_sim::SamplingPlan;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThreeQSchedule {
    /// Serve queue 1 only.
    First,
    /// Serve queues 2 and 3.
    Pair,
}

impl ThreeQSchedule {
    pub fn service(&self) -> [u8; 3] {
        match self {
            Self::First => [1, 0, 0],
            Self::Pair => [0, 1, 1],
        }
    }
}

/// `(1,0,0)` iff `q1 > q2 + q3` and `q1 > 0`; ties go to `(0,1,1)`.
pub fn threeq_maxweight(q: [u32; 3]) -> ThreeQSchedule {
    if q[0] > 0 && q[0] as u64 > q[1] as u64 + q[2] as u64 {
        ThreeQSchedule::First
    } else {
        ThreeQSchedule::Pair
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ThreeQState {
    pub q: [u32; 3],
    pub t: u64,
}

/// One slot; returns the unused service.
pub fn step_threeq(state: &mut ThreeQState, a: [u32; 3], sched: ThreeQSchedule) -> [u8; 3] {
    let s = sched.service();
    let mut u = [0u8; 3];
    for k in 0..3 {
        let x = state.q[k] + a[k];
        if s[k] == 1 {
            if x > 0 {
                state.q[k] = x - 1;
            } else {
                state.q[k] = 0;
                u[k] = 1;
            }
        } else {
            state.q[k] = x;
        }
    }
    state.t += 1;
    u
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThreeQSystem {
    pub eps: f64,
    pub nu: [f64; 3],
    pub families: [ArrivalFamily; 3],
    pub kind: Option<ArrivalKind>,
}

impl ThreeQSystem {
    pub fn heavy_traffic(nu: [f64; 3], eps: f64, kind: ArrivalKind) -> Result<Self> {
        let rates = HeavyTrafficSchedule::ThreeQueue { nu }.make_rates(eps)?;
        let families = [
            ArrivalFamily::with_mean(kind, rates[0])?,
            ArrivalFamily::with_mean(kind, rates[1])?,
            ArrivalFamily::with_mean(kind, rates[2])?,
        ];
        Ok(Self {
            eps,
            nu,
            families,
            kind: Some(kind),
        })
    }

    /// Arbitrary arrival laws inside `λ1 + λ2 < 1`, `λ1 + λ3 < 1`.
    pub fn with_arrivals(families: [ArrivalFamily; 3]) -> Result<Self> {
        let m = families.map(|f| f.mean());
        let load = (m[0] + m[1]).max(m[0] + m[2]);
        if load >= 1.0 {
            return Err(crate::error::Error::Capacity(format!(
                "need λ1+λ2 < 1 and λ1+λ3 < 1, heaviest is {load}"
            )));
        }
        Ok(Self {
            eps: 1.0 - load,
            nu: m,
            families,
            kind: None,
        })
    }

    pub fn rates(&self) -> [f64; 3] {
        self.families.map(|f| f.mean())
    }

    pub fn variances(&self) -> [f64; 3] {
        self.families.map(|f| f.variance())
    }
}

/// Stationary run from the empty state; rows hold `q(t+1)` and `u(t)`.
pub fn run_stationary_3q(
    system: &ThreeQSystem,
    stream: RngStream,
    plan: SamplingPlan,
) -> Result<StationaryEnsemble> {
    plan.check()?;
    let meta = EnsembleMeta {
        system: SystemKind::ThreeQueue,
        eps: system.eps,
        nu: system.nu.to_vec(),
        rates: system.rates().to_vec(),
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
    let mut state = ThreeQState::default();
    let mut a = [0u32; 3];
    let mut u = [0u8; 3];
    for _ in 0..plan.burn_in {
        let sched = threeq_maxweight(state.q);
        sample_arrivals(&system.families, &mut rng, &mut a);
        step_threeq(&mut state, a, sched);
    }
    for _ in 0..plan.n_samples {
        for _ in 0..plan.thin {
            let sched = threeq_maxweight(state.q);
            sample_arrivals(&system.families, &mut rng, &mut a);
            u = step_threeq(&mut state, a, sched);
        }
        ens.push(state.t, &state.q, &u);
    }
    Ok(ens)
}

pub fn run_replicas_3q(
    system: &ThreeQSystem,
    base_seed: u64,
    replicas: usize,
    plan: SamplingPlan,
) -> Result<StationaryEnsemble> {
    let parts = plan
        .split(replicas)
        .into_par_iter()
        .enumerate()
        .map(|(r, p)| run_stationary_3q(system, RngStream::new(base_seed, r as u64), p))
        .collect::<Result<Vec<_>>>()?;
    StationaryEnsemble::merge(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn schedule_rule() {
        assert_eq!(threeq_maxweight([5, 1, 1]), ThreeQSchedule::First);
        assert_eq!(threeq_maxweight([2, 1, 1]), ThreeQSchedule::Pair);
        assert_eq!(threeq_maxweight([1, 0, 0]), ThreeQSchedule::First);
        assert_eq!(threeq_maxweight([0, 0, 0]), ThreeQSchedule::Pair);
    }

    #[test]
    fn first_queue_never_wastes_service() {
        let mut rng = RngStream::new(2, 0).rng();
        for _ in 0..10_000 {
            let q = [
                rng.random_range(0..4),
                rng.random_range(0..4),
                rng.random_range(0..4),
            ];
            let a = [
                rng.random_range(0..2),
                rng.random_range(0..2),
                rng.random_range(0..2),
            ];
            let mut st = ThreeQState { q, t: 0 };
            let sched = threeq_maxweight(q);
            let u = step_threeq(&mut st, a, sched);
            assert_eq!(u[0], 0);
            for k in 0..3 {
                assert_eq!(st.q[k] as u64 * u[k] as u64, 0);
                let s = sched.service()[k] as i64;
                assert_eq!(st.q[k] as i64, q[k] as i64 + a[k] as i64 - s + u[k] as i64);
            }
        }
    }

    #[test]
    fn zero_arrivals_stay_empty() {
        let sys =
            ThreeQSystem::with_arrivals([ArrivalFamily::Deterministic { value: 0 }; 3]).unwrap();
        let plan = SamplingPlan {
            burn_in: 5,
            n_samples: 20,
            thin: 2,
        };
        let ens = run_stationary_3q(&sys, RngStream::new(0, 0), plan).unwrap();
        assert!(ens.rows().all(|(q, _)| q == [0, 0, 0]));
    }

    #[test]
    fn off_boundary_nu_rejected() {
        assert!(ThreeQSystem::heavy_traffic([0.5, 0.4, 0.5], 0.1, ArrivalKind::Bernoulli).is_err());
    }
}
