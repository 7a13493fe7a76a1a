use htq_core::limit_theory::{laplace_limit_switch, laplace_limit_threeq};
use htq_core::stats::iid;
use htq_core::*;

const N: usize = 1_000_000;

fn draws(law: &LimitLaw, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RngStream::new(seed, 0).rng();
    (0..N).map(|_| law.sample(&mut rng)).collect()
}

fn check_mean(xs: &[f64], target: f64) {
    let m = iid(xs);
    assert!(
        (m.mean - target).abs() < 4.0 * m.se,
        "{} vs {target} (se {})",
        m.mean,
        m.se
    );
}

#[test]
fn switch_sum_mean_formula() {
    let (n, s2) = (2usize, 1.0);
    let law = LimitLaw::switch_symmetric(n, s2).unwrap();
    let xs = draws(&law, 1);
    let sums: Vec<f64> = xs.iter().map(|x| x.iter().sum()).collect();
    check_mean(&sums, s2 * n as f64 * (n as f64 - 0.5));
    assert!(xs.iter().all(|x| x.iter().all(|&v| v >= 0.0)));
    // Each sample lies in the cone: projecting it moves nothing.
    for x in xs.iter().take(200) {
        assert!(project_cone_switch(x, n).unwrap().0.perp_norm() < 1e-9);
    }
}

#[test]
fn threeq_in_subspace_with_means() {
    let s = 0.4;
    let law = LimitLaw::three_queue([s, s, s]).unwrap();
    let xs = draws(&law, 2);
    assert!(xs.iter().all(|x| x[0] == x[1] + x[2]));
    for (i, t) in [s, s / 2.0, s / 2.0].into_iter().enumerate() {
        let col: Vec<f64> = xs.iter().map(|x| x[i]).collect();
        check_mean(&col, t);
    }
}

#[test]
fn nsys_laws() {
    let f3 = LimitLaw::nsys(Boundary::F3, 1.0, [1.0, 1.0]).unwrap();
    let xs = draws(&f3, 3);
    assert!(xs.iter().all(|x| x[0] >= x[1]));
    check_mean(&xs.iter().map(|x| x[0]).collect::<Vec<_>>(), 1.5);
    check_mean(&xs.iter().map(|x| x[1]).collect::<Vec<_>>(), 0.5);
    let f2 = LimitLaw::nsys(Boundary::F2, 1.0, [1.0, 1.0]).unwrap();
    let mut rng = RngStream::new(4, 0).rng();
    assert!((0..1000).all(|_| f2.sample(&mut rng)[1] == 0.0));
    assert!(!LimitLaw::nsys(Boundary::F3, 1.0, [1.0, 2.0])
        .unwrap()
        .hypothesis_holds());
    assert!(f3.hypothesis_holds());
}

#[test]
fn transforms_at_zero() {
    let z = Frequency::zero(FrequencyDomain::Switch { n: 3 });
    let (l, m) = laplace_limit_switch(&z, 3, 0.5).unwrap();
    assert!((l - 1.0).norm() < 1e-15);
    assert!(m.iter().all(|v| (v - 1.0 / 3.0).norm() < 1e-15));
    let z = Frequency::zero(FrequencyDomain::ThreeQueue);
    let (l, m2, m3) = laplace_limit_threeq(&z, 0.2, 0.3).unwrap();
    assert!([l, m2, m3].iter().all(|v| (v - 1.0).norm() < 1e-15));
}

#[test]
fn switch_laplace_matches_monte_carlo_on_input_ray() {
    let (n, s2) = (2, 0.5);
    let law = LimitLaw::switch_symmetric(n, s2).unwrap();
    let f = Frequency::real(FrequencyDomain::Switch { n }, &[-0.3, -0.3, 0.0, 0.0]).unwrap();
    let theta = f.theta();
    let xs = draws(&law, 5);
    let vals: Vec<f64> = xs
        .iter()
        .map(|x| {
            theta
                .iter()
                .zip(x)
                .map(|(t, v)| t.re * v)
                .sum::<f64>()
                .exp()
        })
        .collect();
    check_mean(&vals, law.laplace(&f).unwrap().re);
}
