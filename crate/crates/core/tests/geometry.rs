mod common;

use htq_core::*;
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn vec_in(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, n * n)
}

fn switch_case() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=4).prop_flat_map(|n| (Just(n), vec_in(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn subspace_projection_idempotent_and_orthogonal((n, x) in switch_case()) {
        let d = project_subspace(&x, Some(n)).unwrap();
        let again = project_subspace(&d.x_par, Some(n)).unwrap();
        for (a, b) in again.x_par.iter().zip(&d.x_par) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!(dot(&d.x_par, &d.x_perp).abs() < 1e-8 * (1.0 + dot(&x, &x)));
    }

    #[test]
    fn cone_projection_properties((n, x) in switch_case(), r in proptest::collection::vec(0.0f64..5.0, 8)) {
        let (d, rep) = project_cone_switch(&x, n).unwrap();
        // Contraction towards the origin, which lies in the cone.
        prop_assert!(dot(&d.x_par, &d.x_par) <= dot(&x, &x) + 1e-9);
        // Idempotence.
        let (again, _) = project_cone_switch(&d.x_par, n).unwrap();
        prop_assert!(again.perp_norm() < 1e-8 * (1.0 + d.x_par.iter().map(|v| v.abs()).sum::<f64>()));
        // Variational inequality against a random cone point y = B r.
        let b = BMatrix::switch(n).unwrap();
        let y = b.apply(&r[..2 * n]).unwrap();
        let diff: Vec<f64> = y.iter().zip(&d.x_par).map(|(a, c)| a - c).collect();
        prop_assert!(dot(&d.x_perp, &diff) <= 1e-8 * (1.0 + dot(&x, &x)));
        // The representation reproduces the projection.
        prop_assert!(rep.r.iter().all(|&v| v >= 0.0));
        let back = b.apply(&rep.r).unwrap();
        for (a, c) in back.iter().zip(&d.x_par) {
            prop_assert!((a - c).abs() < 1e-8);
        }
    }

    #[test]
    fn subspace_residual_never_exceeds_cone_residual((n, x) in switch_case()) {
        let s = project_subspace(&x, Some(n)).unwrap();
        let (k, _) = project_cone_switch(&x, n).unwrap();
        prop_assert!(s.perp_norm() <= k.perp_norm() + 1e-9);
    }

    #[test]
    fn nsys_cones_are_projections(y1 in -10.0f64..10.0, y2 in -10.0f64..10.0) {
        for cone in [NsysCone::K1, NsysCone::K2, NsysCone::K3] {
            let d = project_cones_nsys([y1, y2], cone);
            let again = project_cones_nsys([d.x_par[0], d.x_par[1]], cone);
            prop_assert!(again.perp_norm() < 1e-12);
            prop_assert!(dot(&d.x_par, &d.x_par) <= y1 * y1 + y2 * y2 + 1e-9);
        }
    }
}

#[test]
fn switch_incidence_rank() {
    let gram = BMatrix::switch(2).unwrap().gram();
    let rank = gram
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-9)
        .count();
    assert_eq!(rank, 3);
    let proj = SubspaceProjector::new(&BMatrix::switch(2).unwrap());
    assert_eq!(proj.dim(), 4);
}

#[test]
fn threeq_subspace_matches_formula() {
    let proj = SubspaceProjector::new(&BMatrix::three_queue());
    let x = [0.0, 2.0, 1.0];
    let d = proj.project(&x).unwrap();
    let want = htq_core::geometry::threeq_perp(x);
    for (a, b) in d.x_perp.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((d.perp_norm() - 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn cone_matches_enumeration_for_n3() {
    let mut rng = RngStream::new(5, 0).rng();
    for _ in 0..50 {
        let x: Vec<f64> = (0..9)
            .map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0))
            .collect();
        let (d, _) = project_cone_switch(&x, 3).unwrap();
        let want = common::cone_oracle(3, &x);
        for (a, b) in d.x_par.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "{x:?}");
        }
    }
}
