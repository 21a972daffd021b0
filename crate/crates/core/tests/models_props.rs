mod common;

use common::*;
use lapkit_core::linalg::c64;
use lapkit_core::models::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn builders_are_deterministic(n in 2usize..30, seed in any::<u64>()) {
        for spec in [ModelSpec::random_hermitian(n, seed), ModelSpec::anderson(n, 1.5, seed), ModelSpec::planted(n.max(4), 0.3, 2, 0.5, seed)] {
            let a = build_operator(&spec).unwrap();
            let b = build_operator(&spec).unwrap();
            prop_assert_eq!(a.entries(), b.entries());
        }
        let r = RiggingSpec::random(10.0, seed);
        let (fa, fb) = (build_rigging(&r, n).unwrap(), build_rigging(&r, n).unwrap());
        prop_assert_eq!(fa.entries(), fb.entries());
    }

    #[test]
    fn planted_eigenvectors_are_eigenvectors(n in 4usize..40, m in 1usize..4, lambda in -2.0f64..2.0, seed in any::<u64>()) {
        let spec = ModelSpec::planted(n, lambda, m, 0.5, seed);
        let h = build_operator(&spec).unwrap();
        let v = planted_eigenvectors(&spec).unwrap();
        prop_assert_eq!(v.ncols(), m);
        let residual = (h.entries() * &v - &v * c64(lambda, 0.0)).norm();
        prop_assert!(residual <= 1e-10 * (1.0 + lambda.abs()));
        let (vals, _) = eig(h.entries());
        let hits = vals.iter().filter(|&&e| (e - lambda).abs() < 1e-9).count();
        prop_assert_eq!(hits, m);
        let others = vals.iter().filter(|&&e| (e - lambda).abs() >= 1e-9).fold(f64::INFINITY, |a, &e| a.min((e - lambda).abs()));
        prop_assert!(others >= 0.5 - 1e-9);
    }

    #[test]
    fn rigging_respects_condition_bound(n in 1usize..40, bound in 1.0f64..50.0, seed in any::<u64>()) {
        let f = build_rigging(&RiggingSpec::random(bound, seed), n).unwrap();
        let s = f.entries().clone().singular_values();
        let mx = s.iter().copied().fold(0.0, f64::max);
        let mn = s.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(mx / mn <= bound * (1.0 + 1e-10));
        prop_assert!(mx <= bound * (1.0 + 1e-10) && mn >= 1.0 - 1e-10);
    }
}

#[test]
fn seeds_change_the_draw() {
    let a = build_operator(&ModelSpec::random_hermitian(10, 1)).unwrap();
    let b = build_operator(&ModelSpec::random_hermitian(10, 2)).unwrap();
    assert!((a.entries() - b.entries()).norm() > 1e-3);
}

#[test]
fn anderson_is_tridiagonal_with_bounded_potential() {
    let h = build_operator(&ModelSpec::anderson(50, 2.0, 3)).unwrap();
    let e = h.entries();
    for i in 0..50 {
        assert!(e[(i, i)].re.abs() <= 1.0 + 1e-15);
        for j in 0..50 {
            if i.abs_diff(j) > 1 {
                assert_eq!(e[(i, j)], c64(0.0, 0.0));
            }
        }
    }
}
