mod common;

use common::*;
use lapkit_core::linalg::{c64, CVector};
use lapkit_core::ls::{solve, LsProblem};
use lapkit_core::models::{build_operator, build_rigging, random_unit_vector, ModelSpec, RiggingSpec};
use lapkit_core::operator::{perturbed_operator, HermitianOperator};
use lapkit_core::probe::YLadder;
use lapkit_core::resonance::pick_nonresonant_r;
use lapkit_core::verifier::*;
use proptest::prelude::*;

fn planted_problem(n: usize, m: usize, seed: u64) -> LsProblem {
    let (h0, f, _) = planted_fixture(n, m, seed);
    let r = pick_nonresonant_r(&h0, &f, 0.0, 1e-3).unwrap();
    LsProblem::new(h0, f, 0.0, r).unwrap()
}

#[test]
fn concentration_on_planted_fixtures() {
    for (n, m, seed) in [(20, 1, 0), (20, 2, 1), (50, 3, 2), (50, 1, 3)] {
        let p = planted_problem(n, m, seed);
        let deltas = default_deltas(&p.h0, 0.0);
        let report = verify_theorem1(&p, &deltas, &Theorem1Tolerances::default(), 9);
        assert!(report.passed(), "n={n} m={m}: {:?} {:?}", report.forward, report.reverse);
        assert_eq!(report.upsilon_dimension, m);
        assert_eq!(report.eigenspace_dimension, m);
        assert_eq!(report.cells.len(), (m + 1) * deltas.len());
        for cell in &report.cells {
            assert!(cell.triangle_holds && cell.concentration_decreasing && cell.tail_decreasing);
        }
    }
}

/// `Im⟨f, R(x+iy) f⟩ = -Σ |c_k|² y / ((E_k - x)² + y²)` from an independent
/// eigendecomposition, with `f` built from the oracle resolvent of `H1`. The
/// scalar product is linear in its first slot, hence the sign.
fn density_lhs_oracle(p: &LsProblem, u: &CVector, x: f64, y: f64) -> f64 {
    let h1 = perturbed_operator(&p.h0, &p.rigging, p.r);
    let source = p.rigging.entries().adjoint() * (u * c64(p.r, 0.0));
    let f = resolvent_oracle(h1.entries(), c64(p.lambda, y)) * source;
    let (vals, q) = eig(p.h0.entries());
    let coeffs = q.adjoint() * f;
    -vals.iter().zip(coeffs.iter()).map(|(&e, c)| c.norm_sqr() * y / ((e - x).powi(2) + y * y)).sum::<f64>()
}

#[test]
fn density_identity_on_50_random_draws() {
    let mut worst = 0.0f64;
    let mut worst_mid = 0.0f64;
    for draw in 0..50u64 {
        let n = 10 + (draw as usize % 4) * 10;
        let h0 = build_operator(&ModelSpec::random_hermitian(n, draw)).unwrap();
        let f = build_rigging(&RiggingSpec::random(10.0, draw + 300), n).unwrap();
        let lambda = -0.5 + 0.02 * draw as f64;
        let r = pick_nonresonant_r(&h0, &f, lambda, 1e-3).unwrap();
        let p = LsProblem::new(h0, f, lambda, r).unwrap();
        let u = random_unit_vector(n, draw + 7);
        let run = Thm1Run::new(p.clone(), u.clone(), 0.1).unwrap();
        let x = lambda + [0.3, -0.05, 1.7, -2.2][draw as usize % 4];
        let y = [1.0, 0.1, 1e-2, 1e-3, 0.5][draw as usize % 5];
        match check_lemma2_identity(&run, x, y).unwrap() {
            Lemma2Outcome::Evaluated { lhs, residual, .. } => {
                worst = worst.max(residual);
                let oracle = density_lhs_oracle(&p, &u, x, y);
                assert!((lhs - oracle).abs() <= 1e-8 * oracle.abs().max(1e-12), "draw {draw}: {lhs} vs {oracle}");
            }
            Lemma2Outcome::NearSingular => panic!("x chosen away from λ"),
        }
        worst_mid = worst_mid.max(check_intermediate_identity(&run, x, y).unwrap());
    }
    assert!(worst <= 1e-9, "{worst:e}");
    assert!(worst_mid <= 1e-9, "{worst_mid:e}");
}

#[test]
fn density_identity_near_singular_is_flagged() {
    let p = planted_problem(20, 1, 0);
    let u = random_unit_vector(20, 1);
    let run = Thm1Run::new(p, u, 0.1).unwrap();
    assert_eq!(check_lemma2_identity(&run, 1e-10, 0.1).unwrap(), Lemma2Outcome::NearSingular);
}

#[test]
fn projection_quadrature_converges_on_10_fixtures() {
    let ladder = YLadder::new(0.1, 0.5, 12).unwrap();
    for seed in 0..10u64 {
        let h = build_operator(&ModelSpec::random_hermitian(30, seed)).unwrap();
        let (vals, _) = eig(h.entries());
        let (a, b) = (-0.4 + 0.01 * seed as f64, 0.6 + 0.01 * seed as f64);
        let gap = vals.iter().map(|&e| (e - a).abs().min((e - b).abs())).fold(f64::INFINITY, f64::min);
        let phi = random_unit_vector(30, seed) * c64(1.5, 0.0);
        let mass = projected_mass(&h, &phi, a, b);
        let oracle_mass: f64 = {
            let (vals, q) = eig(h.entries());
            let c = q.adjoint() * &phi;
            vals.iter().zip(c.iter()).filter(|(&e, _)| e > a && e < b).map(|(_, c)| c.norm_sqr()).sum()
        };
        assert!((mass - oracle_mass).abs() <= 1e-12);
        let values = stone_quadrature_check(&h, &phi, a, b, &ladder).unwrap();
        for (&y, v) in ladder.values().iter().zip(&values) {
            let bound = 5.0 * y * (1.0 + phi.norm_squared()) / gap;
            assert!((v - mass).abs() <= bound, "seed {seed} y {y}: {:e} > {bound:e}", (v - mass).abs());
        }
    }
}

#[test]
fn projection_quadrature_scalar_case() {
    let h = HermitianOperator::diagonal(&[0.0]);
    let phi = CVector::from_element(1, c64(1.0, 0.0));
    let ladder = YLadder::default();
    let values = stone_quadrature_check(&h, &phi, -1.0, 1.0, &ladder).unwrap();
    for (&y, v) in ladder.values().iter().zip(&values) {
        let expected = 2.0 / std::f64::consts::PI * (1.0 / y).atan();
        assert!((v - expected).abs() <= 1e-12);
    }
}

#[test]
fn endpoint_on_spectrum_is_rejected() {
    let h = HermitianOperator::diagonal(&[0.0, 1.0]);
    let phi = CVector::from_element(2, c64(1.0, 0.0));
    assert!(stone_quadrature_check(&h, &phi, 0.0, 0.5, &YLadder::default()).is_err());
}

#[test]
fn tail_integral_matches_quadrature() {
    let p = planted_problem(20, 1, 5);
    let sol = solve(&p).unwrap();
    let u = sol.kernel.column(0);
    let run = Thm1Run::from_solution(p.clone(), &sol, u, 0.2).unwrap();
    let y = 0.05;
    let closed = tail_integral(&run, y).unwrap();
    let f = run.f_vector(y).unwrap();
    let (vals, q) = eig(p.h0.entries());
    let c = q.adjoint() * f;
    let density = |x: f64| -> f64 { vals.iter().zip(c.iter()).map(|(&e, c)| c.norm_sqr() * y / ((e - x).powi(2) + y * y)).sum() };
    // x = λ ± δ ± tan(θ) on θ in (0, π/2), midpoint rule
    let steps = 200_000;
    let mut numeric = 0.0;
    for side in [-1.0, 1.0] {
        for k in 0..steps {
            let theta = (k as f64 + 0.5) / steps as f64 * std::f64::consts::FRAC_PI_2;
            let x = p.lambda + side * (0.2 + theta.tan());
            numeric += density(x) / theta.cos().powi(2) * std::f64::consts::FRAC_PI_2 / steps as f64;
        }
    }
    assert!((closed - numeric).abs() <= 1e-6 * closed.abs().max(1e-12), "{closed} vs {numeric}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn triangle_chain_holds(seed in 0u64..1000, m in 1usize..4, y in 1e-6f64..1.0, frac in 0.01f64..0.5) {
        let p = planted_problem(20, m, seed);
        let sol = solve(&p).unwrap();
        let delta = frac * local_gap(&p.h0, 0.0);
        for u in kernel_samples(&sol, seed) {
            let run = Thm1Run::from_solution(p.clone(), &sol, u, delta).unwrap();
            let row = run.row(y).unwrap();
            prop_assert!(row.approx_residual <= row.triangle_bound + 1e-12);
            prop_assert!(row.concentration_out <= 1.0 + 1e-12);
        }
    }
}
