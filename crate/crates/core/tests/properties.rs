use std::f64::consts::PI;

use annuli_core::energy::{analytic_min_weighted_energy, reduced_energy};
use annuli_core::geometry::{make_radial_grid, make_sphere_quadrature, AnnulusPair, SpacingMode};
use annuli_core::maps::{exp_profile_from_boundary, inverted_pair, Orientation, RadialProfile};
use annuli_core::nitsche::{harmonic_profile_monotone, nitsche_condition};
use annuli_core::sphere_maps::{sphere_inequality_integral, MobiusTransform};
use annuli_core::variational::{el_residual, minimize_reduced_energy, weighted_harmonic_residual};
use annuli_core::AnnulusPairExact;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn radius() -> impl Strategy<Value = f64> {
    (0.1f64.ln()..10f64.ln()).prop_map(f64::exp)
}

prop_compose! {
    fn pair()(r in radius(), wr in 1.05f64..5.0, rs in radius(), ws in 1.0f64..5.0) -> AnnulusPair<f64> {
        AnnulusPair::from_radii(r, r * wr, rs, rs * ws).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minimizer_profiles_solve_the_el_equation(p in pair(), s in 0.0f64..1.0) {
        for orientation in [Orientation::Increasing, Orientation::Decreasing] {
            let h = exp_profile_from_boundary(&p, orientation).unwrap();
            let t = p.r() + s * (p.big_r() - p.r());
            let (v, d1, d2) = h.jet(t).unwrap();
            let scale = (v * d1.abs() + t * d1 * d1 + t * v * d2.abs()).max(1e-300);
            prop_assert!(el_residual(&h, t).unwrap().abs() <= 1e-10 * scale);
            let whr = weighted_harmonic_residual(&h, t).unwrap();
            prop_assert!(whr.abs() <= 1e-10 * scale / (t * t * v));
        }
    }

    #[test]
    fn minimizer_reduced_energy_matches_closed_form(p in pair()) {
        let h = exp_profile_from_boundary(&p, Orientation::Increasing).unwrap();
        let e = reduced_energy(&h, &p.domain, 64).unwrap();
        let min = analytic_min_weighted_energy(&p);
        prop_assert!((e - min).abs() <= 1e-9 * min, "{} vs {}", e, min);
        prop_assert!(min >= 8.0 * PI * (p.big_r() - p.r()) * (1.0 - 1e-12));
    }

    #[test]
    fn minimum_is_invariant_under_target_inversion(p in pair(), a in 0.1f64..10.0) {
        let q = inverted_pair(&p, a).unwrap();
        let (x, y) = (analytic_min_weighted_energy(&p), analytic_min_weighted_energy(&q));
        prop_assert!((x - y).abs() <= 1e-12 * x);
    }

    #[test]
    fn discrete_minimizer_is_close_to_closed_form(p in pair()) {
        let grid = make_radial_grid(&p.domain, 400, SpacingMode::UniformT).unwrap();
        let sol = minimize_reduced_energy(&p, &grid).unwrap();
        let min = analytic_min_weighted_energy(&p);
        prop_assert!((sol.energy - min).abs() <= 1e-4 * min);
        let h = exp_profile_from_boundary(&p, Orientation::Increasing).unwrap();
        for &t in grid.nodes() {
            let exact = h.value(t).unwrap();
            prop_assert!((sol.profile.value(t).unwrap() - exact).abs() <= 1e-4 * p.big_r_star());
        }
    }

    #[test]
    fn nitsche_condition_matches_monotonicity(p in pair()) {
        let verdict = nitsche_condition(&p).unwrap();
        prop_assert_eq!(verdict.admissible, harmonic_profile_monotone(&p));
    }

    #[test]
    fn exact_and_float_verdicts_agree(r in 1i64..50, dr in 1i64..50, rs in 1i64..50, drs in 0i64..50) {
        let q = |n: i64| BigRational::from_integer(BigInt::from(n));
        let exact: AnnulusPairExact = AnnulusPair::from_radii(q(r), q(r + dr), q(rs), q(rs + drs)).unwrap();
        let float = AnnulusPair::from_radii(r as f64, (r + dr) as f64, rs as f64, (rs + drs) as f64).unwrap();
        let (e, f) = (nitsche_condition(&exact).unwrap(), nitsche_condition(&float).unwrap());
        prop_assert_eq!(e.admissible, f.admissible);
    }

    #[test]
    fn mobius_maps_attain_sphere_bound(seed in any::<u64>(), t in 0.2f64..5.0) {
        let quad = make_sphere_quadrature::<f64>(32).unwrap();
        let m = MobiusTransform::random(&mut ChaCha8Rng::seed_from_u64(seed));
        let v = sphere_inequality_integral(&m, t, &quad).unwrap();
        prop_assert!((v - 8.0 * PI).abs() <= 1e-8, "{}", v);
    }
}

#[test]
fn constant_profile_is_stationary() {
    let h = RadialProfile::Exponential { a: 3.0, b: 0.0 };
    for i in 0..20 {
        let t = 0.5 + i as f64 * 0.1;
        assert_eq!(el_residual(&h, t).unwrap(), 0.0);
    }
}
