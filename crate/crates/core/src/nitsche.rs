//! Radial Euclidean-harmonic maps between annuli.
//!
//! The radial harmonic profiles are `H(t) = a·t + b/t²`. The one through the
//! boundary data is a homeomorphism iff the target is not too thin:
//! `r★/R★ ≤ 3rR²/(r³ + 2R³)`.
//!
//! Threshold and coefficients are rational in the radii and are computed for
//! any [`Field`], so the condition can be decided exactly on rational input.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::AnnulusPair;
use crate::maps::RadialProfile;
use crate::scalar::{Field, Real};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NitscheVerdict<T> {
    /// `margin ≥ 0`
    pub admissible: bool,
    /// `r★/R★`
    pub ratio: T,
    /// `3rR²/(r³ + 2R³)`
    pub threshold: T,
    /// `threshold − ratio`; snapped to zero within the scalar's comparison
    /// slack.
    pub margin: T,
}

/// `3rR²/(r³ + 2R³)`; equals 1 at `r = R`.
pub fn nitsche_threshold<T: Field>(r: T, big_r: T) -> T {
    let r3 = r.clone() * r.clone() * r.clone();
    let big_r2 = big_r.clone() * big_r.clone();
    let num = T::three() * r * big_r2.clone();
    num / (r3 + T::two() * big_r2 * big_r)
}

pub fn nitsche_condition<T: Field>(pair: &AnnulusPair<T>) -> Result<NitscheVerdict<T>> {
    if !(pair.big_r_star() > T::zero()) {
        return Err(invalid("outer target radius must be positive"));
    }
    let ratio = pair.r_star() / pair.big_r_star();
    let threshold = nitsche_threshold(pair.r(), pair.big_r());
    let mut margin = threshold.clone() - ratio.clone();
    let slack = T::comparison_slack(&threshold);
    let abs = if margin < T::zero() {
        -margin.clone()
    } else {
        margin.clone()
    };
    if abs <= slack {
        margin = T::zero();
    }
    Ok(NitscheVerdict {
        admissible: margin >= T::zero(),
        ratio,
        threshold,
        margin,
    })
}

/// `(a, b)` with `a·t + b/t²` through `(r, r★)` and `(R, R★)`:
/// `a = (r²r★ − R²R★)/(r³ − R³)`, `b = r²R²(rR★ − Rr★)/(r³ − R³)`.
pub fn harmonic_coefficients<T: Field>(pair: &AnnulusPair<T>) -> (T, T) {
    let (r, big_r, rs, big_rs) = (pair.r(), pair.big_r(), pair.r_star(), pair.big_r_star());
    let r2 = r.clone() * r.clone();
    let big_r2 = big_r.clone() * big_r.clone();
    let den = r2.clone() * r.clone() - big_r2.clone() * big_r.clone();
    let a = (r2.clone() * rs.clone() - big_r2.clone() * big_rs.clone()) / den.clone();
    let b = r2 * big_r2 * (r * big_rs - big_r * rs) / den;
    (a, b)
}

pub fn harmonic_radial_bvp<T: Real>(pair: &AnnulusPair<T>) -> RadialProfile<T> {
    let (a, b) = harmonic_coefficients(pair);
    RadialProfile::Harmonic { a, b }
}

/// Number of sample points used by [`harmonic_profile_monotone`].
pub const MONOTONE_SAMPLES: usize = 2001;

/// `Ḣ ≥ 0` on `[r, R]` for the boundary-fitted harmonic profile, checked on
/// a uniform grid that includes both endpoints. A relative slack of `1e-12`
/// lets the borderline case `Ḣ(r) = 0` count as monotone.
pub fn harmonic_profile_monotone<T: Real>(pair: &AnnulusPair<T>) -> bool {
    let (a, b) = harmonic_coefficients(pair);
    let (r, big_r) = (pair.r(), pair.big_r());
    let mut min = T::infinity();
    let mut scale = a.abs();
    for i in 0..MONOTONE_SAMPLES {
        let t = if i + 1 == MONOTONE_SAMPLES {
            big_r
        } else {
            r + (big_r - r) * T::from_usize_lossy(i) / T::from_usize_lossy(MONOTONE_SAMPLES - 1)
        };
        let tail = T::lit(2.0) * b / (t * t * t);
        min = min.min(a - tail);
        scale = scale.max(tail.abs());
    }
    min >= -T::lit(1e-12) * scale
}

/// `𝓔` of the radial harmonic map divided by `4π`, exact in any field:
/// `(r(r³+2R³)r★² − 6r²R²r★R★ + R(2r³+R³)R★²)/(R³ − r³)`.
pub fn dirichlet_energy_radial_over_4pi<T: Field>(pair: &AnnulusPair<T>) -> T {
    let (r, big_r, rs, big_rs) = (pair.r(), pair.big_r(), pair.r_star(), pair.big_r_star());
    let r3 = r.clone() * r.clone() * r.clone();
    let big_r3 = big_r.clone() * big_r.clone() * big_r.clone();
    let six = T::three() * T::two();
    let t1 = r.clone() * (r3.clone() + T::two() * big_r3.clone()) * rs.clone() * rs.clone();
    let t2 = six * r.clone() * r * big_r.clone() * big_r.clone() * rs * big_rs.clone();
    let t3 = big_r * (T::two() * r3.clone() + big_r3.clone()) * big_rs.clone() * big_rs;
    (t1 - t2 + t3) / (big_r3 - r3)
}

pub fn analytic_dirichlet_energy_radial<T: Real>(pair: &AnnulusPair<T>) -> T {
    T::sphere_area() * dirichlet_energy_radial_over_4pi(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::dirichlet_energy;
    use crate::geometry::Vec3;
    use crate::maps::{GeneralizedRadialMap, SampledMap};
    use crate::sphere_maps::MobiusTransform;
    use crate::variational::laplacian_coefficient;
    use approx::assert_relative_eq;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use std::f64::consts::PI;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn pair(r: f64, big_r: f64, rs: f64, big_rs: f64) -> AnnulusPair<f64> {
        AnnulusPair::from_radii(r, big_r, rs, big_rs).unwrap()
    }

    #[test]
    fn threshold_examples() {
        let v = nitsche_condition(&pair(1.0, 2.0, 1.0, 2.0)).unwrap();
        assert!(v.admissible);
        assert_relative_eq!(v.threshold, 12.0 / 17.0, max_relative = 1e-15);
        assert_eq!(v.ratio, 0.5);
        assert!(!nitsche_condition(&pair(1.0, 2.0, 1.0, 1.01)).unwrap().admissible);
        assert_eq!(nitsche_threshold(1.7, 1.7), 1.0);
    }

    #[test]
    fn exact_threshold_and_boundary_case() {
        let p = AnnulusPair::from_radii(q(1, 1), q(2, 1), q(12, 1), q(17, 1)).unwrap();
        let v = nitsche_condition(&p).unwrap();
        assert_eq!(v.threshold, q(12, 17));
        assert_eq!(v.margin, q(0, 1));
        assert!(v.admissible);
        let p = AnnulusPair::from_radii(q(1, 1), q(2, 1), q(1_200_001, 100_000), q(1_700_000, 100_000)).unwrap();
        assert!(!nitsche_condition(&p).unwrap().admissible);
    }

    #[test]
    fn exact_bvp_coefficients() {
        let p = AnnulusPair::from_radii(q(1, 1), q(2, 1), q(1, 1), q(2, 1)).unwrap();
        let (a, b) = harmonic_coefficients(&p);
        assert_eq!(a.clone() + b.clone(), q(1, 1));
        assert_eq!(a * q(2, 1) + b / q(4, 1), q(2, 1));
        let p = AnnulusPair::from_radii(q(1, 1), q(2, 1), q(1, 1), q(6, 5)).unwrap();
        assert_eq!(dirichlet_energy_radial_over_4pi(&p), q(17, 7));
    }

    #[test]
    fn bvp_hits_boundary_values() {
        let p = pair(1.0, 2.0, 1.0, 2.0);
        let h = harmonic_radial_bvp(&p);
        assert_relative_eq!(h.value(1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(h.value(2.0).unwrap(), 2.0, max_relative = 1e-15);
        // Direct substitution into the closed form at t = 1.5.
        let (r, big_r, rs, big_rs, t): (f64, f64, f64, f64, f64) = (1.0, 2.0, 1.0, 2.0, 1.5);
        let direct = r * r * big_r * big_r * (-big_r * rs + r * big_rs) / ((r.powi(3) - big_r.powi(3)) * t * t)
            + (r * r * rs - big_r * big_r * big_rs) * t / (r.powi(3) - big_r.powi(3));
        assert_relative_eq!(h.value(1.5).unwrap(), direct, max_relative = 1e-15);
        for i in 1..100 {
            let t = 1.0 + i as f64 / 100.0;
            assert!(laplacian_coefficient(&h, t).unwrap().abs() <= 1e-9);
        }
    }

    #[test]
    fn scaling_pair_gives_linear_profile() {
        let p = pair(0.7, 1.9, 0.7 * 2.5, 1.9 * 2.5);
        let (a, b) = harmonic_coefficients(&p);
        assert_relative_eq!(a, 2.5, max_relative = 1e-14);
        assert!(b.abs() < 1e-14);
        let e = analytic_dirichlet_energy_radial(&p);
        let f = SampledMap::new(|x: Vec3<f64>| Ok(x * 2.5), None);
        let numeric = dirichlet_energy(&f, &p, 16, 8).unwrap().value;
        assert_relative_eq!(e, numeric, max_relative = 1e-9);
        // 3λ² times the volume.
        let vol = 4.0 * PI / 3.0 * (1.9f64.powi(3) - 0.7f64.powi(3));
        assert_relative_eq!(e, 3.0 * 6.25 * vol, max_relative = 1e-13);
    }

    #[test]
    fn dirichlet_formula_spot_value() {
        let e = analytic_dirichlet_energy_radial(&pair(1.0, 2.0, 1.0, 1.2));
        assert_relative_eq!(e, 4.0 * PI * 17.0 / 7.0, max_relative = 1e-14);
        let p = pair(1.0, 2.0, 1.0, 1.2);
        let f = GeneralizedRadialMap::new(harmonic_radial_bvp(&p), MobiusTransform::identity(), p.domain.clone());
        let numeric = dirichlet_energy(&f, &p, 64, 32).unwrap().value;
        assert_relative_eq!(numeric, e, max_relative = 1e-4);
    }

    #[test]
    fn monotonicity_examples() {
        assert!(harmonic_profile_monotone(&pair(1.0, 2.0, 1.0, 2.0)));
        assert!(!harmonic_profile_monotone(&pair(1.0, 2.0, 1.0, 1.01)));
        let p = pair(1.0, 2.0, 12.0, 17.0);
        assert!(harmonic_profile_monotone(&p));
        assert!(nitsche_condition(&p).unwrap().admissible);
        // The binding endpoint is the inner sphere.
        let h = harmonic_radial_bvp(&p);
        assert!(h.derivative(1.0, 1).unwrap().abs() <= 1e-9);
        assert!(h.derivative(2.0, 1).unwrap() > 1.0);
    }
}
