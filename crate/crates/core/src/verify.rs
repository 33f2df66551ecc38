//! Seeded property checks over the whole crate, collected into a report.
//!
//! Every check records what it observed next to what it expected instead of
//! failing fast. Checks draw from independent random streams derived from
//! the suite seed, so a report is reproducible from `(seed, config)` alone.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{
    analytic_min_weighted_energy, dirichlet_lower_bound, energy_with, reduced_energy, EnergyKind, QuadOrders,
};
use crate::error::Result;
use crate::geometry::{make_radial_grid, make_sphere_quadrature, AnnulusPair, SpacingMode, Vec3};
use crate::maps::{
    exp_profile_from_boundary, inversion_transform, AnnulusMap, GeneralizedRadialMap, ModulatedRadialMap, Orientation,
    Progress, RadialProfile, SampledMap, SphericalModulation,
};
use crate::nitsche::{
    analytic_dirichlet_energy_radial, harmonic_profile_monotone, harmonic_radial_bvp, nitsche_condition,
};
use crate::sphere_maps::{gram_integral, sphere_inequality_integral, LinearSphereMap, MobiusTransform, SphereMap};
use crate::variational::{
    discrete_energy, el_residual, gradient_descent_minimize, minimize_reduced_energy, momentum_residual,
    reduced_energy_gradient, shoot_el, weighted_harmonic_residual, StepRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|observed − expected| ≤ tolerance`
    Equality,
    /// `observed ≥ expected − tolerance`
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub detail: String,
}

impl CheckResult {
    pub fn equality(
        name: impl Into<String>,
        observed: f64,
        expected: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed: (observed - expected).abs() <= tolerance,
            observed,
            expected,
            tolerance,
            comparison: Comparison::Equality,
            detail: detail.into(),
        }
    }

    pub fn lower_bound(
        name: impl Into<String>,
        observed: f64,
        bound: f64,
        tolerance: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            passed: observed >= bound - tolerance,
            observed,
            expected: bound,
            tolerance,
            comparison: Comparison::LowerBound,
            detail: detail.into(),
        }
    }

    /// A check that could not be evaluated.
    pub fn errored(name: impl Into<String>, err: &crate::Error) -> Self {
        Self {
            name: name.into(),
            passed: false,
            observed: f64::NAN,
            expected: f64::NAN,
            tolerance: f64::NAN,
            comparison: Comparison::Equality,
            detail: format!("error: {err}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute, for one-dimensional closed-form quadrature.
    pub quadrature_1d: f64,
    /// Relative, for three-dimensional energies.
    pub energy_3d: f64,
    /// Absolute, for analytic residuals.
    pub residual: f64,
    /// Absolute, for sphere integrals against `4π`/`8π`.
    pub sphere: f64,
    /// Absolute slack below the minimum allowed for competitors.
    pub lower_bound: f64,
    /// Sup-norm agreement of the three profile solvers.
    pub oracle: f64,
    /// Relative, analytic vs finite-difference gradient.
    pub gradient: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature_1d: 1e-8,
            energy_3d: 1e-4,
            residual: 1e-9,
            sphere: 1e-8,
            lower_bound: 1e-6,
            oracle: 1e-5,
            gradient: 1e-6,
        }
    }
}

impl Tolerances {
    /// Every tolerance set to `value`.
    pub fn uniform(value: f64) -> Self {
        Self {
            quadrature_1d: value,
            energy_3d: value,
            residual: value,
            sphere: value,
            lower_bound: value,
            oracle: value,
            gradient: value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    /// `[r, R, r★, R★]` for the single-pair checks.
    pub pair: [f64; 4],
    pub radial_order: usize,
    pub sphere_order: usize,
    pub grid_n: usize,
    /// Orders for the finite-difference energies of inverted maps.
    pub inversion_radial_order: usize,
    pub inversion_sphere_order: usize,
    pub n_competitors: usize,
    pub n_inversion_maps: usize,
    pub n_transforms: usize,
    pub n_perturbations: usize,
    pub sphere_radii: Vec<f64>,
    pub n_residual_profiles: usize,
    pub n_oracle_pairs: usize,
    pub n_gradient_states: usize,
    pub n_descent_pairs: usize,
    pub n_equivalence_pairs: usize,
    pub n_dirichlet_pairs: usize,
    pub n_ordering_pairs: usize,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            pair: [1.0, 2.0, 1.0, std::f64::consts::E],
            radial_order: 64,
            sphere_order: 32,
            grid_n: 1000,
            inversion_radial_order: 32,
            inversion_sphere_order: 16,
            n_competitors: 100,
            n_inversion_maps: 50,
            n_transforms: 20,
            n_perturbations: 20,
            sphere_radii: vec![1.0, 2.0, 5.0],
            n_residual_profiles: 20,
            n_oracle_pairs: 10,
            n_gradient_states: 50,
            n_descent_pairs: 20,
            n_equivalence_pairs: 1000,
            n_dirichlet_pairs: 20,
            n_ordering_pairs: 100,
            tolerances: Tolerances::default(),
        }
    }
}

impl SuiteConfig {
    pub fn pair(&self) -> Result<AnnulusPair<f64>> {
        let [r, big_r, rs, big_rs] = self.pair;
        AnnulusPair::from_radii(r, big_r, rs, big_rs)
    }

    pub fn orders(&self) -> QuadOrders {
        QuadOrders {
            radial: self.radial_order,
            sphere: self.sphere_order,
        }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// One property and the checks that exercise it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageEntry {
    pub property: String,
    pub checks: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub passed: bool,
    pub results: Vec<CheckResult>,
    pub coverage: Vec<CoverageEntry>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

/// Properties and the check-name prefixes that cover them.
const COVERAGE: &[(&str, &[&str])] = &[
    (
        "minimum energy value",
        &["minimum.reduced_closed_form", "minimum.map_energy"],
    ),
    (
        "minimum energy lower bound",
        &["minimum.competitors", "minimum.discrete"],
    ),
    (
        "equal energy of both minimizer orientations",
        &["minimum.orientations_equal"],
    ),
    ("inversion invariance", &["inversion."]),
    ("Gram determinant equality case", &["sphere.gram"]),
    (
        "sharp sphere inequality",
        &["sphere.conformal", "sphere.identity", "sphere.nonconformal"],
    ),
    (
        "Euler-Lagrange equation",
        &["residual.el", "residual.constant", "residual.discrete_order"],
    ),
    (
        "weighted-harmonic reduction",
        &["residual.weighted_harmonic", "residual.momentum"],
    ),
    ("radial Laplacian", &["dirichlet.laplacian"]),
    ("discrete solvers", &["oracle.", "gradient."]),
    ("Nitsche condition and monotonicity", &["nitsche."]),
    ("radial harmonic Dirichlet energy", &["dirichlet.closed_form"]),
    (
        "Dirichlet lower bound",
        &["dirichlet.lower_bound", "dirichlet.inner_radius_bound"],
    ),
];

fn coverage(results: &[CheckResult]) -> Vec<CoverageEntry> {
    COVERAGE
        .iter()
        .map(|(property, prefixes)| CoverageEntry {
            property: (*property).to_string(),
            checks: results
                .iter()
                .filter(|r| prefixes.iter().any(|p| r.name.starts_with(p)))
                .map(|r| r.name.clone())
                .collect(),
        })
        .collect()
}

/// Runs every check in declaration order. Individual failures are recorded
/// in the report; only an invalid configuration is an error.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    let start = Instant::now();
    let pair = config.pair()?;
    pair.require_positive()?;
    let mut results = Vec::new();
    results.extend(check_minimum_energy(&pair, config.n_competitors, config));
    results.push(check_inversion_invariance(&pair, config.n_inversion_maps, config));
    results.extend(check_sphere_inequality(
        config.n_transforms,
        config.n_perturbations,
        &config.sphere_radii,
        config,
    ));
    results.extend(check_residuals(&pair, config));
    results.extend(check_solvers(config));
    results.extend(check_radial_harmonic(config));
    let coverage = coverage(&results);
    Ok(SuiteReport {
        seed: config.seed,
        passed: results.iter().all(|r| r.passed),
        results,
        coverage,
        wall_time: start.elapsed(),
    })
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Four radii log-uniform in `[0.1, 10]`, redrawn until `r < R` and
/// `r★ < R★`.
pub fn random_pair<R: Rng + ?Sized>(rng: &mut R) -> AnnulusPair<f64> {
    let ordered = |rng: &mut R| loop {
        let (a, b) = (log_uniform(rng, 0.1, 10.0), log_uniform(rng, 0.1, 10.0));
        if a < b {
            return (a, b);
        }
    };
    let (r, big_r) = ordered(rng);
    let (rs, big_rs) = ordered(rng);
    AnnulusPair::from_radii(r, big_r, rs, big_rs).expect("ordered radii")
}

/// [`random_pair`] restricted to pairs admitting a radial harmonic
/// homeomorphism.
pub fn random_admissible_pair<R: Rng + ?Sized>(rng: &mut R) -> AnnulusPair<f64> {
    loop {
        let p = random_pair(rng);
        if nitsche_condition(&p).map(|v| v.admissible).unwrap_or(false) {
            return p;
        }
    }
}

/// Pairs on which the shooting slope bracket is known to work:
/// `r ∈ [0.2, 5]`, `R/r ∈ [1.2, 4]`, `r★ ∈ [0.2, 5]`, `R★/r★ ∈ [1.1, 5]`.
pub fn random_moderate_pair<R: Rng + ?Sized>(rng: &mut R) -> AnnulusPair<f64> {
    let r = log_uniform(rng, 0.2, 5.0);
    let big_r = r * rng.gen_range(1.2..4.0);
    let rs = log_uniform(rng, 0.2, 5.0);
    let big_rs = rs * rng.gen_range(1.1..5.0);
    AnnulusPair::from_radii(r, big_r, rs, big_rs).expect("ordered radii")
}

/// Random map of the annulus used by the inversion check: a minimizer,
/// another stationary profile, or a modulated competitor.
pub fn random_test_map<R: Rng + ?Sized>(pair: &AnnulusPair<f64>, rng: &mut R) -> Result<Box<dyn AnnulusMap<f64>>> {
    Ok(match rng.gen_range(0..3) {
        0 => {
            let orientation = if rng.gen_bool(0.5) {
                Orientation::Increasing
            } else {
                Orientation::Decreasing
            };
            Box::new(GeneralizedRadialMap::minimizer(
                pair,
                orientation,
                MobiusTransform::random(rng),
            )?)
        }
        1 => Box::new(GeneralizedRadialMap::new(
            RadialProfile::Exponential {
                a: rng.gen_range(0.5..2.0),
                b: rng.gen_range(-1.0..1.0),
            },
            MobiusTransform::random(rng),
            pair.domain.clone(),
        )),
        _ => Box::new(ModulatedRadialMap::random(pair, rng)?),
    })
}

fn relative_gap(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

/// Minimizer energies against the closed form, competitors against the
/// minimum, and the discrete minimizer under refinement.
pub fn check_minimum_energy(pair: &AnnulusPair<f64>, n_competitors: usize, config: &SuiteConfig) -> Vec<CheckResult> {
    let tol = config.tolerances;
    let orders = config.orders();
    let mut rng = config.rng(1);
    let min = analytic_min_weighted_energy(pair);
    let mut out = Vec::new();

    match exp_profile_from_boundary(pair, Orientation::Increasing)
        .and_then(|h| reduced_energy(&h, &pair.domain, orders.radial))
    {
        Ok(v) => out.push(CheckResult::equality(
            "minimum.reduced_closed_form",
            v,
            min,
            tol.quadrature_1d,
            "one-dimensional energy of the increasing minimizer",
        )),
        Err(e) => out.push(CheckResult::errored("minimum.reduced_closed_form", &e)),
    }

    let rotations: Vec<MobiusTransform<f64>> = std::iter::once(MobiusTransform::identity())
        .chain((0..3).map(|_| MobiusTransform::random(&mut rng)))
        .collect();
    for (k, rot) in rotations.iter().enumerate() {
        let mut energies = [0.0; 2];
        for (slot, (orientation, label)) in [
            (Orientation::Increasing, "increasing"),
            (Orientation::Decreasing, "decreasing"),
        ]
        .into_iter()
        .enumerate()
        {
            let name = format!("minimum.map_energy.{label}[{k}]");
            let report = GeneralizedRadialMap::minimizer(pair, orientation, *rot)
                .and_then(|f| energy_with(&f, &pair.domain, EnergyKind::Weighted, orders, true));
            match report {
                Ok(rep) => {
                    energies[slot] = rep.value;
                    out.push(CheckResult::equality(
                        name,
                        rep.value,
                        min,
                        tol.energy_3d * min,
                        format!(
                            "radial part {:.12e}, spherical part {:.12e}, refinement delta {:.3e}",
                            rep.radial_part,
                            rep.spherical_part,
                            rep.refinement_delta.unwrap_or(f64::NAN)
                        ),
                    ))
                }
                Err(e) => {
                    energies[slot] = f64::NAN;
                    out.push(CheckResult::errored(name, &e));
                }
            }
        }
        out.push(CheckResult::equality(
            format!("minimum.orientations_equal[{k}]"),
            energies[0] - energies[1],
            0.0,
            tol.energy_3d * min,
            "increasing minus decreasing minimizer energy",
        ));
    }

    // The unperturbed competitor is the minimizer itself.
    let competitor_orders = orders;
    let mut lowest = f64::INFINITY;
    let mut lowest_at = 0;
    let mut smallest_gap = f64::INFINITY;
    let mut failures = Vec::new();
    for k in 0..n_competitors {
        let map = if k == 0 {
            ModulatedRadialMap::new(
                pair,
                Progress::Optimal,
                0.0,
                1,
                SphericalModulation::radial(),
                MobiusTransform::random(&mut rng),
                Orientation::Increasing,
            )
        } else {
            ModulatedRadialMap::random(pair, &mut rng)
        };
        match map.and_then(|f| energy_with(&f, &pair.domain, EnergyKind::Weighted, competitor_orders, false)) {
            Ok(rep) => {
                if rep.value < lowest {
                    lowest = rep.value;
                    lowest_at = k;
                }
                if k > 0 {
                    smallest_gap = smallest_gap.min(rep.value - min);
                }
            }
            Err(e) => failures.push(format!("competitor {k}: {e}")),
        }
    }
    if n_competitors > 0 {
        let mut r = CheckResult::lower_bound(
            "minimum.competitors",
            lowest,
            min,
            tol.lower_bound,
            format!(
                "{n_competitors} competitors, lowest energy at index {lowest_at}, smallest gap of a perturbed competitor {smallest_gap:.3e}"
            ),
        );
        if !failures.is_empty() {
            r.passed = false;
            r.detail = format!("{}; {}", r.detail, failures.join("; "));
        }
        out.push(r);
    }

    let mut energies = Vec::new();
    for n in [125usize, 250, 500, 1000] {
        let sol =
            make_radial_grid(&pair.domain, n, SpacingMode::UniformT).and_then(|g| minimize_reduced_energy(pair, &g));
        match sol {
            Ok(s) => energies.push((n, s.energy)),
            Err(e) => {
                out.push(CheckResult::errored("minimum.discrete", &e));
                return out;
            }
        }
    }
    let decreasing = energies.windows(2).all(|w| w[1].1 <= w[0].1);
    let lowest_gap = energies.iter().map(|&(_, e)| e - min).fold(f64::INFINITY, f64::min);
    let listing = energies
        .iter()
        .map(|(n, e)| format!("n={n}: {e:.12e}"))
        .collect::<Vec<_>>()
        .join(", ");
    let mut one_sided = CheckResult::lower_bound(
        "minimum.discrete_one_sided",
        lowest_gap,
        0.0,
        0.0,
        format!("{listing}; monotone decreasing: {decreasing}"),
    );
    one_sided.passed &= decreasing;
    out.push(one_sided);
    let finest = energies[energies.len() - 1].1;
    out.push(CheckResult::equality(
        "minimum.discrete_value",
        relative_gap(finest, min),
        0.0,
        1e-5,
        "relative gap of the n=1000 discrete minimum",
    ));
    out
}

/// `𝓕[a·f/|f|²] = 𝓕[f]` for random maps and `a ∈ {0.5, 1, r★R★}`.
pub fn check_inversion_invariance(pair: &AnnulusPair<f64>, n_maps: usize, config: &SuiteConfig) -> CheckResult {
    let name = "inversion.invariance";
    let tol = 2.0 * config.tolerances.energy_3d;
    let orders = QuadOrders {
        radial: config.inversion_radial_order,
        sphere: config.inversion_sphere_order,
    };
    let mut rng = config.rng(2);
    let constants = [0.5, 1.0, pair.r_star() * pair.big_r_star()];
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for k in 0..n_maps {
        let map: Box<dyn AnnulusMap<f64>> = if k == 0 {
            Box::new(SampledMap::new(|x: Vec3<f64>| Ok(x), Some(pair.domain.clone())))
        } else {
            match random_test_map(pair, &mut rng) {
                Ok(m) => m,
                Err(e) => return CheckResult::errored(name, &e),
            }
        };
        let base = match energy_with(map.as_ref(), &pair.domain, EnergyKind::Weighted, orders, false) {
            Ok(r) => r.value,
            Err(e) => return CheckResult::errored(name, &e),
        };
        for &a in &constants {
            let inverted = match inversion_transform(map.as_ref(), a)
                .and_then(|g| energy_with(&g, &pair.domain, EnergyKind::Weighted, orders, false))
            {
                Ok(r) => r.value,
                Err(e) => return CheckResult::errored(name, &e),
            };
            let gap = relative_gap(inverted, base);
            if !(gap <= worst) {
                worst = gap;
                worst_at = format!("map {k}, a = {a}");
            }
        }
    }
    CheckResult::equality(
        name,
        worst,
        0.0,
        tol,
        format!("{n_maps} maps x 3 constants, largest relative change at {worst_at}"),
    )
}

/// Sphere integrals of Möbius maps and of non-conformal perturbations.
pub fn check_sphere_inequality(
    n_transforms: usize,
    n_perturbations: usize,
    radii: &[f64],
    config: &SuiteConfig,
) -> Vec<CheckResult> {
    let tol = config.tolerances.sphere;
    let mut rng = config.rng(3);
    let mut out = Vec::new();
    let quad = match make_sphere_quadrature::<f64>(config.sphere_order) {
        Ok(q) => q,
        Err(e) => return vec![CheckResult::errored("sphere.quadrature", &e)],
    };
    let quad = &quad;
    let eight_pi = 8.0 * PI;
    let four_pi = 4.0 * PI;

    match sphere_inequality_integral(&MobiusTransform::identity(), 1.0, quad) {
        Ok(v) => out.push(CheckResult::equality(
            "sphere.identity",
            v,
            eight_pi,
            tol,
            "identity at t = 1",
        )),
        Err(e) => out.push(CheckResult::errored("sphere.identity", &e)),
    }

    let transforms: Vec<MobiusTransform<f64>> = (0..n_transforms).map(|_| MobiusTransform::random(&mut rng)).collect();
    let worst = |values: Vec<Result<f64>>, target: f64| -> Result<f64> {
        let mut w = target;
        for v in values {
            let v = v?;
            if !((v - target).abs() <= (w - target).abs()) {
                w = v;
            }
        }
        Ok(w)
    };
    let conformal = worst(
        transforms
            .iter()
            .flat_map(|m| radii.iter().map(move |&t| sphere_inequality_integral(m, t, quad)))
            .collect(),
        eight_pi,
    );
    let detail = format!("{n_transforms} random transforms at t in {radii:?}; worst value");
    match conformal {
        Ok(v) => out.push(CheckResult::equality(
            "sphere.conformal_equality",
            v,
            eight_pi,
            tol,
            detail,
        )),
        Err(e) => out.push(CheckResult::errored("sphere.conformal_equality", &e)),
    }
    let gram = worst(
        transforms
            .iter()
            .flat_map(|m| radii.iter().map(move |&t| gram_integral(m, t, quad)))
            .collect(),
        four_pi,
    );
    match gram {
        Ok(v) => out.push(CheckResult::equality(
            "sphere.gram_conformal",
            v,
            four_pi,
            tol,
            "area of the image sphere for random transforms; worst value",
        )),
        Err(e) => out.push(CheckResult::errored("sphere.gram_conformal", &e)),
    }

    let mut perturbed: Vec<LinearSphereMap<f64>> = Vec::new();
    for _ in 0..n_perturbations {
        let axis = crate::maps::random_unit::<f64, _>(&mut rng);
        let amount = rng.gen_range(0.1..0.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        match LinearSphereMap::axial_stretch(axis, amount) {
            Ok(m) => perturbed.push(m.followed_by(MobiusTransform::random(&mut rng))),
            Err(e) => {
                out.push(CheckResult::errored("sphere.nonconformal_excess", &e));
                return out;
            }
        }
    }
    let mut excess = f64::INFINITY;
    let mut gram_worst = four_pi;
    let mut error = None;
    for m in &perturbed {
        for &t in radii {
            match (
                sphere_inequality_integral(m as &dyn SphereMap<f64>, t, quad),
                gram_integral(m as &dyn SphereMap<f64>, t, quad),
            ) {
                (Ok(v), Ok(g)) => {
                    excess = excess.min(v - eight_pi);
                    if (g - four_pi).abs() > (gram_worst - four_pi).abs() {
                        gram_worst = g;
                    }
                }
                (Err(e), _) | (_, Err(e)) => error = Some(e),
            }
        }
    }
    if let Some(e) = error {
        out.push(CheckResult::errored("sphere.nonconformal_excess", &e));
        return out;
    }
    if n_perturbations > 0 {
        out.push(CheckResult::lower_bound(
            "sphere.nonconformal_excess",
            excess,
            tol,
            0.0,
            format!(
                "smallest excess over 8π among {n_perturbations} axial stretches; must exceed the quadrature tolerance"
            ),
        ));
        // Diffeomorphisms of the sphere preserve total area.
        out.push(CheckResult::equality(
            "sphere.gram_nonconformal",
            gram_worst,
            four_pi,
            1e3 * tol,
            "area of the image sphere for the stretched maps; worst value (finite-difference differentials)",
        ));
    }
    out
}

fn max_abs_over<F: Fn(f64) -> Result<f64>>(ts: impl Iterator<Item = f64>, f: F) -> Result<f64> {
    let mut m = 0.0f64;
    for t in ts {
        let v = f(t)?.abs();
        if !(v <= m) {
            m = v;
        }
    }
    Ok(m)
}

/// Euler–Lagrange and weighted-harmonic residuals.
pub fn check_residuals(pair: &AnnulusPair<f64>, config: &SuiteConfig) -> Vec<CheckResult> {
    let tol = config.tolerances.residual;
    let mut rng = config.rng(4);
    let mut out = Vec::new();
    let profiles: Vec<RadialProfile<f64>> = (0..config.n_residual_profiles)
        .map(|_| RadialProfile::Exponential {
            a: rng.gen_range(0.5..2.0),
            b: rng.gen_range(-2.0..2.0),
        })
        .collect();
    let points = || (0..100).map(|i| 1.0 + i as f64 / 99.0);
    type Residual = fn(&RadialProfile<f64>, f64) -> Result<f64>;
    let residuals: [(&str, Residual); 3] = [
        ("residual.el_exponential", el_residual),
        ("residual.weighted_harmonic_exponential", weighted_harmonic_residual),
        ("residual.momentum_exponential", momentum_residual),
    ];
    for (name, f) in residuals {
        let worst = profiles
            .iter()
            .map(|h| max_abs_over(points(), |t| f(h, t)))
            .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)));
        match worst {
            Ok(w) => out.push(CheckResult::equality(
                name,
                w,
                0.0,
                tol,
                format!(
                    "{} random profiles a·exp(b/t), 100 points each on [1, 2]",
                    profiles.len()
                ),
            )),
            Err(e) => out.push(CheckResult::errored(name, &e)),
        }
    }
    let one = RadialProfile::Exponential { a: 1.0, b: 0.0 };
    match max_abs_over(points(), |t| el_residual(&one, t))
        .and_then(|a| max_abs_over(points(), |t| weighted_harmonic_residual(&one, t)).map(|b| a.max(b)))
    {
        Ok(w) => out.push(CheckResult::equality("residual.constant_profile", w, 0.0, tol, "H = 1")),
        Err(e) => out.push(CheckResult::errored("residual.constant_profile", &e)),
    }

    // Nodal residuals of the discrete minimizer shrink like h².
    let mut maxima = Vec::new();
    for n in [125usize, 250, 500, 1000] {
        let r = make_radial_grid(&pair.domain, n, SpacingMode::UniformT)
            .and_then(|g| minimize_reduced_energy(pair, &g))
            .and_then(|s| {
                let nodes = s.profile.as_sampled().expect("sampled").grid().nodes().to_vec();
                max_abs_over(nodes[1..n].iter().copied(), |t| el_residual(&s.profile, t))
            });
        match r {
            Ok(m) => maxima.push(m),
            Err(e) => {
                out.push(CheckResult::errored("residual.discrete_order", &e));
                return out;
            }
        }
    }
    let ratios: Vec<f64> = maxima.windows(2).map(|w| w[0] / w[1]).collect();
    let furthest = ratios.iter().copied().fold(4.0f64, |acc, r| {
        if (r - 4.0).abs() > (acc - 4.0).abs() || r.is_nan() {
            r
        } else {
            acc
        }
    });
    out.push(CheckResult::equality(
        "residual.discrete_order",
        furthest,
        4.0,
        0.8,
        format!(
            "max nodal residuals for n = 125..1000: [{}]; ratios {:.4?}",
            maxima.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(", "),
            ratios
        ),
    ));
    out
}

/// Agreement of closed form, shooting and discrete minimizer; gradient
/// checks; descent against the direct solve.
pub fn check_solvers(config: &SuiteConfig) -> Vec<CheckResult> {
    let tol = config.tolerances;
    let mut out = Vec::new();

    let mut rng = config.rng(5);
    let mut worst = 0.0f64;
    let mut worst_pair = None;
    let mut error = None;
    for _ in 0..config.n_oracle_pairs {
        let p = random_moderate_pair(&mut rng);
        match three_way_gap(&p, config.grid_n) {
            Ok(g) => {
                if !(g <= worst) {
                    worst = g;
                    worst_pair = Some(p);
                }
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    match error {
        Some(e) => out.push(CheckResult::errored("oracle.three_way", &e)),
        None => out.push(CheckResult::equality(
            "oracle.three_way",
            worst,
            0.0,
            tol.oracle,
            format!(
                "{} random pairs, n = {}; largest pairwise sup-norm gap at {:?}",
                config.n_oracle_pairs,
                config.grid_n,
                worst_pair.map(|p| [p.r(), p.big_r(), p.r_star(), p.big_r_star()])
            ),
        )),
    }

    let mut rng = config.rng(6);
    match gradient_fd_gap(config.n_gradient_states, &mut rng) {
        Ok(g) => out.push(CheckResult::equality(
            "gradient.finite_difference",
            g,
            0.0,
            tol.gradient,
            format!(
                "{} random log-profiles, central differences with step 1e-6",
                config.n_gradient_states
            ),
        )),
        Err(e) => out.push(CheckResult::errored("gradient.finite_difference", &e)),
    }

    let mut rng = config.rng(7);
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    let mut error = None;
    for _ in 0..config.n_descent_pairs {
        let p = random_moderate_pair(&mut rng);
        let r = make_radial_grid(&p.domain, 200, SpacingMode::UniformT).and_then(|g| {
            let direct = minimize_reduced_energy(&p, &g)?;
            let gd = gradient_descent_minimize(&p, &g, StepRule::BarzilaiBorwein, 50_000, 1e-9)?;
            Ok((relative_gap(gd.energy, direct.energy), gd.converged))
        });
        match r {
            Ok((gap, converged)) => {
                worst = worst.max(gap);
                unconverged += usize::from(!converged);
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    match error {
        Some(e) => out.push(CheckResult::errored("gradient.descent_agreement", &e)),
        None => {
            let mut r = CheckResult::equality(
                "gradient.descent_agreement",
                worst,
                0.0,
                1e-6,
                format!(
                    "{} random pairs, n = 200; {unconverged} did not converge",
                    config.n_descent_pairs
                ),
            );
            r.passed &= unconverged == 0;
            out.push(r);
        }
    }
    out
}

/// Largest pairwise nodal sup-norm gap between the closed-form minimizer,
/// the shooting solution and the discrete minimizer on a uniform grid.
pub fn three_way_gap(pair: &AnnulusPair<f64>, n: usize) -> Result<f64> {
    let grid = make_radial_grid(&pair.domain, n, SpacingMode::UniformT)?;
    let closed = exp_profile_from_boundary(pair, Orientation::Increasing)?;
    let shot = shoot_el(pair, n, 1e-12)?;
    let discrete = minimize_reduced_energy(pair, &grid)?;
    let mut gap = 0.0f64;
    for &t in grid.nodes() {
        let a = closed.value(t)?;
        let b = shot.profile.value(t)?;
        let c = discrete.profile.value(t)?;
        gap = gap.max((a - b).abs()).max((a - c).abs()).max((b - c).abs());
    }
    Ok(gap)
}

/// Largest relative sup-norm gap between the analytic gradient of the
/// discrete energy and central differences (step `1e-6`), over random
/// states on random moderate pairs.
pub fn gradient_fd_gap<R: Rng + ?Sized>(n_states: usize, rng: &mut R) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..n_states {
        let p = random_moderate_pair(rng);
        let grid = make_radial_grid(&p.domain, 50, SpacingMode::UniformT)?;
        let (k0, kn) = (p.r_star().ln(), p.big_r_star().ln());
        let mut k: Vec<f64> = grid.nodes().iter().map(|_| rng.gen_range(k0 - 0.5..kn + 0.5)).collect();
        k[0] = k0;
        let last = k.len() - 1;
        k[last] = kn;
        let an = reduced_energy_gradient(&k, &grid)?;
        let scale = an.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let mut err = 0.0f64;
        for j in 1..last {
            let mut kp = k.clone();
            let mut km = k.clone();
            kp[j] += 1e-6;
            km[j] -= 1e-6;
            let fd = (discrete_energy(&kp, &grid)? - discrete_energy(&km, &grid)?) / 2e-6;
            err = err.max((fd - an[j - 1]).abs());
        }
        worst = worst.max(err / scale);
    }
    Ok(worst)
}

/// Radial harmonic maps: the Nitsche condition against monotonicity, the
/// closed-form Dirichlet energy against quadrature, and the Dirichlet
/// lower bounds.
pub fn check_radial_harmonic(config: &SuiteConfig) -> Vec<CheckResult> {
    let tol = config.tolerances;
    let mut out = Vec::new();

    let mut rng = config.rng(8);
    let mut mismatches = Vec::new();
    let mut admissible = 0;
    for k in 0..config.n_equivalence_pairs {
        let p = random_pair(&mut rng);
        match nitsche_condition(&p) {
            Ok(v) => {
                admissible += usize::from(v.admissible);
                if v.admissible != harmonic_profile_monotone(&p) {
                    mismatches.push(k);
                }
            }
            Err(e) => {
                out.push(CheckResult::errored("nitsche.equivalence", &e));
                break;
            }
        }
    }
    out.push(CheckResult::equality(
        "nitsche.equivalence",
        mismatches.len() as f64,
        0.0,
        0.0,
        format!(
            "{} random pairs ({admissible} admissible); mismatches at {:?}",
            config.n_equivalence_pairs, mismatches
        ),
    ));
    let thin = AnnulusPair::from_radii(1.0, 2.0, 1.0, 1.01).expect("valid pair");
    out.push(CheckResult::equality(
        "nitsche.inadmissible_not_monotone",
        f64::from(u8::from(harmonic_profile_monotone(&thin))),
        0.0,
        0.0,
        "pair (1, 2, 1, 1.01)",
    ));

    let spot = AnnulusPair::from_radii(1.0, 2.0, 1.0, 1.2).expect("valid pair");
    out.push(CheckResult::equality(
        "dirichlet.closed_form_spot",
        analytic_dirichlet_energy_radial(&spot),
        4.0 * PI * 17.0 / 7.0,
        1e-12,
        "pair (1, 2, 1, 1.2)",
    ));

    let mut rng = config.rng(9);
    let orders = config.orders();
    let mut worst = 0.0f64;
    let mut laplacian = 0.0f64;
    let mut error = None;
    for _ in 0..config.n_dirichlet_pairs {
        let p = random_admissible_pair(&mut rng);
        let h = harmonic_radial_bvp(&p);
        let f = GeneralizedRadialMap::new(h.clone(), MobiusTransform::identity(), p.domain.clone());
        let (r, big_r) = (p.r(), p.big_r());
        let lap = max_abs_over((1..100).map(|i| r + (big_r - r) * i as f64 / 100.0), |t| {
            Ok(crate::variational::laplacian_coefficient(&h, t)? * t * t / h.value(t)?)
        });
        match (energy_with(&f, &p.domain, EnergyKind::Dirichlet, orders, false), lap) {
            (Ok(rep), Ok(l)) => {
                worst = worst.max(relative_gap(rep.value, analytic_dirichlet_energy_radial(&p)));
                laplacian = laplacian.max(l);
            }
            (Err(e), _) | (_, Err(e)) => {
                error = Some(e);
                break;
            }
        }
    }
    match error {
        Some(e) => out.push(CheckResult::errored("dirichlet.closed_form_quadrature", &e)),
        None => {
            out.push(CheckResult::equality(
                "dirichlet.closed_form_quadrature",
                worst,
                0.0,
                tol.energy_3d,
                format!(
                    "{} random admissible pairs; largest relative gap",
                    config.n_dirichlet_pairs
                ),
            ));
            out.push(CheckResult::equality(
                "dirichlet.laplacian_vanishes",
                laplacian,
                0.0,
                tol.residual,
                "radial Laplacian coefficient of the boundary-fitted harmonic profile, scaled by t²/H",
            ));
        }
    }

    // Lower bounds for the Dirichlet energy of the radial harmonic map.
    let mut rng = config.rng(10);
    let mut violations = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut worst_ratio = 0.0f64;
    let mut worst_pair = [0.0; 4];
    let mut inner_margin = f64::INFINITY;
    for _ in 0..config.n_ordering_pairs {
        let p = random_admissible_pair(&mut rng);
        let x = analytic_dirichlet_energy_radial(&p);
        let y = dirichlet_lower_bound(&p);
        let margin = (x - y) / x;
        if margin < worst_margin {
            worst_margin = margin;
            worst_ratio = y / x;
            worst_pair = [p.r(), p.big_r(), p.r_star(), p.big_r_star()];
        }
        if !(y < x) {
            violations.push(worst_pair_string(&p));
        }
        let corrected = p.r_star() * p.r_star() * analytic_min_weighted_energy(&p);
        inner_margin = inner_margin.min((x - corrected) / x);
    }
    if config.n_ordering_pairs > 0 {
        let mut r = CheckResult::lower_bound(
            "dirichlet.lower_bound_ordering",
            worst_margin,
            0.0,
            0.0,
            format!(
                "(X − Y)/X with Y = minimum weighted energy / R★², X = radial harmonic energy; {} of {} admissible pairs violate Y < X; worst pair {:?} with Y/X = {:.6e}",
                violations.len(),
                config.n_ordering_pairs,
                worst_pair,
                worst_ratio
            ),
        );
        r.passed &= violations.is_empty();
        out.push(r);
        out.push(CheckResult::lower_bound(
            "dirichlet.inner_radius_bound",
            inner_margin,
            0.0,
            0.0,
            "(X − r★²·minimum weighted energy)/X, from |h| ≥ r★; smallest value over the same pairs",
        ));
    }
    out
}

fn worst_pair_string(p: &AnnulusPair<f64>) -> String {
    format!(
        "({:.4}, {:.4}, {:.4}, {:.4})",
        p.r(),
        p.big_r(),
        p.r_star(),
        p.big_r_star()
    )
}
