//! Radial profiles and maps between annuli.
//!
//! The central objects are generalized radial maps `f(x) = H(|x|)·T(x/|x|)`
//! with `T` a Möbius transform of the sphere. Everything else here is a test
//! map: inversions of other maps, sampled and perturbed profiles, and
//! angularly modulated competitors.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, invalid, Error, Result};
use crate::fd::{apply, fornberg_weights};
use crate::geometry::{Annulus, AnnulusPair, Mat3, RadialGrid, SpherePoint, Vec3};
use crate::scalar::Real;
use crate::sphere_maps::MobiusTransform;

/// A positive function `H` of the radius.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile<T> {
    /// `H(t) = a·e^{b/t}`, the stationary profiles of the weighted problem.
    Exponential {
        a: T,
        b: T,
    },
    /// `H(t) = a·t + b/t²`, the radial Euclidean-harmonic profiles.
    Harmonic {
        a: T,
        b: T,
    },
    Sampled(SampledProfile<T>),
}

/// Grid samples of a profile. Values interpolate linearly; derivatives are
/// finite differences at the nodes, interpolated linearly in between.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile<T> {
    grid: RadialGrid<T>,
    values: Vec<T>,
    first: Vec<T>,
    second: Vec<T>,
}

impl<T: Real> SampledProfile<T> {
    pub fn new(grid: RadialGrid<T>, values: Vec<T>) -> Result<Self> {
        let nodes = grid.nodes();
        if values.len() != nodes.len() {
            return Err(invalid(format!(
                "{} values for {} grid nodes",
                values.len(),
                nodes.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v > T::zero())) {
            return Err(invalid(format!("sampled profile not positive at node {i}")));
        }
        let n = nodes.len();
        let mut first = vec![T::zero(); n];
        let mut second = vec![T::zero(); n];
        for i in 0..n {
            // Central three-point stencils inside, one-sided at the ends
            // (four points for the second derivative when available).
            let (d1_range, d2_range) = if i == 0 {
                (0..3, 0..4.min(n))
            } else if i == n - 1 {
                (n - 3..n, n.saturating_sub(4)..n)
            } else {
                (i - 1..i + 2, i - 1..i + 2)
            };
            let w1 = fornberg_weights(nodes[i], &nodes[d1_range.clone()], 1);
            first[i] = apply(&w1[1], &values[d1_range]);
            let w2 = fornberg_weights(nodes[i], &nodes[d2_range.clone()], 2);
            second[i] = apply(&w2[2], &values[d2_range]);
        }
        Ok(Self {
            grid,
            values,
            first,
            second,
        })
    }

    /// Samples `profile` at the grid nodes.
    pub fn sample(profile: &RadialProfile<T>, grid: &RadialGrid<T>) -> Result<Self> {
        let values = grid
            .nodes()
            .iter()
            .map(|&t| profile.value(t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Nodal finite-difference derivatives of order 1 or 2.
    pub fn nodal_derivatives(&self, order: usize) -> &[T] {
        if order == 1 {
            &self.first
        } else {
            &self.second
        }
    }

    fn interpolate(&self, data: &[T], t: T) -> Result<T> {
        let i = self.grid.locate(t)?;
        let nodes = self.grid.nodes();
        let s = (t - nodes[i]) / (nodes[i + 1] - nodes[i]);
        Ok(data[i] + (data[i + 1] - data[i]) * s)
    }
}

impl<T: Real> RadialProfile<T> {
    pub fn value(&self, t: T) -> Result<T> {
        match self {
            Self::Exponential { a, b } => Ok(*a * (*b / positive_radius(t)?).exp()),
            Self::Harmonic { a, b } => {
                let t = positive_radius(t)?;
                Ok(*a * t + *b / (t * t))
            }
            Self::Sampled(s) => s.interpolate(&s.values, t),
        }
    }

    /// `H'(t)` for `order == 1`, `H''(t)` for `order == 2`.
    pub fn derivative(&self, t: T, order: usize) -> Result<T> {
        if order != 1 && order != 2 {
            return Err(invalid(format!("derivative order must be 1 or 2, got {order}")));
        }
        match self {
            Self::Exponential { a, b } => {
                let t = positive_radius(t)?;
                let h = *a * (*b / t).exp();
                let t2 = t * t;
                let d1 = -h * *b / t2;
                Ok(if order == 1 {
                    d1
                } else {
                    // d/dt(−b H/t²) = −b H'/t² + 2bH/t³
                    -*b * d1 / t2 + T::lit(2.0) * *b * h / (t2 * t)
                })
            }
            Self::Harmonic { a, b } => {
                let t = positive_radius(t)?;
                let t3 = t * t * t;
                Ok(if order == 1 {
                    *a - T::lit(2.0) * *b / t3
                } else {
                    T::lit(6.0) * *b / (t3 * t)
                })
            }
            Self::Sampled(s) => s.interpolate(s.nodal_derivatives(order), t),
        }
    }

    /// `(H, H', H'')` at `t`.
    pub fn jet(&self, t: T) -> Result<(T, T, T)> {
        Ok((self.value(t)?, self.derivative(t, 1)?, self.derivative(t, 2)?))
    }

    pub fn as_sampled(&self) -> Option<&SampledProfile<T>> {
        match self {
            Self::Sampled(s) => Some(s),
            _ => None,
        }
    }
}

fn positive_radius<T: Real>(t: T) -> Result<T> {
    if t > T::zero() {
        Ok(t)
    } else {
        Err(domain(format!("radius {t} must be positive")))
    }
}

pub fn profile_eval<T: Real>(h: &RadialProfile<T>, t: T) -> Result<T> {
    h.value(t)
}

pub fn profile_derivative<T: Real>(h: &RadialProfile<T>, t: T, order: usize) -> Result<T> {
    h.derivative(t, order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Inner boundary to inner boundary (`H₁`).
    Increasing,
    /// Inner boundary to outer boundary (`H₂ = r★R★/H₁`).
    Decreasing,
}

/// The stationary profile through the boundary data:
/// `H₁(t) = r★·(R★/r★)^{R(t−r)/((R−r)t)}` or `H₂(t) = r★R★/H₁(t)`.
pub fn exp_profile_from_boundary<T: Real>(pair: &AnnulusPair<T>, orientation: Orientation) -> Result<RadialProfile<T>> {
    pair.require_positive()?;
    let (r, big_r, rs, big_rs) = (pair.r(), pair.big_r(), pair.r_star(), pair.big_r_star());
    let log_ratio = (big_rs / rs).ln();
    // R(t−r)/((R−r)t) = R/(R−r) − rR/((R−r)t)
    let c = big_r / (big_r - r);
    let d = r * big_r / (big_r - r);
    Ok(match orientation {
        Orientation::Increasing => RadialProfile::Exponential {
            a: rs * (log_ratio * c).exp(),
            b: -log_ratio * d,
        },
        Orientation::Decreasing => RadialProfile::Exponential {
            a: big_rs * (-log_ratio * c).exp(),
            b: log_ratio * d,
        },
    })
}

/// Pointwise ingredients of the energy densities, split as
/// `‖Df‖² = |∇ρ|² + ρ²‖DS‖²` for `f = ρ·S`, `|S| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityParts<T> {
    /// `ρ² = |f|²`
    pub image_norm_sq: T,
    /// `|∇ρ|²`
    pub radial: T,
    /// `ρ²‖DS‖²`
    pub spherical: T,
}

impl<T: Real> DensityParts<T> {
    /// Splits a differential by the decomposition above.
    pub fn from_differential(f: Vec3<T>, df: &Mat3<T>) -> Self {
        let rho_sq = f.norm_sq();
        let total = df.frobenius_sq();
        // ∇ρ = Dfᵀ f / |f|
        let grad_sq = if rho_sq > T::zero() {
            df.transpose_apply(f).norm_sq() / rho_sq
        } else {
            T::zero()
        };
        Self {
            image_norm_sq: rho_sq,
            radial: grad_sq,
            spherical: total - grad_sq,
        }
    }

    /// `‖Df‖²`
    pub fn dirichlet(&self) -> T {
        self.radial + self.spherical
    }
}

/// A map defined on (a neighbourhood of) a domain annulus.
pub trait AnnulusMap<T: Real>: Send + Sync {
    fn eval(&self, x: Vec3<T>) -> Result<Vec3<T>>;

    /// Domain annulus, when the map knows it.
    fn domain(&self) -> Option<&Annulus<T>> {
        None
    }

    /// Relative finite-difference step: derivatives at `x` use `fd_step·|x|`.
    fn fd_step(&self) -> T {
        T::lit(1e-5)
    }

    /// Closed-form density ingredients at `x`, if the map has them.
    fn analytic_density(&self, _x: Vec3<T>) -> Option<Result<DensityParts<T>>> {
        None
    }
}

/// `f(x) = H(|x|)·T(x/|x|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedRadialMap<T> {
    pub profile: RadialProfile<T>,
    pub rotation: MobiusTransform<T>,
    pub domain: Annulus<T>,
}

impl<T: Real> GeneralizedRadialMap<T> {
    pub fn new(profile: RadialProfile<T>, rotation: MobiusTransform<T>, domain: Annulus<T>) -> Self {
        Self {
            profile,
            rotation,
            domain,
        }
    }

    /// The minimizer for `pair` with the given orientation and rotation.
    pub fn minimizer(pair: &AnnulusPair<T>, orientation: Orientation, rotation: MobiusTransform<T>) -> Result<Self> {
        Ok(Self::new(
            exp_profile_from_boundary(pair, orientation)?,
            rotation,
            pair.domain.clone(),
        ))
    }

    fn check_domain(&self, t: T) -> Result<()> {
        if self.domain.contains(&t) {
            Ok(())
        } else {
            Err(domain(format!(
                "|x| = {t} outside [{}, {}]",
                self.domain.inner(),
                self.domain.outer()
            )))
        }
    }

    /// Closed-form differential: `Df·k = H'(t)(N·k)·S + H(t)·dT(η)[k − (N·k)N]/t`.
    pub fn differential(&self, x: Vec3<T>) -> Result<Mat3<T>> {
        let t = x.norm();
        self.check_domain(t)?;
        let eta = SpherePoint::new_unchecked(x * t.recip());
        let n = eta.vec();
        let s = self.rotation.apply(&eta).vec();
        let (h, dh) = (self.profile.value(t)?, self.profile.derivative(t, 1)?);
        let cols = [0, 1, 2].map(|k| {
            let e = Vec3::axis(k);
            let nk = n.dot(e);
            s * (dh * nk) + self.rotation.pushforward(&eta, e - n * nk) * (h / t)
        });
        Ok(Mat3::from_columns(cols))
    }
}

impl<T: Real> AnnulusMap<T> for GeneralizedRadialMap<T> {
    fn eval(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        let t = x.norm();
        self.check_domain(t)?;
        let eta = SpherePoint::project(x)?;
        Ok(self.rotation.apply(&eta).vec() * self.profile.value(t)?)
    }

    fn domain(&self) -> Option<&Annulus<T>> {
        Some(&self.domain)
    }

    fn analytic_density(&self, x: Vec3<T>) -> Option<Result<DensityParts<T>>> {
        Some((|| {
            let t = x.norm();
            self.check_domain(t)?;
            let eta = SpherePoint::project(x)?;
            let (h, dh) = (self.profile.value(t)?, self.profile.derivative(t, 1)?);
            let lam = self.rotation.stretch(&eta);
            let h_sq = h * h;
            Ok(DensityParts {
                image_norm_sq: h_sq,
                radial: dh * dh,
                // ‖DS‖² = 2λ²/t² for a conformal T
                spherical: h_sq * T::lit(2.0) * lam * lam / (t * t),
            })
        })())
    }
}

pub fn map_eval<T: Real>(f: &GeneralizedRadialMap<T>, x: Vec3<T>) -> Result<Vec3<T>> {
    f.eval(x)
}

/// Central-difference differential with step `fd_step·|x|`. Requires the
/// whole stencil to lie in the map's domain, when it has one.
pub fn map_differential_fd<T: Real, F: AnnulusMap<T> + ?Sized>(f: &F, x: Vec3<T>) -> Result<Mat3<T>> {
    let h = f.fd_step() * x.norm();
    if let Some(d) = f.domain() {
        let t = x.norm();
        if t - h < d.inner() || t + h > d.outer() {
            return Err(domain(format!("|x| = {t} is within one step ({h}) of the boundary")));
        }
    }
    differential_with_step(f, x, h)
}

pub(crate) fn differential_with_step<T: Real, F: AnnulusMap<T> + ?Sized>(f: &F, x: Vec3<T>, h: T) -> Result<Mat3<T>> {
    let inv = (h + h).recip();
    let mut cols = [Vec3::zero(); 3];
    for (k, col) in cols.iter_mut().enumerate() {
        let e = Vec3::axis(k) * h;
        *col = (f.eval(x + e)? - f.eval(x - e)?) * inv;
    }
    Ok(Mat3::from_columns(cols))
}

type Evaluator<'a, T> = dyn Fn(Vec3<T>) -> Result<Vec3<T>> + Send + Sync + 'a;

/// A map known only through point evaluations.
pub struct SampledMap<'a, T> {
    evaluator: Box<Evaluator<'a, T>>,
    fd_step: T,
    domain: Option<Annulus<T>>,
}

impl<'a, T: Real> SampledMap<'a, T> {
    pub fn new<F>(evaluator: F, domain: Option<Annulus<T>>) -> Self
    where
        F: Fn(Vec3<T>) -> Result<Vec3<T>> + Send + Sync + 'a,
    {
        Self {
            evaluator: Box::new(evaluator),
            fd_step: T::lit(1e-5),
            domain,
        }
    }

    pub fn with_fd_step(mut self, step: T) -> Self {
        self.fd_step = step;
        self
    }
}

impl<T: Real> std::fmt::Debug for SampledMap<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledMap")
            .field("fd_step", &self.fd_step)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl<T: Real> AnnulusMap<T> for SampledMap<'_, T> {
    fn eval(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        (self.evaluator)(x)
    }

    fn domain(&self) -> Option<&Annulus<T>> {
        self.domain.as_ref()
    }

    fn fd_step(&self) -> T {
        self.fd_step
    }
}

/// `g(x) = a·f(x)/|f(x)|²`, which swaps the roles of the target's boundary
/// spheres: the target becomes `A(a/R★, a/r★)`.
pub fn inversion_transform<'a, T: Real, F: AnnulusMap<T> + ?Sized>(f: &'a F, a: T) -> Result<SampledMap<'a, T>> {
    if !(a > T::zero()) {
        return Err(invalid("inversion constant must be positive"));
    }
    let domain = f.domain().cloned();
    Ok(SampledMap::new(
        move |x| {
            let y = f.eval(x)?;
            let n2 = y.norm_sq();
            if n2 > T::zero() {
                Ok(y * (a / n2))
            } else {
                Err(Error::SingularInput(format!("zero image norm at {:?}", x.to_f64())))
            }
        },
        domain,
    )
    .with_fd_step(f.fd_step()))
}

/// Target annulus of the inverted map.
pub fn inverted_pair<T: Real>(pair: &AnnulusPair<T>, a: T) -> Result<AnnulusPair<T>> {
    AnnulusPair::from_radii(pair.r(), pair.big_r(), a / pair.big_r_star(), a / pair.r_star())
}

/// `base + amplitude·s·sin(mode·π·(t − r)/(R − r))` sampled on `grid`, with
/// the sign and relative strength `s ∈ [0.5, 1]` drawn from `seed`. Boundary
/// values are copied from `base`.
pub fn perturbed_profile<T: Real>(
    base: &RadialProfile<T>,
    grid: &RadialGrid<T>,
    amplitude: T,
    mode: usize,
    seed: u64,
) -> Result<RadialProfile<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sign = if rng.gen_bool(0.5) { T::one() } else { -T::one() };
    let strength = T::lit(rng.gen_range(0.5..=1.0));
    let (r, big_r) = (grid.annulus().inner(), grid.annulus().outer());
    let k = T::from_usize_lossy(mode) * T::PI();
    let nodes = grid.nodes();
    let last = nodes.len() - 1;
    let mut values = Vec::with_capacity(nodes.len());
    for (i, &t) in nodes.iter().enumerate() {
        let h = base.value(t)?;
        let v = if i == 0 || i == last {
            h
        } else {
            h + amplitude * sign * strength * (k * (t - r) / (big_r - r)).sin()
        };
        if !(v > T::zero()) {
            return Err(invalid(format!(
                "perturbation makes the profile nonpositive at t = {t}"
            )));
        }
        values.push(v);
    }
    Ok(RadialProfile::Sampled(SampledProfile::new(grid.clone(), values)?))
}

/// Low-order spherical function `g(η) = c₀ + d·η + q·(3(e·η)² − 1)/2`,
/// constrained to `|c₀| + |d| + |q| ≤ 1` so that `|g| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalModulation<T> {
    pub constant: T,
    pub dipole: Vec3<T>,
    pub quadrupole: T,
    pub quadrupole_axis: Vec3<T>,
}

impl<T: Real> SphericalModulation<T> {
    pub fn new(constant: T, dipole: Vec3<T>, quadrupole: T, quadrupole_axis: Vec3<T>) -> Result<Self> {
        let bound = constant.abs() + dipole.norm() + quadrupole.abs();
        if bound > T::one() + T::lit(1e-12) {
            return Err(invalid("modulation coefficients exceed the unit bound"));
        }
        Ok(Self {
            constant,
            dipole,
            quadrupole,
            quadrupole_axis: SpherePoint::project(quadrupole_axis)?.vec(),
        })
    }

    /// `g ≡ 1`: a purely radial perturbation.
    pub fn radial() -> Self {
        Self {
            constant: T::one(),
            dipole: Vec3::zero(),
            quadrupole: T::zero(),
            quadrupole_axis: Vec3::axis(2),
        }
    }

    pub fn eval(&self, eta: Vec3<T>) -> T {
        let c = self.quadrupole_axis.dot(eta);
        self.constant + self.dipole.dot(eta) + self.quadrupole * (T::lit(1.5) * c * c - T::lit(0.5))
    }

    /// Tangential gradient on the unit sphere.
    pub fn tangential_gradient(&self, eta: Vec3<T>) -> Vec3<T> {
        let c = self.quadrupole_axis.dot(eta);
        let g = self.dipole + self.quadrupole_axis * (T::lit(3.0) * self.quadrupole * c);
        g - eta * g.dot(eta)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut w = [
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
        ];
        let total: f64 = w.iter().sum::<f64>().max(1e-12);
        w.iter_mut().for_each(|v| *v /= total);
        let dir = random_unit(rng);
        let axis = random_unit(rng);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        Self {
            constant: T::lit(sign * w[0]),
            dipole: dir * T::lit(w[1]),
            quadrupole: T::lit(w[2]),
            quadrupole_axis: axis,
        }
    }
}

pub(crate) fn random_unit<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Vec3<T> {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n: f64 = v.norm();
        if n > 1e-3 && n <= 1.0 {
            let u = v * (1.0 / n);
            return Vec3::new(T::lit(u.x), T::lit(u.y), T::lit(u.z));
        }
    }
}

/// How the unperturbed radius advances from the inner to the outer sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    /// `φ(t) = R(t−r)/((R−r)t)`: the exponent of the minimizer.
    Optimal,
    /// `φ(t) = (t−r)/(R−r)`.
    Linear,
}

impl Progress {
    fn eval<T: Real>(self, t: T, r: T, big_r: T) -> T {
        match self {
            Progress::Optimal => big_r * (t - r) / ((big_r - r) * t),
            Progress::Linear => (t - r) / (big_r - r),
        }
    }

    fn derivative<T: Real>(self, t: T, r: T, big_r: T) -> T {
        match self {
            Progress::Optimal => r * big_r / ((big_r - r) * t * t),
            Progress::Linear => (big_r - r).recip(),
        }
    }
}

/// Competitor homeomorphism between the annuli of `pair`:
/// `f(x) = ρ(x)·T(x/|x|)` with `ρ = r★(R★/r★)^{u(x)}` (or its mirror for the
/// decreasing orientation) and
/// `u(x) = φ(t) + ε·sin(kπφ(t))·g(x/|x|)`.
/// `|ε|·k·π < 1` keeps `u` strictly increasing along every ray, so `u` maps
/// `[r, R]` onto `[0, 1]` and `f` stays a homeomorphism onto the target.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatedRadialMap<T> {
    pair: AnnulusPair<T>,
    progress: Progress,
    amplitude: T,
    mode: usize,
    modulation: SphericalModulation<T>,
    rotation: MobiusTransform<T>,
    orientation: Orientation,
}

impl<T: Real> ModulatedRadialMap<T> {
    pub fn new(
        pair: &AnnulusPair<T>,
        progress: Progress,
        amplitude: T,
        mode: usize,
        modulation: SphericalModulation<T>,
        rotation: MobiusTransform<T>,
        orientation: Orientation,
    ) -> Result<Self> {
        pair.require_positive()?;
        if mode == 0 {
            return Err(invalid("perturbation mode must be at least 1"));
        }
        if !(amplitude.abs() * T::from_usize_lossy(mode) * T::PI() < T::one()) {
            return Err(invalid("|amplitude|·mode·π must stay below 1 to keep the map monotone"));
        }
        Ok(Self {
            pair: pair.clone(),
            progress,
            amplitude,
            mode,
            modulation,
            rotation,
            orientation,
        })
    }

    /// Random competitor with amplitude up to `max_amplitude / (mode·π)`.
    pub fn random<R: Rng + ?Sized>(pair: &AnnulusPair<T>, rng: &mut R) -> Result<Self> {
        let mode = rng.gen_range(1..=3usize);
        let frac = rng.gen_range(0.05..0.6);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let amplitude = T::lit(sign * frac / (mode as f64 * PI));
        let progress = if rng.gen_bool(0.75) {
            Progress::Optimal
        } else {
            Progress::Linear
        };
        let modulation = if rng.gen_bool(0.3) {
            SphericalModulation::radial()
        } else {
            SphericalModulation::random(rng)
        };
        let orientation = if rng.gen_bool(0.5) {
            Orientation::Increasing
        } else {
            Orientation::Decreasing
        };
        Self::new(
            pair,
            progress,
            amplitude,
            mode,
            modulation,
            MobiusTransform::random(rng),
            orientation,
        )
    }

    fn exponent(&self, x: Vec3<T>) -> T {
        let t = x.norm();
        let phi = self.progress.eval(t, self.pair.r(), self.pair.big_r());
        let k = T::from_usize_lossy(self.mode) * T::PI();
        phi + self.amplitude * (k * phi).sin() * self.modulation.eval(x * t.recip())
    }

    fn radius(&self, u: T) -> T {
        let (rs, big_rs) = (self.pair.r_star(), self.pair.big_r_star());
        match self.orientation {
            Orientation::Increasing => rs * (big_rs / rs).powf(u),
            Orientation::Decreasing => big_rs * (rs / big_rs).powf(u),
        }
    }

    /// `∇u` in closed form.
    fn exponent_gradient(&self, x: Vec3<T>) -> Vec3<T> {
        let t = x.norm();
        let eta = x * t.recip();
        let (r, big_r) = (self.pair.r(), self.pair.big_r());
        let phi = self.progress.eval(t, r, big_r);
        let dphi = self.progress.derivative(t, r, big_r);
        let k = T::from_usize_lossy(self.mode) * T::PI();
        let g = self.modulation.eval(eta);
        let normal = dphi * (T::one() + self.amplitude * k * (k * phi).cos() * g);
        eta * normal + self.modulation.tangential_gradient(eta) * (self.amplitude * (k * phi).sin() / t)
    }
}

impl<T: Real> AnnulusMap<T> for ModulatedRadialMap<T> {
    fn eval(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        let eta = SpherePoint::project(x)?;
        Ok(self.rotation.apply(&eta).vec() * self.radius(self.exponent(x)))
    }

    fn domain(&self) -> Option<&Annulus<T>> {
        Some(&self.pair.domain)
    }

    // |∇ρ|² = ρ²·ln²(R★/r★)·|∇u|², and the angular factor is conformal.
    fn analytic_density(&self, x: Vec3<T>) -> Option<Result<DensityParts<T>>> {
        Some((|| {
            let eta = SpherePoint::project(x)?;
            let t = x.norm();
            let rho = self.radius(self.exponent(x));
            let rho_sq = rho * rho;
            let l = (self.pair.big_r_star() / self.pair.r_star()).ln();
            let lam = self.rotation.stretch(&eta);
            Ok(DensityParts {
                image_norm_sq: rho_sq,
                radial: rho_sq * l * l * self.exponent_gradient(x).norm_sq(),
                spherical: rho_sq * T::lit(2.0) * lam * lam / (t * t),
            })
        })())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_radial_grid, SpacingMode};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn pair_e() -> AnnulusPair<f64> {
        AnnulusPair::from_radii(1.0, 2.0, 1.0, E).unwrap()
    }

    #[test]
    fn constant_exponential_profile() {
        let h = RadialProfile::Exponential { a: 2.0, b: 0.0 };
        assert_eq!(h.value(5.0).unwrap(), 2.0);
        assert_eq!(h.derivative(5.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn unit_exponential_profile() {
        let h = RadialProfile::Exponential { a: 1.0, b: 1.0 };
        assert_abs_diff_eq!(h.value(1.0).unwrap(), E, epsilon = 1e-15);
        assert_abs_diff_eq!(h.derivative(1.0, 1).unwrap(), -E, epsilon = 1e-15);
    }

    #[test]
    fn exponential_second_derivative_matches_fd() {
        let h = RadialProfile::Exponential { a: 1.3, b: -0.7 };
        let t = 1.4;
        let eps = 1e-5;
        let fd = (h.derivative(t + eps, 1).unwrap() - h.derivative(t - eps, 1).unwrap()) / (2.0 * eps);
        assert_abs_diff_eq!(h.derivative(t, 2).unwrap(), fd, epsilon = 1e-8);
    }

    #[test]
    fn linear_harmonic_profile() {
        let h = RadialProfile::Harmonic { a: 1.0, b: 0.0 };
        assert_eq!(h.jet(3.0).unwrap(), (3.0, 1.0, 0.0));
    }

    #[test]
    fn derivative_order_checked() {
        let h = RadialProfile::Harmonic { a: 1.0, b: 0.0 };
        assert!(h.derivative(1.0, 3).is_err());
        assert!(h.value(-1.0).is_err());
    }

    #[test]
    fn h1_boundary_values() {
        let h1 = exp_profile_from_boundary(&pair_e(), Orientation::Increasing).unwrap();
        assert_abs_diff_eq!(h1.value(1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h1.value(2.0).unwrap(), E, epsilon = 1e-15);
        match h1 {
            RadialProfile::Exponential { a, b } => {
                assert_abs_diff_eq!(a, E * E, epsilon = 1e-14);
                assert_abs_diff_eq!(b, -2.0, epsilon = 1e-15);
            }
            _ => panic!("H1 is exponential"),
        }
        let h2 = exp_profile_from_boundary(&pair_e(), Orientation::Decreasing).unwrap();
        assert_abs_diff_eq!(h2.value(1.0).unwrap(), E, epsilon = 1e-15);
        assert_abs_diff_eq!(h2.value(2.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn h1_h2_product_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let r = rng.gen_range(0.2..3.0);
            let big_r = r * rng.gen_range(1.1..4.0);
            let rs = rng.gen_range(0.2..3.0);
            let big_rs = rs * rng.gen_range(1.0..5.0);
            let p = AnnulusPair::from_radii(r, big_r, rs, big_rs).unwrap();
            let h1 = exp_profile_from_boundary(&p, Orientation::Increasing).unwrap();
            let h2 = exp_profile_from_boundary(&p, Orientation::Decreasing).unwrap();
            for i in 0..=20 {
                let t = r + (big_r - r) * i as f64 / 20.0;
                let prod = h1.value(t).unwrap() * h2.value(t).unwrap();
                assert_abs_diff_eq!(prod, rs * big_rs, epsilon = 1e-12 * rs * big_rs);
            }
        }
    }

    #[test]
    fn minimizer_needs_positive_radii() {
        let p = AnnulusPair::from_radii(0.0, 2.0, 1.0, 2.0).unwrap();
        assert!(exp_profile_from_boundary(&p, Orientation::Increasing).is_err());
    }

    #[test]
    fn radial_projection_eval() {
        let f = GeneralizedRadialMap::new(
            RadialProfile::Exponential { a: 1.0, b: 0.0 },
            MobiusTransform::identity(),
            Annulus::new(1.0, 2.0).unwrap(),
        );
        let y = f.eval(Vec3::new(0.0, 0.0, 1.5)).unwrap();
        assert_abs_diff_eq!((y - Vec3::new(0.0, 0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert!(matches!(f.eval(Vec3::new(0.0, 0.0, 2.5)), Err(Error::Domain(_))));
    }

    #[test]
    fn h1_map_boundary_point() {
        let f =
            GeneralizedRadialMap::minimizer(&pair_e(), Orientation::Increasing, MobiusTransform::identity()).unwrap();
        let y = f.eval(Vec3::new(2.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!((y - Vec3::new(E, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn map_norm_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = pair_e();
        for _ in 0..1000 {
            let f = GeneralizedRadialMap::minimizer(&p, Orientation::Increasing, MobiusTransform::random(&mut rng))
                .unwrap();
            let x = random_unit::<f64, _>(&mut rng) * rng.gen_range(1.0..=2.0);
            let y = f.eval(x).unwrap();
            let h = f.profile.value(x.norm()).unwrap();
            assert_abs_diff_eq!(y.norm(), h, epsilon = 1e-12 * h);
        }
    }

    #[test]
    fn identity_map_differential() {
        let f = GeneralizedRadialMap::new(
            RadialProfile::Harmonic { a: 1.0, b: 0.0 },
            MobiusTransform::identity(),
            Annulus::new(1.0, 2.0).unwrap(),
        );
        let x = Vec3::new(0.3, -1.1, 0.8);
        let fd = map_differential_fd(&f, x).unwrap();
        let an = f.differential(x).unwrap();
        let id = Mat3::<f64>::identity();
        assert!(fd.sub(&id).frobenius_sq().sqrt() < 1e-9);
        assert!(an.sub(&id).frobenius_sq().sqrt() < 1e-14);
    }

    #[test]
    fn sphere_projection_energy_density() {
        let f = GeneralizedRadialMap::new(
            RadialProfile::Exponential { a: 1.0, b: 0.0 },
            MobiusTransform::identity(),
            Annulus::new(1.0, 3.0).unwrap(),
        );
        let x = Vec3::new(0.0, 2.0, 0.0);
        let fd = map_differential_fd(&f, x).unwrap();
        assert_abs_diff_eq!(fd.frobenius_sq(), 0.5, epsilon = 1e-9);
        let d = f.analytic_density(x).unwrap().unwrap();
        assert_abs_diff_eq!(d.dirichlet(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fd_differential_matches_analytic_for_random_minimizers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = pair_e();
        for _ in 0..200 {
            let orient = if rng.gen_bool(0.5) {
                Orientation::Increasing
            } else {
                Orientation::Decreasing
            };
            let f = GeneralizedRadialMap::minimizer(&p, orient, MobiusTransform::random(&mut rng)).unwrap();
            let x = random_unit::<f64, _>(&mut rng) * rng.gen_range(1.05..1.95);
            let an = f.differential(x).unwrap();
            let fd = map_differential_fd(&f, x).unwrap();
            let rel = fd.sub(&an).frobenius_sq().sqrt() / an.frobenius_sq().sqrt();
            assert!(rel <= 1e-6, "relative error {rel}");
            // Decomposition of the analytic density matches the FD split.
            let parts = f.analytic_density(x).unwrap().unwrap();
            let split = DensityParts::from_differential(f.eval(x).unwrap(), &fd);
            assert_abs_diff_eq!(parts.radial, split.radial, epsilon = 1e-6 * parts.dirichlet());
            assert_abs_diff_eq!(parts.spherical, split.spherical, epsilon = 1e-6 * parts.dirichlet());
        }
    }

    #[test]
    fn fd_needs_margin() {
        let f =
            GeneralizedRadialMap::minimizer(&pair_e(), Orientation::Increasing, MobiusTransform::identity()).unwrap();
        assert!(matches!(
            map_differential_fd(&f, Vec3::new(1.0, 0.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn inversion_of_identity_map() {
        let f = GeneralizedRadialMap::new(
            RadialProfile::Harmonic { a: 1.0, b: 0.0 },
            MobiusTransform::identity(),
            Annulus::new(1.0, 2.0).unwrap(),
        );
        let g = inversion_transform(&f, 1.0).unwrap();
        for t in [1.0, 1.25, 1.5, 2.0] {
            let y = g.eval(Vec3::new(0.0, t, 0.0)).unwrap();
            assert_abs_diff_eq!(y.norm(), 1.0 / t, epsilon = 1e-15);
        }
        assert!(inversion_transform(&f, 0.0).is_err());
    }

    #[test]
    fn inversion_of_h1_is_h2() {
        let p = pair_e();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rot = MobiusTransform::random(&mut rng);
        let f1 = GeneralizedRadialMap::minimizer(&p, Orientation::Increasing, rot).unwrap();
        let f2 = GeneralizedRadialMap::minimizer(&p, Orientation::Decreasing, rot).unwrap();
        let g = inversion_transform(&f1, p.r_star() * p.big_r_star()).unwrap();
        for _ in 0..100 {
            let x = random_unit::<f64, _>(&mut rng) * rng.gen_range(1.0..=2.0);
            let (a, b) = (g.eval(x).unwrap(), f2.eval(x).unwrap());
            assert!((a - b).norm() <= 1e-12 * b.norm());
        }
        let q = inverted_pair(&p, p.r_star() * p.big_r_star()).unwrap();
        assert_abs_diff_eq!(q.r_star(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.big_r_star(), E, epsilon = 1e-15);
    }

    #[test]
    fn inversion_reports_zero_image() {
        let f = SampledMap::new(|_x: Vec3<f64>| Ok(Vec3::zero()), None);
        let g = inversion_transform(&f, 1.0).unwrap();
        assert!(matches!(g.eval(Vec3::new(1.0, 0.0, 0.0)), Err(Error::SingularInput(_))));
    }

    #[test]
    fn zero_perturbation_reproduces_base() {
        let p = pair_e();
        let grid = make_radial_grid(&p.domain, 50, SpacingMode::UniformT).unwrap();
        let h1 = exp_profile_from_boundary(&p, Orientation::Increasing).unwrap();
        let pert = perturbed_profile(&h1, &grid, 0.0, 3, 1).unwrap();
        for &t in grid.nodes() {
            assert_eq!(pert.value(t).unwrap(), h1.value(t).unwrap());
        }
    }

    #[test]
    fn perturbation_keeps_endpoints() {
        let p = pair_e();
        let grid = make_radial_grid(&p.domain, 50, SpacingMode::UniformT).unwrap();
        let h1 = exp_profile_from_boundary(&p, Orientation::Increasing).unwrap();
        let pert = perturbed_profile(&h1, &grid, 0.01, 3, 9).unwrap();
        assert_eq!(pert.value(1.0).unwrap(), h1.value(1.0).unwrap());
        assert_eq!(pert.value(2.0).unwrap(), h1.value(2.0).unwrap());
        assert!(pert.value(1.5).unwrap() != h1.value(1.5).unwrap());
        assert!(
            perturbed_profile(&h1, &grid, 50.0, 1, 2).is_err() || perturbed_profile(&h1, &grid, -50.0, 1, 2).is_err()
        );
    }

    #[test]
    fn sampled_derivatives_are_second_order() {
        let h = RadialProfile::Exponential { a: E * E, b: -2.0 };
        let mut errs = Vec::new();
        for n in [50, 100, 200] {
            let a = Annulus::new(1.0, 2.0).unwrap();
            let grid = make_radial_grid(&a, n, SpacingMode::UniformT).unwrap();
            let s = RadialProfile::Sampled(SampledProfile::sample(&h, &grid).unwrap());
            let mut err: f64 = 0.0;
            for &t in grid.nodes() {
                err = err.max((s.derivative(t, 1).unwrap() - h.derivative(t, 1).unwrap()).abs());
                err = err.max((s.derivative(t, 2).unwrap() - h.derivative(t, 2).unwrap()).abs());
            }
            errs.push(err);
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        }
    }

    #[test]
    fn sampled_profile_rejects_bad_input() {
        let a = Annulus::new(1.0, 2.0).unwrap();
        let grid = make_radial_grid(&a, 4, SpacingMode::UniformT).unwrap();
        assert!(SampledProfile::new(grid.clone(), vec![1.0; 4]).is_err());
        assert!(SampledProfile::new(grid.clone(), vec![1.0, 1.0, 0.0, 1.0, 1.0]).is_err());
        let s = RadialProfile::Sampled(SampledProfile::new(grid, vec![1.0; 5]).unwrap());
        assert!(matches!(s.value(2.5), Err(Error::Domain(_))));
    }

    #[test]
    fn modulated_map_stays_in_target() {
        let p = AnnulusPair::from_radii(0.7, 2.3, 0.4, 3.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let f = ModulatedRadialMap::random(&p, &mut rng).unwrap();
            for _ in 0..50 {
                let eta = random_unit::<f64, _>(&mut rng);
                let inner = f.eval(eta * 0.7).unwrap().norm();
                let outer = f.eval(eta * 2.3).unwrap().norm();
                let mid = f.eval(eta * rng.gen_range(0.7..2.3)).unwrap().norm();
                assert!((0.4 - 1e-12..=3.1 + 1e-12).contains(&mid));
                let ends = if inner < outer { (inner, outer) } else { (outer, inner) };
                assert_abs_diff_eq!(ends.0, 0.4, epsilon = 1e-12);
                assert_abs_diff_eq!(ends.1, 3.1, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn modulated_density_matches_fd() {
        let p = AnnulusPair::from_radii(0.7, 2.3, 0.4, 3.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let f = ModulatedRadialMap::random(&p, &mut rng).unwrap();
            let x = random_unit::<f64, _>(&mut rng) * rng.gen_range(0.75..2.25);
            let an = f.analytic_density(x).unwrap().unwrap();
            let fd = DensityParts::from_differential(f.eval(x).unwrap(), &map_differential_fd(&f, x).unwrap());
            let scale = an.dirichlet();
            assert_abs_diff_eq!(an.radial, fd.radial, epsilon = 1e-6 * scale);
            assert_abs_diff_eq!(an.spherical, fd.spherical, epsilon = 1e-6 * scale);
            assert_abs_diff_eq!(an.image_norm_sq, fd.image_norm_sq, epsilon = 1e-12 * an.image_norm_sq);
        }
    }

    #[test]
    fn modulated_map_rejects_non_monotone_amplitude() {
        let p = pair_e();
        let r = ModulatedRadialMap::new(
            &p,
            Progress::Optimal,
            0.2,
            2,
            SphericalModulation::radial(),
            MobiusTransform::identity(),
            Orientation::Increasing,
        );
        assert!(r.is_err());
        assert!(SphericalModulation::new(0.5, Vec3::new(0.6, 0.0, 0.0), 0.0, Vec3::axis(2)).is_err());
    }

    #[test]
    fn unperturbed_modulated_map_is_the_minimizer() {
        let p = pair_e();
        let rot = MobiusTransform::rotation_z(0.3);
        let f = ModulatedRadialMap::new(
            &p,
            Progress::Optimal,
            0.0,
            1,
            SphericalModulation::radial(),
            rot,
            Orientation::Increasing,
        )
        .unwrap();
        let g = GeneralizedRadialMap::minimizer(&p, Orientation::Increasing, rot).unwrap();
        let x = Vec3::new(0.4, 1.1, -0.5);
        assert!((f.eval(x).unwrap() - g.eval(x).unwrap()).norm() < 1e-14);
    }
}
