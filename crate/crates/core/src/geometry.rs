//! Annuli, radial grids and quadrature rules on intervals and on the unit
//! sphere, plus the small amount of 3-vector algebra the rest of the crate
//! needs.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::scalar::{Field, Real};

/// Tolerance for "this vector has unit length".
pub fn unit_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::lit(16.0) * T::epsilon())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// Unit vector along coordinate axis `i` (0, 1, 2).
    pub fn axis(i: usize) -> Self {
        let mut c = [T::zero(); 3];
        c[i] = T::one();
        Self::from_array(c)
    }

    #[inline]
    pub fn from_array(c: [T; 3]) -> Self {
        Self::new(c[0], c[1], c[2])
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_f64(self) -> [f64; 3] {
        [
            self.x.to_f64().unwrap_or(f64::NAN),
            self.y.to_f64().unwrap_or(f64::NAN),
            self.z.to_f64().unwrap_or(f64::NAN),
        ]
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }

    /// `self / |self|`. The zero vector is returned unchanged (as NaNs would
    /// otherwise propagate silently); callers that care check the norm first.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > T::zero() {
            self * n.recip()
        } else {
            self
        }
    }

    pub fn component(self, i: usize) -> T {
        self.to_array()[i]
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// 3×3 matrix stored by columns; column `k` is the derivative along `e_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub cols: [Vec3<T>; 3],
}

impl<T: Real> Mat3<T> {
    pub fn from_columns(cols: [Vec3<T>; 3]) -> Self {
        Self { cols }
    }

    pub fn identity() -> Self {
        Self::from_columns([Vec3::axis(0), Vec3::axis(1), Vec3::axis(2)])
    }

    pub fn entry(&self, row: usize, col: usize) -> T {
        self.cols[col].component(row)
    }

    /// `M k`.
    pub fn apply(&self, k: Vec3<T>) -> Vec3<T> {
        self.cols[0] * k.x + self.cols[1] * k.y + self.cols[2] * k.z
    }

    /// `Mᵀ v`.
    pub fn transpose_apply(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.cols[0].dot(v), self.cols[1].dot(v), self.cols[2].dot(v))
    }

    /// Squared Hilbert–Schmidt norm `Tr(MᵀM)`.
    pub fn frobenius_sq(&self) -> T {
        self.cols.iter().fold(T::zero(), |acc, c| acc + c.norm_sq())
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::from_columns([
            self.cols[0] - o.cols[0],
            self.cols[1] - o.cols[1],
            self.cols[2] - o.cols[2],
        ])
    }
}

/// The spherical shell `{x : inner < |x| < outer}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annulus<T> {
    inner: T,
    outer: T,
}

impl<T: Field> Annulus<T> {
    /// A proper annulus, `0 ≤ inner < outer`.
    pub fn new(inner: T, outer: T) -> Result<Self> {
        if inner < T::zero() {
            return Err(invalid("inner radius must be nonnegative"));
        }
        if !(inner < outer) {
            return Err(invalid("inner radius must be less than outer"));
        }
        Ok(Self { inner, outer })
    }

    /// A target shell, which may degenerate to a single sphere
    /// (`inner == outer`), as for maps onto the unit sphere.
    pub fn target(inner: T, outer: T) -> Result<Self> {
        if inner < T::zero() {
            return Err(invalid("inner radius must be nonnegative"));
        }
        if outer < inner {
            return Err(invalid("inner radius must not exceed outer"));
        }
        Ok(Self { inner, outer })
    }

    pub fn inner(&self) -> T {
        self.inner.clone()
    }

    pub fn outer(&self) -> T {
        self.outer.clone()
    }

    pub fn width(&self) -> T {
        self.outer.clone() - self.inner.clone()
    }

    pub fn is_degenerate(&self) -> bool {
        self.inner == self.outer
    }

    /// Closed containment `inner ≤ t ≤ outer`.
    pub fn contains(&self, t: &T) -> bool {
        &self.inner <= t && t <= &self.outer
    }

    /// Weighted energies divide by radii; both must be strictly positive.
    pub fn require_positive(&self, what: &str) -> Result<()> {
        if self.inner > T::zero() {
            Ok(())
        } else {
            Err(invalid(format!("{what} inner radius must be strictly positive")))
        }
    }
}

impl<T: Real> Annulus<T> {
    pub fn midpoint(&self) -> T {
        (self.inner + self.outer) * T::lit(0.5)
    }
}

/// The problem instance: domain annulus `A(r, R)` and target annulus
/// `A(r★, R★)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPair<T> {
    pub domain: Annulus<T>,
    pub target: Annulus<T>,
}

impl<T: Field> AnnulusPair<T> {
    pub fn new(domain: Annulus<T>, target: Annulus<T>) -> Self {
        Self { domain, target }
    }

    /// `(r, R, r★, R★)`. The target may degenerate (`r★ == R★`).
    pub fn from_radii(r: T, big_r: T, r_star: T, big_r_star: T) -> Result<Self> {
        Ok(Self {
            domain: Annulus::new(r, big_r)?,
            target: Annulus::target(r_star, big_r_star)?,
        })
    }

    pub fn r(&self) -> T {
        self.domain.inner()
    }
    pub fn big_r(&self) -> T {
        self.domain.outer()
    }
    pub fn r_star(&self) -> T {
        self.target.inner()
    }
    pub fn big_r_star(&self) -> T {
        self.target.outer()
    }

    /// All four radii strictly positive, as the weight `|y|⁻²` requires.
    pub fn require_positive(&self) -> Result<()> {
        self.domain.require_positive("domain")?;
        self.target.require_positive("target")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpacingMode {
    /// Nodes equispaced in `t`.
    UniformT,
    /// Nodes equispaced in `1/t`.
    UniformInverse,
}

/// Ordered nodes `r = t₀ < t₁ < … < t_n = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    annulus: Annulus<T>,
    nodes: Vec<T>,
    mode: SpacingMode,
}

impl<T: Real> RadialGrid<T> {
    pub fn annulus(&self) -> &Annulus<T> {
        &self.annulus
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn mode(&self) -> SpacingMode {
        self.mode
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn max_gap(&self) -> T {
        self.nodes.windows(2).fold(T::zero(), |m, w| m.max(w[1] - w[0]))
    }

    /// Index `i` of the interval `[tᵢ, tᵢ₊₁]` containing `t`.
    pub fn locate(&self, t: T) -> Result<usize> {
        if !self.annulus.contains(&t) {
            return Err(domain(format!(
                "t = {t} outside [{}, {}]",
                self.annulus.inner(),
                self.annulus.outer()
            )));
        }
        let upper = self.nodes.partition_point(|&s| s <= t);
        Ok(upper.saturating_sub(1).min(self.intervals() - 1))
    }
}

/// Grid with `n` intervals (`n + 1` nodes) over `annulus`.
pub fn make_radial_grid<T: Real>(annulus: &Annulus<T>, n: usize, mode: SpacingMode) -> Result<RadialGrid<T>> {
    if n < 2 {
        return Err(invalid(format!("radial grid needs at least 2 intervals, got {n}")));
    }
    let (r, big_r) = (annulus.inner(), annulus.outer());
    let nf = T::from_usize_lossy(n);
    let mut nodes: Vec<T> = match mode {
        SpacingMode::UniformT => (0..=n).map(|i| r + (big_r - r) * T::from_usize_lossy(i) / nf).collect(),
        SpacingMode::UniformInverse => {
            annulus.require_positive("grid")?;
            let (s0, s1) = (r.recip(), big_r.recip());
            (0..=n)
                .map(|i| (s0 + (s1 - s0) * T::from_usize_lossy(i) / nf).recip())
                .collect()
        }
    };
    nodes[0] = r;
    nodes[n] = big_r;
    Ok(RadialGrid {
        annulus: annulus.clone(),
        nodes,
        mode,
    })
}

/// A point on the unit sphere `S²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint<T>(Vec3<T>);

impl<T: Real> SpherePoint<T> {
    /// Accepts `v` only if `| |v| − 1 |` is within [`unit_tolerance`].
    pub fn new(v: Vec3<T>) -> Result<Self> {
        if (v.norm() - T::one()).abs() <= unit_tolerance() {
            Ok(Self(v))
        } else {
            Err(invalid(format!("|p| = {} is not 1", v.norm())))
        }
    }

    /// Radial projection `v / |v|`; `v` must be nonzero.
    pub fn project(v: Vec3<T>) -> Result<Self> {
        if v.norm_sq() > T::zero() {
            Ok(Self(v.normalized()))
        } else {
            Err(invalid("cannot project the origin onto the sphere"))
        }
    }

    pub(crate) fn new_unchecked(v: Vec3<T>) -> Self {
        Self(v)
    }

    pub fn north() -> Self {
        Self(Vec3::axis(2))
    }

    pub fn south() -> Self {
        Self(-Vec3::axis(2))
    }

    #[inline]
    pub fn vec(&self) -> Vec3<T> {
        self.0
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// `n`-point rule, exact for polynomials of degree `2n − 1`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("Gauss-Legendre rule needs at least one node"));
        }
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::from_usize_lossy(n);
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess for the i-th largest root.
            let mut x = (T::PI() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + T::lit(0.5))).cos();
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::lit(4.0) {
                    dp = legendre_with_derivative(n, x).1;
                    break;
                }
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        self.mapped(a, b).fold(T::zero(), |acc, (x, w)| acc + w * f(x))
    }

    /// Like [`integrate`](Self::integrate) for fallible integrands.
    pub fn try_integrate<F: FnMut(T) -> Result<T>>(&self, a: T, b: T, mut f: F) -> Result<T> {
        let mut acc = T::zero();
        for (x, w) in self.mapped(a, b) {
            acc = acc + w * f(x)?;
        }
        Ok(acc)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_usize_lossy(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Product rule on `S²`: Gauss–Legendre in `cos θ` times an equispaced
/// azimuth.
#[derive(Debug, Clone)]
pub struct SphericalQuadrature<T> {
    nodes: Vec<SpherePoint<T>>,
    weights: Vec<T>,
    order: usize,
}

impl<T: Real> SphericalQuadrature<T> {
    pub fn nodes(&self) -> &[SpherePoint<T>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&SpherePoint<T>, T)> + '_ {
        self.nodes.iter().zip(self.weights.iter().copied())
    }

    pub fn integrate<F: FnMut(&SpherePoint<T>) -> T>(&self, mut f: F) -> T {
        self.iter().fold(T::zero(), |acc, (p, w)| acc + w * f(p))
    }
}

/// `order` Gauss–Legendre nodes in `cos θ` and `2·order` azimuth nodes, exact
/// for spherical polynomials of degree `< 2·order`.
pub fn make_sphere_quadrature<T: Real>(order: usize) -> Result<SphericalQuadrature<T>> {
    if order < 2 {
        return Err(invalid(format!("sphere quadrature order must be >= 2, got {order}")));
    }
    let gl = GaussLegendre::<T>::new(order)?;
    let n_phi = 2 * order;
    let dphi = T::lit(2.0) * T::PI() / T::from_usize_lossy(n_phi);
    let mut nodes = Vec::with_capacity(order * n_phi);
    let mut weights = Vec::with_capacity(order * n_phi);
    for (&z, &wz) in gl.nodes().iter().zip(gl.weights()) {
        let s = (T::one() - z * z).sqrt();
        for j in 0..n_phi {
            let phi = dphi * (T::from_usize_lossy(j) + T::lit(0.5));
            let v = Vec3::new(s * phi.cos(), s * phi.sin(), z);
            nodes.push(SpherePoint::new_unchecked(v.normalized()));
            weights.push(wz * dphi);
        }
    }
    Ok(SphericalQuadrature { nodes, weights, order })
}

/// Orthonormal frame `(U, V, N)` with `N` the outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentFrame<T> {
    pub u: Vec3<T>,
    pub v: Vec3<T>,
    pub n: Vec3<T>,
}

/// Deterministic tangent frame at the unit vector `n`.
pub fn tangent_frame<T: Real>(n: Vec3<T>) -> Result<TangentFrame<T>> {
    let n = SpherePoint::new(n)?.vec();
    // Helper axis chosen away from the dominant component of n.
    let (ax, ay, az) = (n.x.abs(), n.y.abs(), n.z.abs());
    let helper = if az >= ax && az >= ay {
        Vec3::axis(0)
    } else {
        Vec3::axis(2)
    };
    let u = (helper - n * helper.dot(n)).normalized();
    let v = n.cross(u);
    Ok(TangentFrame { u, v, n })
}
