//! Conformal automorphisms of `S²` and differentials of sphere-valued maps
//! `S(x) = T(x/|x|)`.
//!
//! A Möbius transform is a unimodular complex 2×2 matrix acting on the
//! stereographic coordinate `w = (x + iy)/(1 − z)` (north pole ↦ ∞). All
//! evaluation goes through whichever of two charts keeps the coordinate
//! bounded: the north chart `w` on the southern hemisphere and the south chart
//! `u = 1/w = (x − iy)/(1 + z)` on the northern one. In the south chart the
//! same transform acts by `[[d, c], [b, a]]`, so no limit is ever taken at the
//! pole.

use num_complex::Complex;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::geometry::{tangent_frame, unit_tolerance, SpherePoint, SphericalQuadrature, TangentFrame, Vec3};
use crate::scalar::Real;

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedComplex<T> {
    Finite(Complex<T>),
    Infinity,
}

/// Stereographic projection from the north pole: `(0,0,1) ↦ ∞`,
/// `(0,0,−1) ↦ 0`, the equator onto the unit circle.
pub fn stereographic<T: Real>(p: &SpherePoint<T>) -> ExtendedComplex<T> {
    let v = p.vec();
    if v.z <= T::zero() {
        ExtendedComplex::Finite(Complex::new(v.x, v.y) / (T::one() - v.z))
    } else if v.x == T::zero() && v.y == T::zero() {
        ExtendedComplex::Infinity
    } else {
        // (x + iy)/(1 − z) = (1 + z)/(x − iy), stable near the pole.
        ExtendedComplex::Finite(Complex::new(T::one() + v.z, T::zero()) / Complex::new(v.x, -v.y))
    }
}

pub fn inverse_stereographic<T: Real>(w: ExtendedComplex<T>) -> SpherePoint<T> {
    match w {
        ExtendedComplex::Infinity => SpherePoint::north(),
        ExtendedComplex::Finite(w) if w.norm_sqr() <= T::one() => Chart::North.point(w),
        ExtendedComplex::Finite(w) => Chart::South.point(w.inv()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chart {
    /// `w = (x + iy)/(1 − z)`
    North,
    /// `u = (x − iy)/(1 + z) = 1/w`
    South,
}

impl Chart {
    fn for_point<T: Real>(v: Vec3<T>) -> Self {
        if v.z <= T::zero() {
            Chart::North
        } else {
            Chart::South
        }
    }

    fn coord<T: Real>(self, v: Vec3<T>) -> Complex<T> {
        match self {
            Chart::North => Complex::new(v.x, v.y) / (T::one() - v.z),
            Chart::South => Complex::new(v.x, -v.y) / (T::one() + v.z),
        }
    }

    /// Differential of the chart at `v` applied to the tangent vector `dv`.
    fn coord_differential<T: Real>(self, v: Vec3<T>, dv: Vec3<T>) -> Complex<T> {
        match self {
            Chart::North => {
                let den = T::one() - v.z;
                Complex::new(dv.x, dv.y) / den + Complex::new(v.x, v.y) * (dv.z / (den * den))
            }
            Chart::South => {
                let den = T::one() + v.z;
                Complex::new(dv.x, -dv.y) / den - Complex::new(v.x, -v.y) * (dv.z / (den * den))
            }
        }
    }

    fn point<T: Real>(self, w: Complex<T>) -> SpherePoint<T> {
        let two = T::lit(2.0);
        let s = w.norm_sqr();
        let q = T::one() + s;
        let v = match self {
            Chart::North => Vec3::new(two * w.re, two * w.im, s - T::one()),
            Chart::South => Vec3::new(two * w.re, -two * w.im, T::one() - s),
        } * q.recip();
        SpherePoint::new_unchecked(v)
    }

    /// Differential of the inverse chart at `w` applied to `dw`.
    fn point_differential<T: Real>(self, w: Complex<T>, dw: Complex<T>) -> Vec3<T> {
        let (two, four) = (T::lit(2.0), T::lit(4.0));
        let (a, b) = (w.re, w.im);
        let q = T::one() + a * a + b * b;
        let q2 = q * q;
        let (d_alpha, d_beta) = match self {
            Chart::North => (
                Vec3::new(two / q - four * a * a / q2, -four * a * b / q2, four * a / q2),
                Vec3::new(-four * a * b / q2, two / q - four * b * b / q2, four * b / q2),
            ),
            Chart::South => (
                Vec3::new(two / q - four * a * a / q2, four * a * b / q2, -four * a / q2),
                Vec3::new(-four * a * b / q2, -(two / q - four * b * b / q2), -four * b / q2),
            ),
        };
        d_alpha * dw.re + d_beta * dw.im
    }
}

/// Conformal automorphism of `S²`, stored as a matrix with `ad − bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusTransform<T> {
    a: Complex<T>,
    b: Complex<T>,
    c: Complex<T>,
    d: Complex<T>,
}

/// Evaluation of `T` at a point: the numerator/denominator of the image in
/// the north chart, plus the input chart data.
struct Action<T> {
    chart: Chart,
    coord: Complex<T>,
    num: Complex<T>,
    den: Complex<T>,
}

impl<T: Real> MobiusTransform<T> {
    /// Normalizes to unit determinant. Fails when `ad − bc` vanishes.
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Result<Self> {
        let det = a * d - b * c;
        let scale = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
        if !(det.norm() > T::epsilon() * scale) {
            return Err(invalid("singular Möbius matrix"));
        }
        let k = det.sqrt().inv();
        Ok(Self {
            a: a * k,
            b: b * k,
            c: c * k,
            d: d * k,
        })
    }

    pub fn identity() -> Self {
        let (o, z) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
        Self { a: o, b: z, c: z, d: o }
    }

    /// `w ↦ (k/k⁻¹)·w`, i.e. `diag(k, 1/k)`.
    pub fn diagonal(k: Complex<T>) -> Result<Self> {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(k, z, z, k.inv())
    }

    /// Rotation of `S²` about the z axis by `angle`.
    pub fn rotation_z(angle: T) -> Self {
        let half = angle * T::lit(0.5);
        let e = Complex::new(half.cos(), half.sin());
        Self::diagonal(e).expect("unit diagonal is regular")
    }

    pub fn entries(&self) -> [Complex<T>; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// `s² + 1/s²` for singular values `s, 1/s`; equals 2 exactly for
    /// rotations and grows with the distortion of the transform.
    pub fn distortion(&self) -> T {
        self.entries().iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let (u, v) = (self, other);
        let m = Self {
            a: u.a * v.a + u.b * v.c,
            b: u.a * v.b + u.b * v.d,
            c: u.c * v.a + u.d * v.c,
            d: u.c * v.b + u.d * v.d,
        };
        // Renormalize to keep the determinant at 1 under repeated products.
        Self::new(m.a, m.b, m.c, m.d).unwrap_or(m)
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    fn action(&self, v: Vec3<T>) -> Action<T> {
        let chart = Chart::for_point(v);
        let coord = chart.coord(v);
        let (num, den) = match chart {
            Chart::North => (self.a * coord + self.b, self.c * coord + self.d),
            Chart::South => (self.a + self.b * coord, self.c + self.d * coord),
        };
        Action { chart, coord, num, den }
    }

    pub fn apply(&self, p: &SpherePoint<T>) -> SpherePoint<T> {
        let act = self.action(p.vec());
        if act.num.norm_sqr() <= act.den.norm_sqr() {
            Chart::North.point(act.num / act.den)
        } else {
            Chart::South.point(act.den / act.num)
        }
    }

    /// Conformal stretch `λ(p)`: `|dT(p) v| = λ |v|` for tangent `v`.
    pub fn stretch(&self, p: &SpherePoint<T>) -> T {
        let act = self.action(p.vec());
        (T::one() + act.coord.norm_sqr()) / (act.num.norm_sqr() + act.den.norm_sqr())
    }

    /// Pushforward `dT(p) v` of a tangent vector `v` at `p`.
    pub fn pushforward(&self, p: &SpherePoint<T>, v: Vec3<T>) -> Vec3<T> {
        let act = self.action(p.vec());
        let dz = act.chart.coord_differential(p.vec(), v);
        // With unit determinant the chart-to-chart derivative is ±1/den² into
        // the north chart and ±1/num² into the south chart; the sign flips
        // when input and output charts differ.
        let (out, image, squared) = if act.num.norm_sqr() <= act.den.norm_sqr() {
            (Chart::North, act.num / act.den, act.den * act.den)
        } else {
            (Chart::South, act.den / act.num, act.num * act.num)
        };
        let dout = if out == act.chart { dz / squared } else { -dz / squared };
        out.point_differential(image, dout)
    }

    /// Random transform for property tests: entries uniform in `[−1,1]²`,
    /// rejecting near-singular draws (`|det| < 1e-6`) and draws distorted
    /// enough (`s² + 1/s² > 4.5`) that order-32 sphere quadrature of `λ²`
    /// stops being accurate to 1e-10.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut draw = || Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)));
            let (a, b, c, d) = (draw(), draw(), draw(), draw());
            if (a * d - b * c).norm() < T::lit(1e-6) {
                continue;
            }
            if let Ok(m) = Self::new(a, b, c, d) {
                if m.distortion() <= T::lit(MAX_RANDOM_DISTORTION) {
                    return m;
                }
            }
        }
    }
}

/// Upper bound on [`MobiusTransform::distortion`] for random draws.
pub const MAX_RANDOM_DISTORTION: f64 = 4.5;

/// Free-function forms matching the operation names used elsewhere.
pub fn mobius_apply<T: Real>(t: &MobiusTransform<T>, p: &SpherePoint<T>) -> SpherePoint<T> {
    t.apply(p)
}

pub fn mobius_compose<T: Real>(t1: &MobiusTransform<T>, t2: &MobiusTransform<T>) -> MobiusTransform<T> {
    t1.compose(t2)
}

pub fn mobius_inverse<T: Real>(t: &MobiusTransform<T>) -> MobiusTransform<T> {
    t.inverse()
}

pub fn conformal_stretch<T: Real>(t: &MobiusTransform<T>, p: &SpherePoint<T>) -> T {
    t.stretch(p)
}

/// Directional derivatives of a sphere-valued map along a [`TangentFrame`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereDifferential<T> {
    pub du: Vec3<T>,
    pub dv: Vec3<T>,
    pub dn: Vec3<T>,
    /// `1/t` for the sphere of radius `t` through the base point.
    pub scale: T,
}

impl<T: Real> SphereDifferential<T> {
    /// `‖DS‖² − |D_N S|² = |D_U S|² + |D_V S|²`.
    pub fn tangential_norm_sq(&self) -> T {
        self.du.norm_sq() + self.dv.norm_sq()
    }

    /// `‖DS‖²`.
    pub fn norm_sq(&self) -> T {
        self.tangential_norm_sq() + self.dn.norm_sq()
    }

    /// Gram determinant `|D_U S × D_V S|`.
    pub fn gram(&self) -> T {
        self.du.cross(self.dv).norm()
    }
}

/// A map `S: R³ \ {0} → S²`.
pub trait SphereMap<T: Real>: Send + Sync {
    fn value(&self, x: Vec3<T>) -> Result<Vec3<T>>;

    /// Derivatives along the frame at `x`. The default uses central
    /// differences with step `1e-5·|x|`.
    fn differential(&self, x: Vec3<T>, frame: &TangentFrame<T>) -> Result<SphereDifferential<T>> {
        fd_sphere_differential(self, x, frame, T::lit(1e-5))
    }
}

pub(crate) fn fd_sphere_differential<T: Real, S: SphereMap<T> + ?Sized>(
    map: &S,
    x: Vec3<T>,
    frame: &TangentFrame<T>,
    rel_step: T,
) -> Result<SphereDifferential<T>> {
    let t = nonzero_norm(x)?;
    let h = rel_step * t;
    let two_h = h + h;
    let d = |e: Vec3<T>| -> Result<Vec3<T>> { Ok((map.value(x + e * h)? - map.value(x - e * h)?) * two_h.recip()) };
    Ok(SphereDifferential {
        du: d(frame.u)?,
        dv: d(frame.v)?,
        dn: d(frame.n)?,
        scale: t.recip(),
    })
}

fn nonzero_norm<T: Real>(x: Vec3<T>) -> Result<T> {
    let t = x.norm();
    if t > T::zero() {
        Ok(t)
    } else {
        Err(invalid("x must be nonzero"))
    }
}

impl<T: Real> SphereMap<T> for MobiusTransform<T> {
    fn value(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        Ok(self.apply(&SpherePoint::project(x)?).vec())
    }

    fn differential(&self, x: Vec3<T>, frame: &TangentFrame<T>) -> Result<SphereDifferential<T>> {
        sphere_map_differential(self, x, frame)
    }
}

/// Analytic differential of `S(x) = T(x/|x|)` along `frame`, which must be
/// built at `N = x/|x|`.
pub fn sphere_map_differential<T: Real>(
    t: &MobiusTransform<T>,
    x: Vec3<T>,
    frame: &TangentFrame<T>,
) -> Result<SphereDifferential<T>> {
    let r = nonzero_norm(x)?;
    let eta = SpherePoint::new_unchecked(x * r.recip());
    if (frame.n - eta.vec()).norm() > T::lit(1e3) * unit_tolerance::<T>() {
        return Err(invalid("frame normal does not match x/|x|"));
    }
    let inv_r = r.recip();
    Ok(SphereDifferential {
        du: t.pushforward(&eta, frame.u) * inv_r,
        dv: t.pushforward(&eta, frame.v) * inv_r,
        dn: Vec3::zero(),
        scale: inv_r,
    })
}

/// Gram determinant `D_S(x) = |D_U S × D_V S|` of any sphere map.
pub fn gram_determinant<T: Real, S: SphereMap<T> + ?Sized>(s: &S, x: Vec3<T>) -> Result<T> {
    let r = nonzero_norm(x)?;
    let frame = tangent_frame(x * r.recip())?;
    Ok(s.differential(x, &frame)?.gram())
}

/// `∫_{S(t)} D_S dσ`; at least `4π` for surjective maps, with equality for
/// Möbius maps.
pub fn gram_integral<T: Real, S: SphereMap<T> + ?Sized>(s: &S, t: T, quad: &SphericalQuadrature<T>) -> Result<T> {
    shell_integral(s, t, quad, |d| d.gram())
}

/// `∫_{S(t)} (‖DS‖² − |DS·x/|x||²) dσ`, bounded below by `8π` and equal to
/// it for `S = T(x/|x|)` with `T` Möbius.
pub fn sphere_inequality_integral<T: Real, S: SphereMap<T> + ?Sized>(
    s: &S,
    t: T,
    quad: &SphericalQuadrature<T>,
) -> Result<T> {
    shell_integral(s, t, quad, |d| d.tangential_norm_sq())
}

fn shell_integral<T: Real, S: SphereMap<T> + ?Sized>(
    s: &S,
    t: T,
    quad: &SphericalQuadrature<T>,
    density: impl Fn(&SphereDifferential<T>) -> T,
) -> Result<T> {
    if !(t > T::zero()) {
        return Err(invalid("sphere radius must be positive"));
    }
    let mut acc = T::zero();
    for (p, w) in quad.iter() {
        let x = p.vec() * t;
        let frame = tangent_frame(p.vec())?;
        acc = acc + w * density(&s.differential(x, &frame)?);
    }
    Ok(acc * t * t)
}

/// `S(x) = T(normalize(A·x))` for an invertible linear `A` with positive
/// determinant. Conformal only when `A` is a multiple of a rotation;
/// differentiated by finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSphereMap<T> {
    /// Columns of `A`.
    pub matrix: [Vec3<T>; 3],
    pub then: MobiusTransform<T>,
}

impl<T: Real> LinearSphereMap<T> {
    /// `η ↦ normalize(η + amount·(η·axis)·axis)`; `amount > −1`.
    pub fn axial_stretch(axis: Vec3<T>, amount: T) -> Result<Self> {
        if !(amount > -T::one()) {
            return Err(invalid("stretch amount must exceed -1"));
        }
        let e = SpherePoint::project(axis)?.vec();
        let cols = [0, 1, 2].map(|k| Vec3::axis(k) + e * (amount * e.component(k)));
        Ok(Self {
            matrix: cols,
            then: MobiusTransform::identity(),
        })
    }

    pub fn followed_by(mut self, t: MobiusTransform<T>) -> Self {
        self.then = t;
        self
    }
}

impl<T: Real> SphereMap<T> for LinearSphereMap<T> {
    fn value(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        let y = self.matrix[0] * x.x + self.matrix[1] * x.y + self.matrix[2] * x.z;
        Ok(self.then.apply(&SpherePoint::project(y)?).vec())
    }
}
