//! Weighted and unweighted Dirichlet energies.
//!
//! Volume integrals use a product rule: Gauss–Legendre in the radius times
//! the spherical product rule on every shell. Shells are evaluated in
//! parallel and summed in a fixed order, so results do not depend on the
//! thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{make_sphere_quadrature, Annulus, AnnulusPair, GaussLegendre, Vec3};
use crate::maps::{differential_with_step, AnnulusMap, DensityParts, RadialProfile};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadOrders {
    pub radial: usize,
    pub sphere: usize,
}

impl QuadOrders {
    pub fn doubled(self) -> Self {
        Self {
            radial: 2 * self.radial,
            sphere: 2 * self.sphere,
        }
    }
}

impl Default for QuadOrders {
    fn default() -> Self {
        Self { radial: 64, sphere: 32 }
    }
}

/// `value = radial_part + spherical_part`, up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport<T> {
    pub value: T,
    pub radial_part: T,
    pub spherical_part: T,
    pub quad_orders: QuadOrders,
    /// `|E(2·orders) − E(orders)|`, when refinement was requested.
    pub refinement_delta: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyKind {
    /// `∫ ‖Df‖²/|f|²`
    Weighted,
    /// `∫ ‖Df‖²`
    Dirichlet,
}

/// Evaluates an energy at `orders`, and again at doubled orders when
/// `refine` is set.
pub fn energy_with<T: Real, F: AnnulusMap<T> + ?Sized>(
    f: &F,
    domain: &Annulus<T>,
    kind: EnergyKind,
    orders: QuadOrders,
    refine: bool,
) -> Result<EnergyReport<T>> {
    if orders.radial < 4 || orders.sphere < 4 {
        return Err(invalid(format!(
            "quadrature orders must be >= 4, got radial {} and sphere {}",
            orders.radial, orders.sphere
        )));
    }
    domain.require_positive("domain")?;
    let (radial_part, spherical_part) = integrate(f, domain, kind, orders)?;
    let value = radial_part + spherical_part;
    let refinement_delta = if refine {
        let (a, b) = integrate(f, domain, kind, orders.doubled())?;
        Some((a + b - value).abs())
    } else {
        None
    };
    Ok(EnergyReport {
        value,
        radial_part,
        spherical_part,
        quad_orders: orders,
        refinement_delta,
    })
}

/// `𝓕[f] = ∫ ‖Df‖²/|f|²` over the domain of `pair`, with refinement.
pub fn weighted_energy<T: Real, F: AnnulusMap<T> + ?Sized>(
    f: &F,
    pair: &AnnulusPair<T>,
    radial_order: usize,
    sphere_order: usize,
) -> Result<EnergyReport<T>> {
    let orders = QuadOrders {
        radial: radial_order,
        sphere: sphere_order,
    };
    energy_with(f, &pair.domain, EnergyKind::Weighted, orders, true)
}

/// `𝓔[f] = ∫ ‖Df‖²` over the domain of `pair`, with refinement.
pub fn dirichlet_energy<T: Real, F: AnnulusMap<T> + ?Sized>(
    f: &F,
    pair: &AnnulusPair<T>,
    radial_order: usize,
    sphere_order: usize,
) -> Result<EnergyReport<T>> {
    let orders = QuadOrders {
        radial: radial_order,
        sphere: sphere_order,
    };
    energy_with(f, &pair.domain, EnergyKind::Dirichlet, orders, true)
}

fn integrate<T: Real, F: AnnulusMap<T> + ?Sized>(
    f: &F,
    domain: &Annulus<T>,
    kind: EnergyKind,
    orders: QuadOrders,
) -> Result<(T, T)> {
    let gl = GaussLegendre::<T>::new(orders.radial)?;
    let sphere = make_sphere_quadrature::<T>(orders.sphere)?;
    let shells: Vec<(T, T)> = gl.mapped(domain.inner(), domain.outer()).collect();
    let per_shell = shells
        .par_iter()
        .map(|&(t, wt)| {
            let mut radial = T::zero();
            let mut spherical = T::zero();
            for (eta, w) in sphere.iter() {
                let x = eta.vec() * t;
                let d = density(f, domain, kind, x).map_err(|e| at_node(x, e))?;
                radial = radial + w * d.0;
                spherical = spherical + w * d.1;
            }
            let scale = wt * t * t;
            Ok((radial * scale, spherical * scale))
        })
        .collect::<Vec<Result<(T, T)>>>();
    let mut total = (T::zero(), T::zero());
    for shell in per_shell {
        let (a, b) = shell?;
        total = (total.0 + a, total.1 + b);
    }
    Ok(total)
}

/// `(radial, spherical)` integrand pieces at `x`.
fn density<T: Real, F: AnnulusMap<T> + ?Sized>(
    f: &F,
    domain: &Annulus<T>,
    kind: EnergyKind,
    x: Vec3<T>,
) -> Result<(T, T)> {
    let parts = match f.analytic_density(x) {
        Some(parts) => parts?,
        None => {
            let t = x.norm();
            let margin = (t - domain.inner()).min(domain.outer() - t);
            let h = (f.fd_step() * t).min(margin * T::lit(0.5));
            let df = differential_with_step(f, x, h)?;
            DensityParts::from_differential(f.eval(x)?, &df)
        }
    };
    match kind {
        EnergyKind::Dirichlet => Ok((parts.radial, parts.spherical)),
        EnergyKind::Weighted => {
            let n2 = parts.image_norm_sq;
            if !(n2 > T::zero()) || !n2.is_finite() {
                return Err(Error::SingularInput("zero image norm".into()));
            }
            Ok((parts.radial / n2, parts.spherical / n2))
        }
    }
}

fn at_node<T: Real>(x: Vec3<T>, e: Error) -> Error {
    match e {
        Error::Evaluation { .. } => e,
        other => Error::Evaluation {
            node: x.to_f64(),
            message: other.to_string(),
        },
    }
}

/// `𝓗[H] = 4π∫(t²Ḣ²/H² + 2) dt`. Closed-form profiles use one
/// `radial_order`-point rule; sampled profiles use a four-point rule per
/// grid interval, since their derivatives are only piecewise smooth.
pub fn reduced_energy<T: Real>(h: &RadialProfile<T>, annulus: &Annulus<T>, radial_order: usize) -> Result<T> {
    let integrand = |t: T| -> Result<T> {
        let v = h.value(t)?;
        if !(v > T::zero()) {
            return Err(Error::Evaluation {
                node: [t.to_f64().unwrap_or(f64::NAN), 0.0, 0.0],
                message: format!("profile value {v} is not positive"),
            });
        }
        let d = h.derivative(t, 1)?;
        let q = t * d / v;
        Ok(q * q + T::lit(2.0))
    };
    let total = match h {
        RadialProfile::Sampled(s) => {
            let gl = GaussLegendre::<T>::new(4)?;
            let mut acc = T::zero();
            for w in s.grid().nodes().windows(2) {
                acc = acc + gl.try_integrate(w[0], w[1], integrand)?;
            }
            acc
        }
        _ => {
            let gl = GaussLegendre::<T>::new(radial_order.max(1))?;
            gl.try_integrate(annulus.inner(), annulus.outer(), integrand)?
        }
    };
    Ok(T::lit(4.0) * T::PI() * total)
}

/// `4π(2(R−r) + rR·ln²(R★/r★)/(R−r))`.
pub fn analytic_min_weighted_energy<T: Real>(pair: &AnnulusPair<T>) -> T {
    let (r, big_r) = (pair.r(), pair.big_r());
    let l = (pair.big_r_star() / pair.r_star()).ln();
    let w = big_r - r;
    T::lit(4.0) * T::PI() * (T::lit(2.0) * w + r * big_r * l * l / w)
}

/// `analytic_min_weighted_energy(pair) / R★²`.
pub fn dirichlet_lower_bound<T: Real>(pair: &AnnulusPair<T>) -> T {
    let rs = pair.big_r_star();
    analytic_min_weighted_energy(pair) / (rs * rs)
}
