//! The radial Euler–Lagrange equation and three independent routes to its
//! solution: a direct discrete minimizer, gradient descent on the same
//! discrete functional, and shooting on the ODE.
//!
//! The discrete functional is written in `K = log H`:
//!
//! `E_h[K] = 4π(Σᵢ cᵢ(Kᵢ₊₁ − Kᵢ)² + 2(R − r))`, `cᵢ = wᵢ/Δᵢ`,
//!
//! where `wᵢ` is the midpoint value of `t²` taken in the grid's own spacing
//! coordinate: `((tᵢ + tᵢ₊₁)/2)²` on uniform-in-`t` grids and `tᵢtᵢ₊₁` on
//! uniform-in-`1/t` grids. The latter makes the exact minimizer, which is
//! affine in `1/t`, nodally exact.

use crate::error::{domain, invalid, Error, Result};
use crate::geometry::{make_radial_grid, AnnulusPair, RadialGrid, SpacingMode};
use crate::maps::{exp_profile_from_boundary, Orientation, RadialProfile, SampledProfile};
use crate::scalar::Real;

fn interior_jet<T: Real>(h: &RadialProfile<T>, t: T) -> Result<(T, T, T)> {
    if let Some(s) = h.as_sampled() {
        let a = s.grid().annulus();
        if !(t > a.inner() && t < a.outer()) {
            return Err(domain(format!(
                "t = {t} is not interior to [{}, {}]",
                a.inner(),
                a.outer()
            )));
        }
    }
    h.jet(t)
}

/// `2HḢ − tḢ² + tHḦ`.
pub fn el_residual<T: Real>(h: &RadialProfile<T>, t: T) -> Result<T> {
    let (v, d1, d2) = interior_jet(h, t)?;
    Ok(T::lit(2.0) * v * d1 - t * d1 * d1 + t * v * d2)
}

/// Radial coefficient of the Euclidean Laplacian of `H(|x|)·η`:
/// `(−2H + 2tḢ + t²Ḧ)/t³`.
pub fn laplacian_coefficient<T: Real>(h: &RadialProfile<T>, t: T) -> Result<T> {
    let (v, d1, d2) = interior_jet(h, t)?;
    Ok((-T::lit(2.0) * v + T::lit(2.0) * t * d1 + t * t * d2) / (t * t * t))
}

/// Laplacian coefficient minus the weighted right-hand side
/// `2Ḣ²/(tH) − (2H²/t² + Ḣ²)/(tH)`. Equals `el_residual/(t²H)`.
pub fn weighted_harmonic_residual<T: Real>(h: &RadialProfile<T>, t: T) -> Result<T> {
    let (v, d1, _) = interior_jet(h, t)?;
    if v == T::zero() {
        return Err(Error::SingularInput(format!("H({t}) = 0")));
    }
    let lap = laplacian_coefficient(h, t)?;
    let th = t * v;
    let rhs = T::lit(2.0) * d1 * d1 / th - (T::lit(2.0) * v * v / (t * t) + d1 * d1) / th;
    Ok(lap - rhs)
}

/// `2M/t + M′/2` with `M = Ḣ²/H²`; vanishes along stationary profiles.
pub fn momentum_residual<T: Real>(h: &RadialProfile<T>, t: T) -> Result<T> {
    let (v, d1, d2) = interior_jet(h, t)?;
    if v == T::zero() {
        return Err(Error::SingularInput(format!("H({t}) = 0")));
    }
    let m = d1 * d1 / (v * v);
    let dm = T::lit(2.0) * d1 * d2 / (v * v) - T::lit(2.0) * d1 * d1 * d1 / (v * v * v);
    Ok(T::lit(2.0) * m / t + dm / T::lit(2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution<T> {
    /// Sampled on the solver grid; endpoint values are the target radii.
    pub profile: RadialProfile<T>,
    pub energy: T,
    /// Nodal sup-norm distance to the increasing closed-form minimizer.
    pub sup_error_vs_closed_form: Option<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// `cᵢ = wᵢ/Δᵢ` for every grid interval.
pub fn interval_coefficients<T: Real>(grid: &RadialGrid<T>) -> Vec<T> {
    grid.nodes()
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let weight = match grid.mode() {
                SpacingMode::UniformT => {
                    let m = (a + b) * T::lit(0.5);
                    m * m
                }
                SpacingMode::UniformInverse => a * b,
            };
            weight / (b - a)
        })
        .collect()
}

fn require_matching_grid<T: Real>(pair: &AnnulusPair<T>, grid: &RadialGrid<T>) -> Result<()> {
    pair.require_positive()?;
    if grid.annulus() != &pair.domain {
        return Err(invalid("grid annulus differs from the domain annulus"));
    }
    Ok(())
}

fn require_log_profile<T: Real>(k: &[T], grid: &RadialGrid<T>) -> Result<()> {
    if k.len() != grid.nodes().len() {
        return Err(invalid(format!(
            "{} log-values for {} grid nodes",
            k.len(),
            grid.nodes().len()
        )));
    }
    Ok(())
}

/// `E_h[K]` for a full nodal log-profile `K` (boundary values included).
pub fn discrete_energy<T: Real>(k: &[T], grid: &RadialGrid<T>) -> Result<T> {
    require_log_profile(k, grid)?;
    let c = interval_coefficients(grid);
    let sum = c.iter().zip(k.windows(2)).fold(T::zero(), |acc, (&ci, w)| {
        let d = w[1] - w[0];
        acc + ci * d * d
    });
    Ok(T::lit(4.0) * T::PI() * (sum + T::lit(2.0) * grid.annulus().width()))
}

/// `∂E_h/∂Kⱼ` at the interior nodes `j = 1..n−1`.
pub fn reduced_energy_gradient<T: Real>(k: &[T], grid: &RadialGrid<T>) -> Result<Vec<T>> {
    require_log_profile(k, grid)?;
    let c = interval_coefficients(grid);
    let scale = T::lit(8.0) * T::PI();
    Ok((1..k.len() - 1)
        .map(|j| scale * (c[j - 1] * (k[j] - k[j - 1]) - c[j] * (k[j + 1] - k[j])))
        .collect())
}

fn finish<T: Real>(
    pair: &AnnulusPair<T>,
    grid: &RadialGrid<T>,
    values: Vec<T>,
    iterations: usize,
    converged: bool,
) -> Result<DiscreteSolution<T>> {
    let k: Vec<T> = values.iter().map(|v| v.ln()).collect();
    let energy = discrete_energy(&k, grid)?;
    let h1 = exp_profile_from_boundary(pair, Orientation::Increasing)?;
    let mut sup = T::zero();
    for (&t, &v) in grid.nodes().iter().zip(&values) {
        sup = sup.max((v - h1.value(t)?).abs());
    }
    Ok(DiscreteSolution {
        profile: RadialProfile::Sampled(SampledProfile::new(grid.clone(), values)?),
        energy,
        sup_error_vs_closed_form: Some(sup),
        iterations,
        converged,
    })
}

/// Exact minimizer of `E_h` with `K(r) = log r★`, `K(R) = log R★`, from the
/// symmetric positive-definite tridiagonal normal equations.
pub fn minimize_reduced_energy<T: Real>(pair: &AnnulusPair<T>, grid: &RadialGrid<T>) -> Result<DiscreteSolution<T>> {
    require_matching_grid(pair, grid)?;
    let n = grid.nodes().len();
    let (rs, big_rs) = (pair.r_star(), pair.big_r_star());
    if rs == big_rs {
        return finish(pair, grid, vec![rs; n], 0, true);
    }
    let c = interval_coefficients(grid);
    let (k0, kn) = (rs.ln(), big_rs.ln());
    // Row j (interior node j): (c[j−1] + c[j])Kⱼ − c[j−1]Kⱼ₋₁ − c[j]Kⱼ₊₁ = 0.
    let m = n - 2;
    let diag: Vec<T> = (1..=m).map(|j| c[j - 1] + c[j]).collect();
    let off: Vec<T> = (1..m).map(|j| -c[j]).collect();
    let mut rhs = vec![T::zero(); m];
    rhs[0] = rhs[0] + c[0] * k0;
    rhs[m - 1] = rhs[m - 1] + c[n - 2] * kn;
    let interior = solve_symmetric_tridiagonal(&diag, &off, rhs);
    let mut values = Vec::with_capacity(n);
    values.push(rs);
    values.extend(interior.into_iter().map(|k| k.exp()));
    values.push(big_rs);
    finish(pair, grid, values, 1, true)
}

/// Thomas algorithm for a symmetric tridiagonal system with diagonal `d`
/// and off-diagonal `e` (`e.len() == d.len() − 1`). No pivoting; the
/// callers' matrices are diagonally dominant.
pub fn solve_symmetric_tridiagonal<T: Real>(d: &[T], e: &[T], mut rhs: Vec<T>) -> Vec<T> {
    let m = d.len();
    let mut diag = d.to_vec();
    for i in 1..m {
        let w = e[i - 1] / diag[i - 1];
        diag[i] = diag[i] - w * e[i - 1];
        rhs[i] = rhs[i] - w * rhs[i - 1];
    }
    rhs[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        rhs[i] = (rhs[i] - e[i] * rhs[i + 1]) / diag[i];
    }
    rhs
}

/// Step-length rule for [`gradient_descent_minimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule<T> {
    Fixed(T),
    /// Armijo backtracking from the previous accepted step.
    Backtracking,
    /// Barzilai–Borwein steps, safeguarded by backtracking on blow-up.
    BarzilaiBorwein,
}

/// Descent on `E_h` in the raw nodal values `H`, started from the affine
/// interpolation of the boundary log-values. Stops once the gradient norm
/// is at most `tol`; running out of iterations is reported through
/// `converged = false`.
pub fn gradient_descent_minimize<T: Real>(
    pair: &AnnulusPair<T>,
    grid: &RadialGrid<T>,
    step_rule: StepRule<T>,
    max_iter: usize,
    tol: T,
) -> Result<DiscreteSolution<T>> {
    require_matching_grid(pair, grid)?;
    let nodes = grid.nodes();
    let (r, big_r) = (pair.r(), pair.big_r());
    let (k0, kn) = (pair.r_star().ln(), pair.big_r_star().ln());
    let mut h: Vec<T> = nodes
        .iter()
        .map(|&t| (k0 + (kn - k0) * (t - r) / (big_r - r)).exp())
        .collect();
    let n = h.len();
    h[0] = pair.r_star();
    h[n - 1] = pair.big_r_star();

    let energy = |h: &[T]| -> Result<T> {
        if h.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Ok(T::infinity());
        }
        let k: Vec<T> = h.iter().map(|v| v.ln()).collect();
        discrete_energy(&k, grid)
    };
    // ∂E/∂Hⱼ = (∂E/∂Kⱼ)/Hⱼ
    let gradient = |h: &[T]| -> Result<Vec<T>> {
        let k: Vec<T> = h.iter().map(|v| v.ln()).collect();
        let g = reduced_energy_gradient(&k, grid)?;
        Ok(g.iter().zip(&h[1..n - 1]).map(|(&gk, &v)| gk / v).collect())
    };
    let norm = |v: &[T]| v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();

    let mut e = energy(&h)?;
    let mut g = gradient(&h)?;
    let mut step = match step_rule {
        StepRule::Fixed(s) => s,
        _ => T::one() / norm(&g).max(T::one()),
    };
    let mut iterations = 0;
    let mut converged = false;
    let mut prev: Option<(Vec<T>, Vec<T>)> = None;
    for _ in 0..max_iter {
        if norm(&g) <= tol {
            converged = true;
            break;
        }
        if let (StepRule::BarzilaiBorwein, Some((ph, pg))) = (step_rule, &prev) {
            let (mut sy, mut ss) = (T::zero(), T::zero());
            for j in 0..n - 2 {
                let s = h[j + 1] - ph[j + 1];
                sy = sy + s * (g[j] - pg[j]);
                ss = ss + s * s;
            }
            if sy > T::zero() {
                step = ss / sy;
            }
        }
        let g_sq = g.iter().fold(T::zero(), |a, &x| a + x * x);
        let mut trial;
        let mut e_trial;
        loop {
            trial = h.clone();
            for j in 1..n - 1 {
                trial[j] = h[j] - step * g[j - 1];
            }
            e_trial = energy(&trial)?;
            let accept = match step_rule {
                StepRule::Fixed(_) => true,
                StepRule::Backtracking => e_trial <= e - T::lit(1e-4) * step * g_sq,
                StepRule::BarzilaiBorwein => e_trial.is_finite() && e_trial <= e + e.abs(),
            };
            if accept || step < T::epsilon() * T::epsilon() {
                break;
            }
            step = step * T::lit(0.5);
        }
        if !e_trial.is_finite() {
            return Err(Error::SearchFailure("descent left the positive cone".into()));
        }
        prev = Some((h, g));
        h = trial;
        e = e_trial;
        g = gradient(&h)?;
        iterations += 1;
        if step_rule == StepRule::Backtracking {
            step = step * T::lit(2.0);
        }
    }
    if !converged && iterations == max_iter && max_iter > 0 {
        converged = norm(&g) <= tol;
    }
    finish(pair, grid, h, iterations, converged)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult<T> {
    pub initial_slope: T,
    /// RK4 trajectory sampled on a uniform grid with `ode_steps` intervals.
    pub profile: RadialProfile<T>,
    /// `H(R) − R★` for the accepted slope.
    pub boundary_miss: T,
}

/// Solves the Euler–Lagrange boundary value problem by shooting from
/// `(r, r★)`: RK4 for `Ḧ = (tḢ² − 2HḢ)/(tH)` and bisection on the initial
/// slope in `[−10, 10]·(R★ − r★)/(R − r)`, at most 200 halvings.
pub fn shoot_el<T: Real>(pair: &AnnulusPair<T>, ode_steps: usize, bisect_tol: T) -> Result<ShootingResult<T>> {
    pair.require_positive()?;
    let grid = make_radial_grid(&pair.domain, ode_steps, SpacingMode::UniformT)?;
    let (rs, big_rs) = (pair.r_star(), pair.big_r_star());
    if rs == big_rs {
        return Ok(ShootingResult {
            initial_slope: T::zero(),
            profile: RadialProfile::Sampled(SampledProfile::new(grid.clone(), vec![rs; grid.nodes().len()])?),
            boundary_miss: T::zero(),
        });
    }
    let miss = |s: T| -> T {
        match integrate_el(grid.nodes(), rs, s) {
            Some(path) => path[path.len() - 1] - big_rs,
            None if s > T::zero() => T::infinity(),
            None => T::neg_infinity(),
        }
    };
    let m = (big_rs - rs) / pair.domain.width();
    let (mut lo, mut hi) = (-T::lit(10.0) * m, T::lit(10.0) * m);
    let (f_lo, f_hi) = (miss(lo), miss(hi));
    if !(f_lo < T::zero() && f_hi > T::zero()) {
        return Err(Error::SearchFailure(format!(
            "slope bracket [{lo}, {hi}] does not straddle the boundary value (misses {f_lo}, {f_hi})"
        )));
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        let f_mid = miss(mid);
        if f_mid.abs() <= bisect_tol {
            let path = integrate_el(grid.nodes(), rs, mid).expect("finite trajectory");
            return Ok(ShootingResult {
                initial_slope: mid,
                profile: RadialProfile::Sampled(SampledProfile::new(grid, path)?),
                boundary_miss: f_mid,
            });
        }
        if f_mid < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::SearchFailure(format!(
        "bisection did not reach tolerance {bisect_tol} in 200 steps"
    )))
}

/// RK4 values of `H` at `nodes`; `None` if the trajectory leaves `H > 0` or
/// overflows.
fn integrate_el<T: Real>(nodes: &[T], h0: T, slope: T) -> Option<Vec<T>> {
    let rhs = |t: T, h: T, d: T| (t * d * d - T::lit(2.0) * h * d) / (t * h);
    let mut out = Vec::with_capacity(nodes.len());
    let (mut h, mut d) = (h0, slope);
    out.push(h);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    for w in nodes.windows(2) {
        let (t, dt) = (w[0], w[1] - w[0]);
        let (k1h, k1d) = (d, rhs(t, h, d));
        let (k2h, k2d) = {
            let (hh, dd) = (h + half * dt * k1h, d + half * dt * k1d);
            (dd, rhs(t + half * dt, hh, dd))
        };
        let (k3h, k3d) = {
            let (hh, dd) = (h + half * dt * k2h, d + half * dt * k2d);
            (dd, rhs(t + half * dt, hh, dd))
        };
        let (k4h, k4d) = {
            let (hh, dd) = (h + dt * k3h, d + dt * k3d);
            (dd, rhs(t + dt, hh, dd))
        };
        h = h + dt * sixth * (k1h + T::lit(2.0) * k2h + T::lit(2.0) * k3h + k4h);
        d = d + dt * sixth * (k1d + T::lit(2.0) * k2d + T::lit(2.0) * k3d + k4d);
        if !(h > T::zero()) || !h.is_finite() || !d.is_finite() {
            return None;
        }
        out.push(h);
    }
    Some(out)
}
