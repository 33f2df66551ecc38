//! Finite-difference weights on arbitrary (nonuniform) stencils.

use crate::scalar::Real;

/// Fornberg's recursion: `w[m][j]` is the weight of `f(xs[j])` in the
/// approximation of the `m`-th derivative at `x0`, for `m ≤ max_order`.
pub fn fornberg_weights<T: Real>(x0: T, xs: &[T], max_order: usize) -> Vec<Vec<T>> {
    let n = xs.len();
    let mut w = vec![vec![T::zero(); n]; max_order + 1];
    if n == 0 {
        return w;
    }
    w[0][0] = T::one();
    let mut c1 = T::one();
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    let kf = T::from_usize_lossy(k);
                    w[k][i] = c1 * (kf * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                let kf = T::from_usize_lossy(k);
                w[k][j] = (c4 * w[k][j] - kf * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// Applies a weight row to sampled values.
pub fn apply<T: Real>(weights: &[T], values: &[T]) -> T {
    weights.iter().zip(values).fold(T::zero(), |acc, (&w, &v)| acc + w * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_central_stencil() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[0], vec![0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(w[1][0], -0.5);
        assert_abs_diff_eq!(w[1][2], 0.5);
        assert_abs_diff_eq!(w[2][0], 1.0);
        assert_abs_diff_eq!(w[2][1], -2.0);
        assert_abs_diff_eq!(w[2][2], 1.0);
    }

    #[test]
    fn one_sided_second_derivative() {
        // (2f0 − 5f1 + 4f2 − f3)/h²
        let w = fornberg_weights(0.0, &[0.0, 1.0, 2.0, 3.0], 2);
        for (a, b) in w[2].iter().zip([2.0, -5.0, 4.0, -1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn nonuniform_exact_on_quadratics() {
        let xs = [1.0, 1.3, 2.1];
        let w = fornberg_weights(1.3, &xs, 2);
        let f = |x: f64| 3.0 * x * x - x + 2.0;
        let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        assert_abs_diff_eq!(apply(&w[1], &vals), 6.0 * 1.3 - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(apply(&w[2], &vals), 6.0, epsilon = 1e-12);
    }
}
