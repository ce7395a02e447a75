//! Shared numeric helpers: rank decisions, periodic wrapping, least squares.

use nalgebra::{DMatrix, DVector};

/// Rank of a matrix by singular values, counting those above
/// `rel_tol * sigma_max`. An all-zero or empty matrix has rank 0.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Wrap `x` into the centered fundamental interval (-period/2, period/2].
pub fn wrap_centered(x: f64, period: f64) -> f64 {
    let mut w = x - period * (x / period).round();
    if w <= -period / 2.0 {
        w += period;
    }
    w
}

/// Minimum-norm least-squares solution of `a x = b` together with the
/// residual norm `|a x - b|`.
pub fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, sv_eps(&svd.singular_values))
        .expect("svd with u and v_t computed");
    let residual = (a * &x - b).norm();
    (x, residual)
}

fn sv_eps(sv: &DVector<f64>) -> f64 {
    let max = if sv.is_empty() { 0.0 } else { sv.max() };
    1e-13 * max.max(1.0)
}

/// Smallest and largest singular values.
pub fn singular_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sv = m.clone().singular_values();
    if sv.is_empty() {
        return (0.0, 0.0);
    }
    (sv.min(), sv.max())
}
