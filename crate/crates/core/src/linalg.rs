//! Small dense linear-algebra helpers shared by the classifiers and the optimizer.

use nalgebra::{DMatrix, DVector};

/// Solves `a x = b` for symmetric positive definite `a`.
///
/// Falls back to LU and then to an SVD pseudo-inverse when the matrix is
/// numerically singular; each fallback is logged.
pub fn solve_spd(a: DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = a.clone().cholesky() {
        let x = chol.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return x;
        }
    }
    log::warn!("cholesky failed on {}x{} system, trying LU", a.nrows(), a.ncols());
    if let Some(x) = a.clone().lu().solve(b) {
        if x.iter().all(|v| v.is_finite()) {
            return x;
        }
    }
    log::warn!("LU failed, using SVD pseudo-inverse");
    pinv(&a) * b
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let eps = f64::EPSILON * a.nrows().max(a.ncols()) as f64 * max_sv;
    svd.pseudo_inverse(eps)
        .unwrap_or_else(|_| DMatrix::zeros(a.ncols(), a.nrows()))
}

/// Largest eigenvalue of the symmetric positive semidefinite `m` by power iteration.
pub fn max_eigenvalue(m: &DMatrix<f64>, iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // A fixed, non-degenerate start vector keeps the estimate deterministic.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_7).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.dot(&w);
        v = w / norm;
    }
    lambda.max((m * &v).norm())
}

/// Relative Frobenius distance `‖a − b‖ / max(‖b‖, tiny)`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Column means and standard deviations; zero deviations are replaced by 1.
pub fn column_stats(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows().max(1) as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut sds = Vec::with_capacity(x.ncols());
    for col in x.column_iter() {
        let m = col.sum() / n;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        let sd = var.sqrt();
        means.push(m);
        sds.push(if sd > 1e-12 { sd } else { 1.0 });
    }
    (means, sds)
}

/// Applies `(x − mean) / sd` column-wise.
pub fn standardize(x: &DMatrix<f64>, means: &[f64], sds: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - means[j]) / sds[j])
}

/// Appends a column of ones.
pub fn with_bias_column(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(x.ncols(), 1.0)
}

/// Converts a matrix to row-major nested vectors.
pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Builds a matrix from row-major nested vectors; all rows must share a length.
pub fn from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return None;
    }
    Some(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
}
