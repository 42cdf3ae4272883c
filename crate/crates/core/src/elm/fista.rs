//! L1-regularized least squares by monotone accelerated proximal gradient.

use nalgebra::DMatrix;

use crate::linalg::max_eigenvalue;

/// Result of [`sparse_least_squares`].
#[derive(Debug, Clone)]
pub struct SparseSolution {
    /// `p x q` coefficients `α`.
    pub alpha: DMatrix<f64>,
    /// Objective `‖Aα − G‖² + λ‖α‖₁` before the first step and after every iteration.
    pub objective: Vec<f64>,
}

/// Solver settings for [`sparse_least_squares`].
#[derive(Debug, Clone, Copy)]
pub struct FistaOptions {
    pub lambda: f64,
    pub iters: usize,
    pub power_iters: usize,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            iters: 50,
            power_iters: 30,
        }
    }
}

fn soft_threshold(x: &mut DMatrix<f64>, t: f64) {
    x.apply(|v| *v = v.signum() * (v.abs() - t).max(0.0));
}

/// Evaluates the objective through the Gram quantities `AᵀA`, `AᵀG` and `‖G‖²`.
fn objective(ata: &DMatrix<f64>, atg: &DMatrix<f64>, gg: f64, lambda: f64, alpha: &DMatrix<f64>) -> f64 {
    let quad = alpha.dot(&(ata * alpha));
    let cross = alpha.dot(atg);
    (quad - 2.0 * cross + gg).max(0.0) + lambda * alpha.iter().map(|v| v.abs()).sum::<f64>()
}

/// Minimizes `‖Aα − G‖² + λ‖α‖₁` starting from `α = 0`.
///
/// Momentum steps are accepted only when they do not raise the objective
/// (the monotone variant), so the recorded objective never increases. The
/// step is `1/L` with `L = 2 λmax(AᵀA)` estimated by power iteration and
/// inflated slightly to stay above the true constant.
pub fn sparse_least_squares(a: &DMatrix<f64>, g: &DMatrix<f64>, opts: &FistaOptions) -> SparseSolution {
    let ata = a.tr_mul(a);
    let atg = a.tr_mul(g);
    let gg = g.norm_squared();
    let lip = 2.0 * max_eigenvalue(&ata, opts.power_iters) * 1.01;
    let step = if lip > 0.0 { 1.0 / lip } else { 0.0 };
    let thresh = opts.lambda * step;

    let mut x = DMatrix::zeros(a.ncols(), g.ncols());
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = objective(&ata, &atg, gg, opts.lambda, &x);
    let mut trace = Vec::with_capacity(opts.iters + 1);
    trace.push(fx);
    for _ in 0..opts.iters {
        let grad = (&ata * &y - &atg) * 2.0;
        let mut z = &y - grad * step;
        soft_threshold(&mut z, thresh);
        let fz = objective(&ata, &atg, gg, opts.lambda, &z);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let x_prev = x.clone();
        if fz <= fx {
            x = z.clone();
            fx = fz;
        }
        y = &x + (&z - &x) * (t / t_next) + (&x - &x_prev) * ((t - 1.0) / t_next);
        t = t_next;
        trace.push(fx);
    }
    SparseSolution { alpha: x, objective: trace }
}
