//! "Same"-size convolution with reflect padding.

use nalgebra::DMatrix;

/// Maps an out-of-range index back into `0..n` by mirror reflection
/// about the first and last samples (the edge sample is not repeated).
pub fn reflect(p: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut q = p.rem_euclid(period);
    if q >= n as isize {
        q = period - q;
    }
    q as usize
}

/// Convolves `x` with the odd-length, centred kernel `h`, output length = input length.
pub fn conv1d_same(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    let half = (h.len() / 2) as isize;
    (0..n as isize)
        .map(|i| {
            h.iter()
                .enumerate()
                .map(|(k, &hk)| hk * x[reflect(i - (k as isize - half), n)])
                .sum()
        })
        .collect()
}

/// Convolves along the row (spectral) axis and returns only the requested output rows.
pub fn conv_rows_at(x: &DMatrix<f64>, h: &[f64], rows: &[usize]) -> DMatrix<f64> {
    let (n, frames) = x.shape();
    let half = (h.len() / 2) as isize;
    let mut out = DMatrix::zeros(rows.len(), frames);
    for (o, &r) in rows.iter().enumerate() {
        for (k, &hk) in h.iter().enumerate() {
            if hk == 0.0 {
                continue;
            }
            let src = reflect(r as isize - (k as isize - half), n);
            for j in 0..frames {
                out[(o, j)] += hk * x[(src, j)];
            }
        }
    }
    out
}

/// Convolves every row along the column (temporal) axis.
pub fn conv_cols(x: &DMatrix<f64>, h: &[f64]) -> DMatrix<f64> {
    let (rows, frames) = x.shape();
    let half = (h.len() / 2) as isize;
    let mut out = DMatrix::zeros(rows, frames);
    for j in 0..frames {
        for (k, &hk) in h.iter().enumerate() {
            if hk == 0.0 {
                continue;
            }
            let src = reflect(j as isize - (k as isize - half), frames);
            for r in 0..rows {
                out[(r, j)] += hk * x[(r, src)];
            }
        }
    }
    out
}

/// Direct 2D convolution with a centred kernel of odd dimensions.
pub fn conv2d_same(x: &DMatrix<f64>, k: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = x.shape();
    let (hr, hc) = ((k.nrows() / 2) as isize, (k.ncols() / 2) as isize);
    DMatrix::from_fn(n, m, |i, j| {
        let mut acc = 0.0;
        for a in 0..k.nrows() {
            let si = reflect(i as isize - (a as isize - hr), n);
            for b in 0..k.ncols() {
                let sj = reflect(j as isize - (b as isize - hc), m);
                acc += k[(a, b)] * x[(si, sj)];
            }
        }
        acc
    })
}
