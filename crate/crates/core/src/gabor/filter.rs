//! One- and two-dimensional complex Gabor kernels.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Sampled 1D Gabor kernel centred at index `half`.
///
/// `kernel[half + t] = g(t) exp(j 2π u0 t)` with the normalized Gaussian
/// envelope `g(t) = exp(-t² / 2σ²) / (√(2π) σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborFilter1D {
    pub kernel: Vec<Complex64>,
    /// Centre modulation frequency in cycles per sample.
    pub u0: f64,
    /// Envelope standard deviation in samples.
    pub sigma_x: f64,
    /// Whether the DC component has been removed.
    pub compensated: bool,
}

fn gaussian(t: f64, sigma: f64) -> f64 {
    (-t * t / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::BadConfig(format!("envelope SD must be positive, got {sigma}")))
    }
}

impl GaborFilter1D {
    /// Uncompensated kernel on the support `-half..=half`.
    pub fn new(u0: f64, sigma_x: f64, half: usize) -> Result<Self> {
        check_sigma(sigma_x)?;
        let kernel = (-(half as isize)..=half as isize)
            .map(|t| {
                let t = t as f64;
                Complex64::from_polar(gaussian(t, sigma_x), 2.0 * PI * u0 * t)
            })
            .collect();
        Ok(Self {
            kernel,
            u0,
            sigma_x,
            compensated: false,
        })
    }

    /// Kernel with the zero-frequency response removed.
    ///
    /// A scaled copy of the envelope is subtracted so the kernel sums to zero.
    /// Kernels with `u0 = 0` are returned unchanged, since they are the DC filters.
    pub fn compensated(u0: f64, sigma_x: f64, half: usize) -> Result<Self> {
        let mut f = Self::new(u0, sigma_x, half)?;
        if u0 != 0.0 {
            let env = f.envelope();
            let kappa = f.kernel.iter().sum::<Complex64>() / env.iter().sum::<f64>();
            for (k, g) in f.kernel.iter_mut().zip(&env) {
                *k -= kappa * g;
            }
            f.compensated = true;
        }
        Ok(f)
    }

    pub fn half(&self) -> usize {
        self.kernel.len() / 2
    }

    /// The real Gaussian envelope on the same support.
    pub fn envelope(&self) -> Vec<f64> {
        let h = self.half() as isize;
        (-h..=h).map(|t| gaussian(t as f64, self.sigma_x)).collect()
    }

    pub fn real(&self) -> Vec<f64> {
        self.kernel.iter().map(|c| c.re).collect()
    }

    pub fn imag(&self) -> Vec<f64> {
        self.kernel.iter().map(|c| c.im).collect()
    }

    /// Bandwidth of the Gaussian response, `1 / (2π σ_x)`.
    pub fn sigma_u(&self) -> f64 {
        1.0 / (2.0 * PI * self.sigma_x)
    }

    /// Closed-form response of the continuous filter, `2πσ exp(-2π²σ²(u - u0)²)`.
    pub fn analytic_response(&self, u: f64) -> f64 {
        let s = self.sigma_x;
        2.0 * PI * s * (-2.0 * PI * PI * s * s * (u - self.u0).powi(2)).exp()
    }

    /// Discrete-time Fourier transform of the sampled kernel at `u` cycles/sample.
    pub fn dtft(&self, u: f64) -> Complex64 {
        let h = self.half() as f64;
        self.kernel
            .iter()
            .enumerate()
            .map(|(i, &k)| k * Complex64::from_polar(1.0, -2.0 * PI * u * (i as f64 - h)))
            .sum()
    }
}

/// Sampled 2D Gabor kernel; rows run along the spectral axis, columns along time.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborFilter2D {
    pub kernel: DMatrix<Complex64>,
    /// Spectral modulation frequency, cycles per channel.
    pub u0: f64,
    /// Temporal modulation frequency, cycles per frame.
    pub v0: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// DC-compensation factor: the kernel is `h - kappa * g` for envelope `g`.
    pub kappa: Complex64,
}

impl GaborFilter2D {
    /// Direct evaluation of the 2D kernel
    /// `h(x, y) = exp(-x²/2σx² - y²/2σy²) exp(j2π(u0 x + v0 y)) / (2π σx σy)`,
    /// optionally with the DC component removed.
    pub fn new(
        u0: f64,
        v0: f64,
        sigma_x: f64,
        sigma_y: f64,
        half_x: usize,
        half_y: usize,
        compensate: bool,
    ) -> Result<Self> {
        check_sigma(sigma_x)?;
        check_sigma(sigma_y)?;
        let (hx, hy) = (half_x as f64, half_y as f64);
        let norm = 1.0 / (2.0 * PI * sigma_x * sigma_y);
        let env = DMatrix::from_fn(2 * half_x + 1, 2 * half_y + 1, |i, j| {
            let (x, y) = (i as f64 - hx, j as f64 - hy);
            norm * (-x * x / (2.0 * sigma_x * sigma_x) - y * y / (2.0 * sigma_y * sigma_y)).exp()
        });
        let mut kernel = DMatrix::from_fn(env.nrows(), env.ncols(), |i, j| {
            let (x, y) = (i as f64 - hx, j as f64 - hy);
            Complex64::from_polar(env[(i, j)], 2.0 * PI * (u0 * x + v0 * y))
        });
        let mut kappa = Complex64::new(0.0, 0.0);
        if compensate && (u0 != 0.0 || v0 != 0.0) {
            kappa = kernel.sum() / env.sum();
            kernel.zip_apply(&env, |k, g| *k -= kappa * g);
        }
        Ok(Self {
            kernel,
            u0,
            v0,
            sigma_x,
            sigma_y,
            kappa,
        })
    }

    pub fn half_x(&self) -> usize {
        self.kernel.nrows() / 2
    }

    pub fn half_y(&self) -> usize {
        self.kernel.ncols() / 2
    }

    pub fn real(&self) -> DMatrix<f64> {
        self.kernel.map(|c| c.re)
    }

    /// Closed-form 2D response, the product of the two 1D responses.
    pub fn analytic_response(&self, u: f64, v: f64) -> f64 {
        let (sx, sy) = (self.sigma_x, self.sigma_y);
        4.0 * PI * PI * sx * sy
            * (-2.0 * PI * PI * (sx * sx * (u - self.u0).powi(2) + sy * sy * (v - self.v0).powi(2))).exp()
    }

    /// DTFT of the sampled kernel at `(u, v)`.
    pub fn dtft(&self, u: f64, v: f64) -> Complex64 {
        let (hx, hy) = (self.half_x() as f64, self.half_y() as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.kernel.nrows() {
            for j in 0..self.kernel.ncols() {
                let phase = -2.0 * PI * (u * (i as f64 - hx) + v * (j as f64 - hy));
                acc += self.kernel[(i, j)] * Complex64::from_polar(1.0, phase);
            }
        }
        acc
    }
}
