//! Laplace distribution truncated to a closed interval.

use rand::distr::{Distribution, Open01};
use rand::Rng;

use crate::error::{Error, Result};

/// Laplace(`mu`, `sigma`) restricted to `[lower, upper]`. Either bound may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedLaplace {
    pub mu: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedLaplace {
    pub fn new(mu: f64, sigma: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::BadConfig(format!("scale must be positive and finite, got {sigma}")));
        }
        if !mu.is_finite() || lower.is_nan() || upper.is_nan() || !(lower <= mu && mu <= upper) || lower == upper {
            return Err(Error::BadConfig(format!(
                "need lower <= mu <= upper with lower < upper, got {lower} <= {mu} <= {upper}"
            )));
        }
        Ok(Self {
            mu,
            sigma,
            lower,
            upper,
        })
    }

    /// Mass below `mu` before normalization: `exp(-(mu - lower) / sigma)`.
    fn lower_tail(&self) -> f64 {
        (-(self.mu - self.lower) / self.sigma).exp()
    }

    fn upper_tail(&self) -> f64 {
        (-(self.upper - self.mu) / self.sigma).exp()
    }

    /// Normalization constant `A = 2 - exp(-(upper - mu)/sigma) - exp(-(mu - lower)/sigma)`.
    pub fn normalizer(&self) -> f64 {
        2.0 - self.upper_tail() - self.lower_tail()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            return 0.0;
        }
        (-(x - self.mu).abs() / self.sigma).exp() / (self.sigma * self.normalizer())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return 1.0;
        }
        let l = self.lower_tail();
        let a = self.normalizer();
        if x <= self.mu {
            ((-(self.mu - x) / self.sigma).exp() - l) / a
        } else {
            (2.0 - (-(x - self.mu) / self.sigma).exp() - l) / a
        }
    }

    /// Inverse CDF: `mu + S sigma ln(1 + S (A u + L - 1))` with `S = sgn(F(mu) - u)`.
    ///
    /// The result is clamped to the support to absorb rounding.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::BadVariate(u));
        }
        let l = self.lower_tail();
        let a = self.normalizer();
        let f_mu = (1.0 - l) / a;
        let s = if f_mu - u >= 0.0 { 1.0 } else { -1.0 };
        let x = self.mu + s * self.sigma * (1.0 + s * (a * u + l - 1.0)).ln();
        Ok(x.clamp(self.lower, self.upper))
    }
}

/// Draws one variate from `d` using the uniform variate `u` in `(0, 1)`.
pub fn tld_sample(d: &TruncatedLaplace, u: f64) -> Result<f64> {
    d.inverse_cdf(u)
}

impl Distribution<f64> for TruncatedLaplace {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.inverse_cdf(u).expect("Open01 variates lie in (0, 1)")
    }
}
