//! Standard normal density, distribution function and a few constants.

use statrs::function::erf::erfc;
use std::f64::consts::SQRT_2;

/// 1/sqrt(2*pi)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Upper quartile of the standard normal, i.e. the median of |N(0, 1)|.
pub const Z75: f64 = 0.674_489_750_196_081_7;

#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail `P(Z > x)`, accurate far into the tail.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `P(|X| > u)` for `X ~ N(mu, 1)`.
#[inline]
pub fn two_sided_tail(mu: f64, u: f64) -> f64 {
    sf(u - mu) + sf(u + mu)
}

