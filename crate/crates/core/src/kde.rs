//! Sinc-kernel density estimate of a Gaussian location mixture.
//!
//! With `K(x) = sin(x)/(pi x)` and bandwidth parameter `a = sqrt(2 log n)`,
//! the estimate `(1/n) Σ a K(a (x - X_k))` equals the inverse Fourier
//! transform of the empirical characteristic function truncated to `[-a, a]`.
//! Both forms are available; the Fourier form tabulates the empirical
//! characteristic function once and is much cheaper for large samples.

use crate::error::{GebError, Result};
use crate::quadrature::GaussLegendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// How [`KernelDensityEstimate::eval`] computes its values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KdeMode {
    /// Kernel sum over all samples, O(n) per evaluation.
    #[default]
    Direct,
    /// Quadrature over the truncated characteristic function.
    Fourier,
}

/// Points further than this from the sample range are evaluated directly in
/// Fourier mode.
pub const FOURIER_PAD: f64 = 8.0;

const PANEL_ORDER: usize = 16;

fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_ORDER))
}

#[derive(Debug, Clone)]
struct FourierTable {
    lo: f64,
    hi: f64,
    freqs: Vec<f64>,
    weights: Vec<f64>,
    /// `(1/n) Σ cos(u X_k)` at each frequency node.
    cos_mean: Vec<f64>,
    /// `(1/n) Σ sin(u X_k)` at each frequency node.
    sin_mean: Vec<f64>,
}

impl FourierTable {
    fn build(samples: &[f64], a: f64) -> Self {
        let (min, max) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        let lo = min - FOURIER_PAD;
        let hi = max + FOURIER_PAD;
        let range = hi - lo;
        let needed = (4.0 * a * range / PI).ceil() as usize + 64;
        let panels = needed.div_ceil(PANEL_ORDER);
        let rule = panel_rule();
        let width = a / panels as f64;
        let mut freqs = Vec::with_capacity(panels * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
        for p in 0..panels {
            let mid = width * (p as f64 + 0.5);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                freqs.push(mid + 0.5 * width * x);
                weights.push(0.5 * width * w);
            }
        }
        let inv_n = 1.0 / samples.len() as f64;
        let mut cos_mean = Vec::with_capacity(freqs.len());
        let mut sin_mean = Vec::with_capacity(freqs.len());
        for &u in &freqs {
            let (mut c, mut s) = (0.0, 0.0);
            for &x in samples {
                let (sn, cs) = (u * x).sin_cos();
                c += cs;
                s += sn;
            }
            cos_mean.push(c * inv_n);
            sin_mean.push(s * inv_n);
        }
        FourierTable {
            lo,
            hi,
            freqs,
            weights,
            cos_mean,
            sin_mean,
        }
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let (mut v, mut d) = (0.0, 0.0);
        for i in 0..self.freqs.len() {
            let u = self.freqs[i];
            let (sn, cs) = (u * x).sin_cos();
            let w = self.weights[i];
            let (c, s) = (self.cos_mean[i], self.sin_mean[i]);
            v += w * (cs * c + sn * s);
            d += w * u * (cs * s - sn * c);
        }
        (v / PI, d / PI)
    }
}

/// `K(u) = sin(u)/(pi u)` with `K(0) = 1/pi`.
#[inline]
pub fn sinc_kernel(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        (1.0 - u * u / 6.0) / PI
    } else {
        u.sin() / (PI * u)
    }
}

/// `K'(u) = (u cos u - sin u)/(pi u^2)` with `K'(0) = 0`.
#[inline]
pub fn sinc_kernel_derivative(u: f64) -> f64 {
    if u.abs() < 1e-2 {
        let u2 = u * u;
        u * (-1.0 / 3.0 + u2 * (1.0 / 30.0 - u2 * (1.0 / 840.0 - u2 / 45_360.0))) / PI
    } else {
        let (s, c) = u.sin_cos();
        (u * c - s) / (PI * u * u)
    }
}

/// Kernel estimate of the marginal density of standardized observations.
#[derive(Debug, Clone)]
pub struct KernelDensityEstimate {
    samples: Vec<f64>,
    bandwidth: f64,
    mode: KdeMode,
    table: Option<FourierTable>,
}

impl KernelDensityEstimate {
    /// Fit with bandwidth `sqrt(2 log n)`; needs `n >= 3` finite samples.
    pub fn fit(samples: &[f64], mode: KdeMode) -> Result<Self> {
        let n = samples.len();
        if n < 3 {
            return Err(GebError::invalid(format!("kernel estimate needs n >= 3 samples, got {n}")));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(GebError::invalid("samples must be finite"));
        }
        let bandwidth = (2.0 * (n as f64).ln()).sqrt();
        let table = match mode {
            KdeMode::Direct => None,
            KdeMode::Fourier => Some(FourierTable::build(samples, bandwidth)),
        };
        Ok(KernelDensityEstimate {
            samples: samples.to_vec(),
            bandwidth,
            mode,
            table,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn mode(&self) -> KdeMode {
        self.mode
    }

    /// `(value, derivative)` of the estimate at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match &self.table {
            Some(t) if x >= t.lo && x <= t.hi => t.eval(x),
            _ => self.eval_direct(x),
        }
    }

    /// Kernel-sum evaluation regardless of mode.
    pub fn eval_direct(&self, x: f64) -> (f64, f64) {
        let a = self.bandwidth;
        let (mut v, mut d) = (0.0, 0.0);
        for &xk in &self.samples {
            let u = a * (x - xk);
            v += sinc_kernel(u);
            d += sinc_kernel_derivative(u);
        }
        let inv_n = 1.0 / self.samples.len() as f64;
        (a * v * inv_n, a * a * d * inv_n)
    }
}

/// Fit in direct mode.
pub fn kde_fit(samples: &[f64]) -> Result<KernelDensityEstimate> {
    KernelDensityEstimate::fit(samples, KdeMode::Direct)
}

pub fn kde_eval(k: &KernelDensityEstimate, x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(GebError::invalid("x must be finite"));
    }
    Ok(k.eval(x))
}
