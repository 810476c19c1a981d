//! Orthonormal periodic discrete wavelet transforms.
//!
//! Coefficients are returned in the flat dyadic layout
//! `y_{-1,1}, y_{0,1}, y_{1,1}, y_{1,2}, …, y_{J,2^J}` for a signal of length
//! `N = 2^(J+1)`, and are scaled by `N^{-1/2}`:
//!
//! ```text
//! dwt(x)   = N^{-1/2} W x        idwt(y) = N^{1/2} W^T y
//! Σ dwt(x)² = Σ x² / N
//! ```
//!
//! where `W` is the orthonormal periodic transform matrix. With this scaling
//! i.i.d. `N(0, σ²)` samples give coefficients of variance `σ²/N`.

use crate::error::{GebError, Result};
use crate::sequence::finest_level;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletName {
    Haar,
    /// 4-tap Daubechies (two vanishing moments).
    D4,
    /// 8-tap least-asymmetric Daubechies (symmlet, four vanishing moments).
    S8,
}

impl fmt::Display for WaveletName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WaveletName::Haar => "haar",
            WaveletName::D4 => "d4",
            WaveletName::S8 => "s8",
        })
    }
}

impl FromStr for WaveletName {
    type Err = GebError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(WaveletName::Haar),
            "d4" => Ok(WaveletName::D4),
            "s8" => Ok(WaveletName::S8),
            other => Err(GebError::invalid(format!("unknown wavelet '{other}' (expected haar, d4 or s8)"))),
        }
    }
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

// (1 ± √3)/(4√2), (3 ± √3)/(4√2)
const D4: [f64; 4] = [
    0.482_962_913_144_534_1,
    0.836_516_303_737_807_9,
    0.224_143_868_042_013_4,
    -0.129_409_522_551_260_34,
];

const S8: [f64; 8] = [
    -0.075_765_714_789_502_46,
    -0.029_635_527_646_003_884,
    0.497_618_667_632_772_96,
    0.803_738_751_805_132_4,
    0.297_857_795_605_308_56,
    -0.099_219_543_576_632_55,
    -0.012_603_967_262_032_107,
    0.032_223_100_604_052_12,
];

/// Scaling (low-pass) and wavelet (high-pass) filters with periodic boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    name: WaveletName,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletBasis {
    pub fn new(name: WaveletName) -> Self {
        let lowpass: Vec<f64> = match name {
            WaveletName::Haar => HAAR.to_vec(),
            WaveletName::D4 => D4.to_vec(),
            WaveletName::S8 => S8.to_vec(),
        };
        let len = lowpass.len();
        // quadrature mirror: g[m] = (-1)^m h[L-1-m]
        let highpass = (0..len)
            .map(|m| if m % 2 == 0 { lowpass[len - 1 - m] } else { -lowpass[len - 1 - m] })
            .collect();
        WaveletBasis { name, lowpass, highpass }
    }

    pub fn name(&self) -> WaveletName {
        self.name
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    fn analysis_step(&self, input: &[f64], approx: &mut [f64], detail: &mut [f64]) {
        let len = input.len();
        let half = len / 2;
        for k in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (m, (h, g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                let v = input[(2 * k + m) % len];
                a += h * v;
                d += g * v;
            }
            approx[k] = a;
            detail[k] = d;
        }
    }

    fn synthesis_step(&self, approx: &[f64], detail: &[f64], out: &mut [f64]) {
        let len = out.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..approx.len() {
            for (m, (h, g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                out[(2 * k + m) % len] += h * approx[k] + g * detail[k];
            }
        }
    }

    /// Orthonormal transform `W x` in the flat dyadic layout.
    pub fn forward_orthonormal(&self, signal: &[f64]) -> Result<Vec<f64>> {
        finest_level(signal.len())?;
        let mut out = vec![0.0; signal.len()];
        let mut current = signal.to_vec();
        let mut approx = vec![0.0; signal.len() / 2];
        let mut len = signal.len();
        while len > 1 {
            let half = len / 2;
            let (a, d) = (&mut approx[..half], &mut out[half..len]);
            self.analysis_step(&current[..len], a, d);
            current[..half].copy_from_slice(a);
            len = half;
        }
        out[0] = current[0];
        Ok(out)
    }

    /// Inverse of [`WaveletBasis::forward_orthonormal`].
    pub fn inverse_orthonormal(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        finest_level(coefficients.len())?;
        let total = coefficients.len();
        let mut current = vec![coefficients[0]];
        let mut len = 1;
        while len < total {
            let mut next = vec![0.0; 2 * len];
            self.synthesis_step(&current, &coefficients[len..2 * len], &mut next);
            current = next;
            len *= 2;
        }
        Ok(current)
    }
}

/// `N^{-1/2} W x`; needs a power-of-two length `>= 2`.
pub fn dwt(signal: &[f64], basis: &WaveletBasis) -> Result<Vec<f64>> {
    let scale = 1.0 / (signal.len() as f64).sqrt();
    Ok(basis.forward_orthonormal(signal)?.into_iter().map(|c| c * scale).collect())
}

/// `N^{1/2} W^T y`, the inverse of [`dwt`].
pub fn idwt(coefficients: &[f64], basis: &WaveletBasis) -> Result<Vec<f64>> {
    let scale = (coefficients.len() as f64).sqrt();
    Ok(basis.inverse_orthonormal(coefficients)?.into_iter().map(|c| c * scale).collect())
}
