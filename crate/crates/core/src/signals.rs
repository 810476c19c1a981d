//! The four standard test functions of the wavelet-shrinkage literature,
//! sampled at `t_i = i/N`, `i = 1..=N`.

use crate::error::{GebError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalName {
    Blocks,
    Bumps,
    HeaviSine,
    Doppler,
}

impl SignalName {
    pub const ALL: [SignalName; 4] = [SignalName::Blocks, SignalName::Bumps, SignalName::HeaviSine, SignalName::Doppler];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalName::Blocks => "blocks",
            SignalName::Bumps => "bumps",
            SignalName::HeaviSine => "heavisine",
            SignalName::Doppler => "doppler",
        }
    }

    /// Closed-form value at `t`.
    pub fn eval(self, t: f64) -> f64 {
        match self {
            SignalName::Blocks => BLOCK_POS
                .iter()
                .zip(BLOCK_HEIGHT)
                .map(|(&p, h)| h * 0.5 * (1.0 + sign(t - p)))
                .sum(),
            SignalName::Bumps => BLOCK_POS
                .iter()
                .zip(BUMP_HEIGHT)
                .zip(BUMP_WIDTH)
                .map(|((&p, h), w)| h * (1.0 + ((t - p) / w).abs()).powi(-4))
                .sum(),
            SignalName::HeaviSine => 4.0 * (4.0 * PI * t).sin() - sign(t - 0.3) - sign(0.72 - t),
            SignalName::Doppler => {
                let e = 0.05;
                (t * (1.0 - t)).sqrt() * (2.0 * PI * (1.0 + e) / (t + e)).sin()
            }
        }
    }
}

impl fmt::Display for SignalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalName {
    type Err = GebError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "blocks" => Ok(SignalName::Blocks),
            "bumps" => Ok(SignalName::Bumps),
            "heavisine" => Ok(SignalName::HeaviSine),
            "doppler" => Ok(SignalName::Doppler),
            other => Err(GebError::invalid(format!(
                "unknown test signal '{other}' (expected blocks, bumps, heavisine or doppler)"
            ))),
        }
    }
}

// sign with sgn(0) = 0
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

const BLOCK_POS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCK_HEIGHT: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHT: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTH: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];

/// Population standard deviation.
pub fn population_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Samples at `i/N` and the noise level `sd(samples)/snr`.
pub fn test_signal(name: SignalName, n: usize, snr: f64) -> Result<(Vec<f64>, f64)> {
    if n < 2 || !n.is_power_of_two() {
        return Err(GebError::invalid(format!("test signals need a power-of-two length >= 2, got {n}")));
    }
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(GebError::invalid("snr must be positive and finite"));
    }
    let samples: Vec<f64> = (1..=n).map(|i| name.eval(i as f64 / n as f64)).collect();
    let sigma = population_sd(&samples) / snr;
    Ok((samples, sigma))
}
