//! Blocked sequences of noisy normal means and the blockwise estimator.

use crate::block::{hybrid_fit, james_stein_factor, Branch, FittedBlockRule, SmallBlockPolicy, TuningConfig};
use crate::error::{GebError, Result};
use crate::mixture::{bayes_risk, empirical_mixing};
use crate::rule::ScalarRule;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One block of observations. Dyadic sequences use the resolution level as
/// id, with `-1` for the coarsest (scaling) coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub id: i32,
    pub values: Vec<f64>,
}

/// Observations `y = beta + epsilon z` split into blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockedSequence {
    epsilon: f64,
    blocks: Vec<Block>,
    truth: Option<Vec<Vec<f64>>>,
}

/// Size of dyadic level `j`.
#[inline]
pub fn level_size(j: i32) -> usize {
    if j <= 0 {
        1
    } else {
        1usize << j
    }
}

/// Range of level `j` inside a flat dyadic coefficient vector laid out as
/// `y_{-1,1}, y_{0,1}, y_{1,1}, y_{1,2}, …`.
#[inline]
pub fn level_range(j: i32) -> std::ops::Range<usize> {
    if j < 0 {
        0..1
    } else {
        let start = 1usize << j;
        start..2 * start
    }
}

/// Finest level `J` of a flat dyadic vector of length `2^(J+1)`.
pub fn finest_level(len: usize) -> Result<i32> {
    if len < 2 || !len.is_power_of_two() {
        return Err(GebError::invalid(format!(
            "dyadic coefficient vectors need a power-of-two length >= 2, got {len}"
        )));
    }
    Ok(len.trailing_zeros() as i32 - 1)
}

fn split_dyadic(flat: &[f64]) -> Result<Vec<Block>> {
    let top = finest_level(flat.len())?;
    Ok((-1..=top)
        .map(|j| Block {
            id: j,
            values: flat[level_range(j)].to_vec(),
        })
        .collect())
}

impl BlockedSequence {
    pub fn new(epsilon: f64, blocks: Vec<Block>) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(GebError::invalid("epsilon must be positive and finite"));
        }
        if blocks.iter().any(|b| b.values.is_empty()) {
            return Err(GebError::invalid("every block must be nonempty"));
        }
        Ok(BlockedSequence {
            epsilon,
            blocks,
            truth: None,
        })
    }

    /// Dyadic preset: block `j` holds `2^(j ∨ 0)` coefficients, `j = -1..=J`.
    pub fn dyadic(flat: &[f64], epsilon: f64) -> Result<Self> {
        Self::new(epsilon, split_dyadic(flat)?)
    }

    /// Attach the true means, one vector per block.
    pub fn with_truth(mut self, truth: Vec<Vec<f64>>) -> Result<Self> {
        if truth.len() != self.blocks.len() || truth.iter().zip(&self.blocks).any(|(t, b)| t.len() != b.values.len()) {
            return Err(GebError::invalid("truth must have the same shape as the observations"));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    /// Attach dyadic truth from a flat vector.
    pub fn with_flat_truth(self, flat: &[f64]) -> Result<Self> {
        let blocks = split_dyadic(flat)?;
        self.with_truth(blocks.into_iter().map(|b| b.values).collect())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn truth(&self) -> Option<&[Vec<f64>]> {
        self.truth.as_deref()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.values.len()).collect()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect()
    }
}

/// Output of [`estimate_sequence`].
#[derive(Debug, Clone)]
pub struct SequenceEstimate {
    /// Same shape as the observation blocks.
    pub estimates: Vec<Vec<f64>>,
    pub fits: Vec<FittedBlockRule>,
}

impl SequenceEstimate {
    pub fn flatten(&self) -> Vec<f64> {
        self.estimates.iter().flatten().copied().collect()
    }
}

/// Rule for a block below `n_star`.
pub(crate) fn small_block_fit(values: &[f64], epsilon: f64, policy: SmallBlockPolicy) -> Result<FittedBlockRule> {
    Ok(match policy {
        SmallBlockPolicy::Mle => FittedBlockRule {
            rule: ScalarRule::Identity,
            branch: Branch::Mle,
            diagnostics: None,
        },
        SmallBlockPolicy::JamesStein => FittedBlockRule {
            rule: ScalarRule::Linear {
                factor: james_stein_factor(values, epsilon)?,
            },
            branch: Branch::JamesStein,
            diagnostics: None,
        },
    })
}

/// Fit and apply the blockwise rule to one block of raw observations.
pub(crate) fn estimate_block(values: &[f64], epsilon: f64, cfg: &TuningConfig) -> Result<(Vec<f64>, FittedBlockRule)> {
    if values.len() < cfg.n_star {
        let fit = small_block_fit(values, epsilon, cfg.small_block_policy)?;
        let out = match fit.rule {
            ScalarRule::Identity => values.to_vec(),
            ref r => r.apply(values),
        };
        return Ok((out, fit));
    }
    let xs: Vec<f64> = values.iter().map(|v| v / epsilon).collect();
    let fit = hybrid_fit(&xs, cfg)?;
    let out = fit.apply(&xs).into_iter().map(|t| epsilon * t).collect();
    Ok((out, fit))
}

/// Apply the hybrid rule to every block of size `>= n_star` and the
/// small-block policy elsewhere.
pub fn estimate_sequence(seq: &BlockedSequence, cfg: &TuningConfig) -> Result<SequenceEstimate> {
    cfg.validate()?;
    let eps = seq.epsilon;
    let results: Vec<(Vec<f64>, FittedBlockRule)> = seq
        .blocks
        .par_iter()
        .map(|b| estimate_block(&b.values, eps, cfg))
        .collect::<Result<_>>()?;
    let (estimates, fits) = results.into_iter().unzip();
    Ok(SequenceEstimate { estimates, fits })
}

/// Per-block ideal risks `eps^2 n_j R*(G_j)`.
pub fn block_ideal_risks(seq: &BlockedSequence) -> Result<Vec<f64>> {
    let truth = seq
        .truth
        .as_ref()
        .ok_or_else(|| GebError::invalid("ideal_risk needs the true means"))?;
    let eps = seq.epsilon;
    truth
        .par_iter()
        .map(|beta| {
            let g = empirical_mixing(beta, eps)?;
            Ok(eps * eps * beta.len() as f64 * bayes_risk(&g)?)
        })
        .collect()
}

/// Risk of the best separable rule: `Σ_j eps^2 n_j R*(G_j)`.
pub fn ideal_risk(seq: &BlockedSequence) -> Result<f64> {
    Ok(block_ideal_risks(seq)?.iter().sum())
}

/// Recognized block-size schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulePreset {
    /// `1, 1, 2, 4, …, 2^J`
    Dyadic,
    /// `n_0 g^i`
    Geometric { base: f64 },
}

/// Finite-horizon diagnostics of a block-size schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockScheduleReport {
    /// `Σ (1 + log n_j)^{-3/2}` over the given blocks.
    pub partial_sum: f64,
    /// Whether `log n_j` is nondecreasing.
    pub log_monotone: bool,
    pub preset: Option<SchedulePreset>,
    pub warning: Option<String>,
}

pub fn check_blocks(sizes: &[usize]) -> Result<BlockScheduleReport> {
    if sizes.contains(&0) {
        return Err(GebError::invalid("block sizes must be positive"));
    }
    let partial_sum = sizes.iter().map(|&n| (1.0 + (n as f64).ln()).powf(-1.5)).sum();
    let log_monotone = sizes.windows(2).all(|w| w[1] >= w[0]);
    let preset = detect_preset(sizes);
    let warning = if preset.is_some() {
        None
    } else if sizes.len() >= 2 && sizes.iter().all(|&n| n == sizes[0]) {
        Some("constant block sizes: blocks of bounded size recur without end, so the small-block sum diverges".to_string())
    } else {
        Some("block sizes are neither dyadic nor geometric; growth conditions are not verified".to_string())
    };
    Ok(BlockScheduleReport {
        partial_sum,
        log_monotone,
        preset,
        warning,
    })
}

fn detect_preset(sizes: &[usize]) -> Option<SchedulePreset> {
    if sizes.len() >= 2 && sizes.iter().enumerate().all(|(i, &n)| n == level_size(i as i32 - 1)) {
        return Some(SchedulePreset::Dyadic);
    }
    if sizes.len() < 2 || sizes[1] <= sizes[0] {
        return None;
    }
    let n0 = sizes[0] as f64;
    let base = sizes[1] as f64 / n0;
    let geometric = sizes
        .iter()
        .enumerate()
        .all(|(i, &n)| (n as f64 - n0 * base.powi(i as i32)).abs() <= 0.5);
    geometric.then_some(SchedulePreset::Geometric { base })
}

/// Per-block line of a risk report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRisk {
    pub block_id: i32,
    pub size: usize,
    /// Branch taken in the first replicate.
    pub branch: Branch,
    pub empirical_mse: f64,
    pub ideal_risk: f64,
    /// `eps^2 n r_{p∧2}(n, mu_p(G))`; absent for blocks with fewer than 3 coefficients.
    pub bound_r_p: Option<f64>,
    /// `eps^2 n r_0(n, G)`; absent for blocks with fewer than 3 coefficients.
    pub bound_r0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskTotals {
    pub total_mse: f64,
    pub total_ideal: f64,
    pub regret: f64,
}

/// Risk decomposition of an estimate of a blocked sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub per_block: Vec<BlockRisk>,
    pub totals: RiskTotals,
    /// Monte Carlo standard error of `total_mse`, when averaged over replicates.
    pub total_mse_se: Option<f64>,
    pub replicates: usize,
}

impl RiskReport {
    /// Build from per-block entries; totals are fixed-order sums.
    pub fn from_blocks(per_block: Vec<BlockRisk>, total_mse_se: Option<f64>, replicates: usize) -> Self {
        let total_mse: f64 = per_block.iter().map(|b| b.empirical_mse).sum();
        let total_ideal: f64 = per_block.iter().map(|b| b.ideal_risk).sum();
        RiskReport {
            per_block,
            totals: RiskTotals {
                total_mse,
                total_ideal,
                regret: total_mse - total_ideal,
            },
            total_mse_se,
            replicates,
        }
    }
}
