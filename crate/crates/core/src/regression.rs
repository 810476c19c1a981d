//! Nonparametric regression through wavelet shrinkage: equispaced design with
//! any shipped basis and random uniform design with Haar wavelets.

use crate::block::{hybrid_fit_any_size, tuning, Branch, FittedBlockRule, HybridDiagnostics, TuningConfig};
use crate::error::{GebError, Result};
use crate::normal::Z75;
use crate::sequence::{estimate_sequence, finest_level, level_range, level_size, small_block_fit, BlockedSequence};
use crate::wavelet::{dwt, idwt, WaveletBasis, WaveletName};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// MAD noise estimate from the finest-level coefficients:
/// `median(sqrt(N) |y_{J,k}|) / z_0.75`. Returns 0 for an all-zero input.
pub fn mad_sigma(finest: &[f64], n: usize) -> Result<f64> {
    if finest.is_empty() {
        return Err(GebError::invalid("mad_sigma needs at least one coefficient"));
    }
    let scale = (n as f64).sqrt();
    let mut abs: Vec<f64> = finest.iter().map(|v| scale * v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let m = abs.len();
    let median = if m % 2 == 1 {
        abs[m / 2]
    } else {
        0.5 * (abs[m / 2 - 1] + abs[m / 2])
    };
    Ok(median / Z75)
}

/// Estimated noise levels at or below this multiple of `max |Y|` are
/// treated as zero.
pub const SIGMA_ROUNDOFF: f64 = 1e-10;

/// Per-level line of a denoising run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: i32,
    pub size: usize,
    pub branch: Branch,
    pub diagnostics: Option<HybridDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Denoised {
    pub fhat: Vec<f64>,
    /// Noise level used (given or estimated).
    pub sigma: f64,
    /// `sigma / sqrt(N)`.
    pub epsilon: f64,
    pub coefficients: Vec<f64>,
    pub estimated_coefficients: Vec<f64>,
    /// Empty when `sigma = 0` and the input was returned unchanged.
    pub levels: Vec<LevelSummary>,
}

fn level_summaries(seq: &BlockedSequence, fits: &[FittedBlockRule]) -> Vec<LevelSummary> {
    seq.blocks()
        .iter()
        .zip(fits)
        .map(|(b, f)| LevelSummary {
            level: b.id,
            size: b.values.len(),
            branch: f.branch,
            diagnostics: f.diagnostics,
        })
        .collect()
}

/// Denoise equispaced samples `Y_i = f(i/N) + sigma z_i`.
///
/// `sigma = None` estimates the noise level with [`mad_sigma`].
pub fn denoise_equispaced(y: &[f64], basis: &WaveletBasis, cfg: &TuningConfig, sigma: Option<f64>) -> Result<Denoised> {
    cfg.validate()?;
    let top = finest_level(y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GebError::invalid("samples must be finite"));
    }
    let coefficients = dwt(y, basis)?;
    let sigma = match sigma {
        Some(s) if s >= 0.0 && s.is_finite() => s,
        Some(s) => return Err(GebError::invalid(format!("sigma must be nonnegative and finite, got {s}"))),
        None => {
            // a noiseless input leaves only round-off in the finest level
            let s = mad_sigma(&coefficients[level_range(top)], y.len())?;
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if s <= SIGMA_ROUNDOFF * scale {
                0.0
            } else {
                s
            }
        }
    };
    let epsilon = sigma / (y.len() as f64).sqrt();
    if epsilon == 0.0 {
        return Ok(Denoised {
            fhat: y.to_vec(),
            sigma,
            epsilon,
            estimated_coefficients: coefficients.clone(),
            coefficients,
            levels: Vec::new(),
        });
    }
    let seq = BlockedSequence::dyadic(&coefficients, epsilon)?;
    let est = estimate_sequence(&seq, cfg)?;
    let estimated = est.flatten();
    Ok(Denoised {
        fhat: idwt(&estimated, basis)?,
        sigma,
        epsilon,
        levels: level_summaries(&seq, &est.fits),
        coefficients,
        estimated_coefficients: estimated,
    })
}

/// Soft thresholding at `epsilon sqrt(2 log N)` of every level with at least
/// `n_star` coefficients; coarser levels are kept. Baseline for comparisons.
pub fn universal_soft_equispaced(y: &[f64], basis: &WaveletBasis, sigma: f64, n_star: usize) -> Result<Vec<f64>> {
    let top = finest_level(y.len())?;
    let mut c = dwt(y, basis)?;
    let eps = sigma / (y.len() as f64).sqrt();
    let lambda = eps * (2.0 * (y.len() as f64).ln()).sqrt();
    for j in 0..=top {
        if level_size(j) >= n_star {
            for v in &mut c[level_range(j)] {
                *v = crate::block::soft(*v, lambda);
            }
        }
    }
    idwt(&c, basis)
}

/// A function on `(0, 1]` constant on the `2^m` cells `((k-1)/2^m, k/2^m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_power_of_two() {
            return Err(GebError::invalid("piecewise-constant functions need a power-of-two number of cells"));
        }
        Ok(PiecewiseConstant { values })
    }

    pub fn constant(c: f64) -> Self {
        PiecewiseConstant { values: vec![c] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    /// Value at `t`; points outside `(0, 1]` are clamped to the end cells.
    pub fn eval(&self, t: f64) -> f64 {
        self.values[cell_index(t, self.values.len())]
    }

    /// `∫_0^1 f²`.
    pub fn integral_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    /// Cell averages at `cells` equal cells (refining or aggregating).
    pub fn averages(&self, cells: usize) -> Result<Vec<f64>> {
        if cells == 0 || !cells.is_power_of_two() {
            return Err(GebError::invalid("cell count must be a power of two"));
        }
        let own = self.values.len();
        Ok(if cells >= own {
            let rep = cells / own;
            self.values.iter().flat_map(|&v| std::iter::repeat_n(v, rep)).collect()
        } else {
            let agg = own / cells;
            self.values.chunks(agg).map(|c| c.iter().sum::<f64>() / agg as f64).collect()
        })
    }
}

/// Zero-based index of the half-open cell `((k-1)/m, k/m]` containing `t`.
fn cell_index(t: f64, m: usize) -> usize {
    let k = (t * m as f64).ceil();
    if k < 1.0 {
        0
    } else {
        (k as usize).min(m) - 1
    }
}

/// Haar coefficients `beta_{j,k}`, `j = -1..=J`, of a function exactly
/// representable at resolution `J + 1`, in the flat dyadic layout.
pub fn haar_coefficients(f: &PiecewiseConstant, max_level: i32) -> Result<Vec<f64>> {
    if max_level < 0 {
        return Err(GebError::invalid("J must be nonnegative"));
    }
    let cells = 1usize << (max_level + 1);
    if f.cells() > cells {
        return Err(GebError::invalid(format!(
            "function has {} cells, finer than resolution {}",
            f.cells(),
            max_level + 1
        )));
    }
    let mut means = f.averages(cells)?;
    let mut out = vec![0.0; cells];
    let mut j = max_level;
    while j >= 0 {
        let half = means.len() / 2;
        let denom = 2f64.powf(j as f64 / 2.0 + 1.0);
        for k in 0..half {
            out[half + k] = (means[2 * k] - means[2 * k + 1]) / denom;
        }
        means = means.chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        j -= 1;
    }
    out[0] = means[0];
    Ok(out)
}

/// Naive Haar coefficients of a random-design sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomDesignData {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub max_level: i32,
    /// `counts[l][k]`: number of design points in cell `k` of level `l`, `l = 0..=J+1`.
    pub counts: Vec<Vec<usize>>,
    /// Cell means of the responses, same shape as `counts` (0 for empty cells).
    pub cell_means: Vec<Vec<f64>>,
    /// Flat dyadic indicators, `delta[0] = 1` for the coarsest coefficient.
    pub delta: Vec<u8>,
    /// Flat dyadic coefficients.
    pub coefficients: Vec<f64>,
    /// `n_j = Σ_k delta_{j,k}` for `j = -1..=J`.
    pub effective_sizes: Vec<usize>,
}

impl RandomDesignData {
    pub fn sample_size(&self) -> usize {
        self.y.len()
    }
}

/// Cell counts and means at levels `0..=J+1` and the coefficients
/// `y_{j,k} = delta (Ybar_L - Ybar_R) / (sqrt(N) (1/N_L + 1/N_R)^{1/2})`.
pub fn random_design_transform(t: &[f64], y: &[f64], max_level: i32) -> Result<RandomDesignData> {
    if t.is_empty() {
        return Err(GebError::invalid("random design needs at least one observation"));
    }
    if t.len() != y.len() {
        return Err(GebError::invalid(format!(
            "design points ({}) and responses ({}) differ in length",
            t.len(),
            y.len()
        )));
    }
    if !(0..=30).contains(&max_level) {
        return Err(GebError::invalid("J must lie in 0..=30"));
    }
    if t.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(GebError::invalid("design points must lie in (0, 1]"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(GebError::invalid("responses must be finite"));
    }
    let finest = (max_level + 1) as usize;
    let m = 1usize << finest;
    let mut counts = vec![0usize; m];
    let mut sums = vec![0.0; m];
    for (&ti, &yi) in t.iter().zip(y) {
        let k = cell_index(ti, m);
        counts[k] += 1;
        sums[k] += yi;
    }
    let mut all_counts = vec![counts];
    let mut all_sums = vec![sums];
    while all_counts.last().map_or(0, Vec::len) > 1 {
        let c = all_counts.last().unwrap();
        let s = all_sums.last().unwrap();
        let next_c: Vec<usize> = c.chunks(2).map(|p| p[0] + p[1]).collect();
        let next_s: Vec<f64> = s.chunks(2).map(|p| p[0] + p[1]).collect();
        all_counts.push(next_c);
        all_sums.push(next_s);
    }
    all_counts.reverse();
    all_sums.reverse();
    let cell_means: Vec<Vec<f64>> = all_counts
        .iter()
        .zip(&all_sums)
        .map(|(c, s)| c.iter().zip(s).map(|(&n, &v)| if n > 0 { v / n as f64 } else { 0.0 }).collect())
        .collect();

    let root_n = (t.len() as f64).sqrt();
    let mut coefficients = vec![0.0; m];
    let mut delta = vec![0u8; m];
    coefficients[0] = cell_means[0][0];
    delta[0] = 1;
    let mut effective_sizes = vec![1usize];
    for j in 0..=max_level {
        let child = (j + 1) as usize;
        let mut nj = 0;
        for (k, idx) in level_range(j).enumerate() {
            let (nl, nr) = (all_counts[child][2 * k], all_counts[child][2 * k + 1]);
            if nl > 0 && nr > 0 {
                let diff = cell_means[child][2 * k] - cell_means[child][2 * k + 1];
                coefficients[idx] = diff / (root_n * (1.0 / nl as f64 + 1.0 / nr as f64).sqrt());
                delta[idx] = 1;
                nj += 1;
            }
        }
        effective_sizes.push(nj);
    }
    Ok(RandomDesignData {
        t: t.to_vec(),
        y: y.to_vec(),
        max_level,
        counts: all_counts,
        cell_means,
        delta,
        coefficients,
        effective_sizes,
    })
}

/// Result of [`random_design_estimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomDesignFit {
    pub fhat: PiecewiseConstant,
    pub estimated_coefficients: Vec<f64>,
    pub levels: Vec<LevelSummary>,
}

// `xs` is standardized, so the small-block rule sees unit noise.
fn fit_level(xs: &[f64], level_size: usize, cfg: &TuningConfig) -> Result<FittedBlockRule> {
    if level_size >= cfg.n_star && xs.len() >= 3 && tuning(xs.len(), cfg).is_ok() {
        return hybrid_fit_any_size(xs, cfg);
    }
    small_block_fit(xs, 1.0, cfg.small_block_policy)
}

/// Blockwise estimate of the random-design regression function.
///
/// Levels with `2^j >= n_star` get the hybrid rule on the coefficients with
/// `delta = 1`; coarser levels, and levels with too few usable coefficients,
/// get the small-block policy. `sigma = 0` keeps every coefficient.
pub fn random_design_estimate(data: &RandomDesignData, cfg: &TuningConfig, sigma: f64) -> Result<RandomDesignFit> {
    cfg.validate()?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(GebError::invalid(format!("sigma must be nonnegative and finite, got {sigma}")));
    }
    let eps = sigma / (data.sample_size() as f64).sqrt();
    let m = data.coefficients.len();
    if eps == 0.0 {
        return Ok(RandomDesignFit {
            fhat: PiecewiseConstant::new(idwt(&data.coefficients, &WaveletBasis::new(WaveletName::Haar))?)?,
            estimated_coefficients: data.coefficients.clone(),
            levels: Vec::new(),
        });
    }
    let per_level: Vec<(Vec<(usize, f64)>, LevelSummary)> = (-1..=data.max_level)
        .into_par_iter()
        .map(|j| {
            let range = level_range(j);
            let active: Vec<usize> = range.clone().filter(|&i| data.delta[i] == 1).collect();
            let xs: Vec<f64> = active.iter().map(|&i| data.coefficients[i] / eps).collect();
            let fit = fit_level(&xs, level_size(j), cfg)?;
            let est = fit.apply(&xs);
            let summary = LevelSummary {
                level: j,
                size: xs.len(),
                branch: fit.branch,
                diagnostics: fit.diagnostics,
            };
            Ok((active.into_iter().zip(est.into_iter().map(|v| v * eps)).collect(), summary))
        })
        .collect::<Result<_>>()?;
    let mut beta = vec![0.0; m];
    let mut levels = Vec::with_capacity(per_level.len());
    for (pairs, summary) in per_level {
        for (i, v) in pairs {
            beta[i] = v;
        }
        levels.push(summary);
    }
    let cells = idwt(&beta, &WaveletBasis::new(WaveletName::Haar))?;
    Ok(RandomDesignFit {
        fhat: PiecewiseConstant::new(cells)?,
        estimated_coefficients: beta,
        levels,
    })
}
