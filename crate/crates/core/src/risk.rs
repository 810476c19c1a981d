//! Monte Carlo risk experiments: Besov norms, experiment specifications,
//! replicate simulation and rate fitting.

use crate::block::{james_stein, soft, hard, Branch, TuningConfig};
use crate::error::{GebError, Result};
use crate::mixture::{bayes_risk, empirical_mixing, r0, r_p, MixingDistribution};
use crate::rng;
use crate::sequence::{estimate_block, finest_level, level_range, BlockRisk, RiskReport};
use crate::signals::{test_signal, SignalName};
use crate::wavelet::{dwt, WaveletBasis, WaveletName};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Besov sequence norm of a flat dyadic coefficient vector:
/// `[|beta_{-1}|^q + Σ_j (2^{j(alpha+1/2-1/p)} ||beta_j||_p)^q]^{1/q}`.
/// `p` or `q` may be infinite.
pub fn besov_norm(beta: &[f64], alpha: f64, p: f64, q: f64) -> Result<f64> {
    let top = finest_level(beta.len())?;
    if !(alpha > 0.0) || !(p > 0.0) || !(q > 0.0) {
        return Err(GebError::invalid("besov_norm needs alpha, p, q > 0"));
    }
    let lp = |xs: &[f64]| -> f64 {
        if p.is_infinite() {
            xs.iter().fold(0.0, |m, v| m.max(v.abs()))
        } else {
            xs.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
        }
    };
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let terms = std::iter::once(beta[0].abs()).chain(
        (0..=top).map(|j| 2f64.powf(j as f64 * (alpha + 0.5 - inv_p)) * lp(&beta[level_range(j)])),
    );
    Ok(if q.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    GebHybrid,
    /// Soft threshold at `epsilon sqrt(2 log N)`, `N` the total coefficient count,
    /// on blocks of size `>= n_star`; identity below.
    SoftUniversal,
    HardUniversal,
    JamesStein,
    Mle,
    OracleTruth,
}

impl Estimator {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "geb-hybrid" | "geb" => Estimator::GebHybrid,
            "soft-universal" => Estimator::SoftUniversal,
            "hard-universal" => Estimator::HardUniversal,
            "james-stein" => Estimator::JamesStein,
            "mle" => Estimator::Mle,
            "oracle-truth" => Estimator::OracleTruth,
            other => return Err(GebError::invalid(format!("unknown estimator '{other}'"))),
        })
    }
}

/// Where the true coefficients come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TruthSource {
    /// Flat dyadic coefficients.
    Explicit { beta: Vec<f64> },
    /// `beta_{j,1} = 2^{-j(alpha+1/2)}` for `j = 0..=max_level`, all else zero.
    BesovExtremal { alpha: f64, max_level: i32 },
    /// Wavelet coefficients of a sampled test signal. Without an explicit
    /// noise grid the noise level is `sd/snr` on the sample scale.
    TestSignal { name: SignalName, n: usize, snr: f64, wavelet: WaveletName },
    /// One block of `n` standardized means drawn i.i.d. `N(0, sd^2)` afresh
    /// in every replicate.
    IidNormal { n: usize, sd: f64 },
    /// One block of `n` standardized means drawn i.i.d. from `prior`.
    IidPrior { n: usize, prior: MixingDistribution },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub estimator: Estimator,
    pub truth: TruthSource,
    /// Noise levels; a single value for [`monte_carlo_risk`].
    #[serde(default)]
    pub epsilon: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub tuning: TuningConfig,
    /// Worker threads; `None` uses the global pool. Results do not depend on it.
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(estimator: Estimator, truth: TruthSource, epsilon: f64, replicates: usize, seed: u64) -> Self {
        ExperimentSpec {
            estimator,
            truth,
            epsilon: vec![epsilon],
            replicates,
            seed,
            tuning: TuningConfig::default(),
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(GebError::invalid("replicates must be at least 1"));
        }
        if self.epsilon.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(GebError::invalid("noise levels must be positive and finite"));
        }
        self.tuning.validate()?;
        match &self.truth {
            TruthSource::Explicit { beta } => {
                finest_level(beta.len())?;
                if beta.iter().any(|v| !v.is_finite()) {
                    return Err(GebError::invalid("truth coefficients must be finite"));
                }
            }
            TruthSource::BesovExtremal { alpha, max_level } => {
                if !(*alpha > 0.0) || !(0..=24).contains(max_level) {
                    return Err(GebError::invalid("Besov-extremal truth needs alpha > 0 and 0 <= J <= 24"));
                }
            }
            TruthSource::TestSignal { n, snr, .. } => {
                if *n < 2 || !n.is_power_of_two() || !(*snr > 0.0) {
                    return Err(GebError::invalid("test-signal truth needs dyadic n and snr > 0"));
                }
            }
            TruthSource::IidNormal { n, sd } => {
                if *n == 0 || !(*sd > 0.0) || !sd.is_finite() {
                    return Err(GebError::invalid("i.i.d. normal truth needs n >= 1 and sd > 0"));
                }
            }
            TruthSource::IidPrior { n, prior } => {
                if *n == 0 {
                    return Err(GebError::invalid("i.i.d. prior truth needs n >= 1"));
                }
                MixingDistribution::new(prior.atoms().iter().map(|a| (a.location, a.weight)))?;
            }
        }
        Ok(())
    }
}

/// Resolved experiment: block layout, noise level and truth.
struct Design {
    epsilon: f64,
    /// `(id, start, len)` per block of the flat vector.
    blocks: Vec<(i32, usize, usize)>,
    truth: Truth,
}

enum Truth {
    Fixed(Vec<f64>),
    /// Standardized means sampled per replicate.
    Random(Prior),
}

enum Prior {
    Normal(f64),
    Discrete { locations: Vec<f64>, cumulative: Vec<f64> },
}

impl Prior {
    fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        match self {
            Prior::Normal(sd) => rng::normals(rng, n).into_iter().map(|z| sd * z).collect(),
            Prior::Discrete { locations, cumulative } => (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let i = cumulative.partition_point(|&c| c <= u).min(locations.len() - 1);
                    locations[i]
                })
                .collect(),
        }
    }

    fn mixing(&self) -> Result<MixingDistribution> {
        match self {
            Prior::Normal(sd) => MixingDistribution::normal_grid(0.0, *sd, 10.0 * sd, 801),
            Prior::Discrete { locations, cumulative } => MixingDistribution::normalized(
                locations
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| (l, cumulative[i] - if i == 0 { 0.0 } else { cumulative[i - 1] })),
            ),
        }
    }

    fn bayes_risk(&self) -> Result<f64> {
        match self {
            Prior::Normal(sd) => Ok(sd * sd / (1.0 + sd * sd)),
            _ => bayes_risk(&self.mixing()?),
        }
    }
}

fn dyadic_blocks(len: usize) -> Result<Vec<(i32, usize, usize)>> {
    let top = finest_level(len)?;
    Ok((-1..=top)
        .map(|j| {
            let r = level_range(j);
            (j, r.start, r.len())
        })
        .collect())
}

fn resolve(spec: &ExperimentSpec) -> Result<Design> {
    spec.validate()?;
    let given = match spec.epsilon.as_slice() {
        [] => None,
        [e] => Some(*e),
        _ => return Err(GebError::invalid("monte_carlo_risk takes a single noise level; use rate_fit for a grid")),
    };
    let need = |e: Option<f64>| e.ok_or_else(|| GebError::invalid("this truth source needs a noise level"));
    Ok(match &spec.truth {
        TruthSource::Explicit { beta } => Design {
            epsilon: need(given)?,
            blocks: dyadic_blocks(beta.len())?,
            truth: Truth::Fixed(beta.clone()),
        },
        TruthSource::BesovExtremal { alpha, max_level } => {
            let len = 1usize << (max_level + 1);
            let mut beta = vec![0.0; len];
            for j in 0..=*max_level {
                beta[level_range(j).start] = 2f64.powf(-(j as f64) * (alpha + 0.5));
            }
            Design {
                epsilon: need(given)?,
                blocks: dyadic_blocks(len)?,
                truth: Truth::Fixed(beta),
            }
        }
        TruthSource::TestSignal { name, n, snr, wavelet } => {
            let (samples, sigma) = test_signal(*name, *n, *snr)?;
            Design {
                epsilon: given.unwrap_or(sigma / (*n as f64).sqrt()),
                blocks: dyadic_blocks(*n)?,
                truth: Truth::Fixed(dwt(&samples, &WaveletBasis::new(*wavelet))?),
            }
        }
        TruthSource::IidNormal { n, sd } => Design {
            epsilon: need(given)?,
            blocks: vec![(0, 0, *n)],
            truth: Truth::Random(Prior::Normal(*sd)),
        },
        TruthSource::IidPrior { n, prior } => {
            let mut acc = 0.0;
            let cumulative = prior
                .atoms()
                .iter()
                .map(|a| {
                    acc += a.weight;
                    acc
                })
                .collect();
            Design {
                epsilon: need(given)?,
                blocks: vec![(0, 0, *n)],
                truth: Truth::Random(Prior::Discrete {
                    locations: prior.atoms().iter().map(|a| a.location).collect(),
                    cumulative,
                }),
            }
        }
    })
}

struct Replicate {
    block_sse: Vec<f64>,
    branches: Vec<Branch>,
}

fn estimate(
    estimator: Estimator,
    values: &[f64],
    truth: &[f64],
    eps: f64,
    total: usize,
    cfg: &TuningConfig,
) -> Result<(Vec<f64>, Branch)> {
    let lambda = eps * (2.0 * (total.max(2) as f64).ln()).sqrt();
    let big = values.len() >= cfg.n_star;
    Ok(match estimator {
        Estimator::GebHybrid => {
            let (est, fit) = estimate_block(values, eps, cfg)?;
            (est, fit.branch)
        }
        Estimator::SoftUniversal if big => (values.iter().map(|&v| soft(v, lambda)).collect(), Branch::Threshold),
        Estimator::HardUniversal if big => (values.iter().map(|&v| hard(v, lambda)).collect(), Branch::Threshold),
        Estimator::SoftUniversal | Estimator::HardUniversal | Estimator::Mle => (values.to_vec(), Branch::Mle),
        Estimator::JamesStein => (james_stein(values, eps)?, Branch::JamesStein),
        Estimator::OracleTruth => (truth.to_vec(), Branch::Mle),
    })
}

fn run_replicate(spec: &ExperimentSpec, design: &Design, r: usize) -> Result<Replicate> {
    let mut rng = rng::stream(spec.seed, r as u64);
    let eps = design.epsilon;
    let beta: Vec<f64> = match &design.truth {
        Truth::Fixed(b) => b.clone(),
        Truth::Random(prior) => {
            let n: usize = design.blocks.iter().map(|b| b.2).sum();
            prior.sample(&mut rng, n).into_iter().map(|t| eps * t).collect()
        }
    };
    let noise = rng::normals(&mut rng, beta.len());
    let y: Vec<f64> = beta.iter().zip(&noise).map(|(b, z)| b + eps * z).collect();
    let total = y.len();
    let mut block_sse = Vec::with_capacity(design.blocks.len());
    let mut branches = Vec::with_capacity(design.blocks.len());
    for &(_, start, len) in &design.blocks {
        let (vals, tr) = (&y[start..start + len], &beta[start..start + len]);
        let (est, branch) = estimate(spec.estimator, vals, tr, eps, total, &spec.tuning)?;
        block_sse.push(est.iter().zip(tr).map(|(e, t)| (e - t) * (e - t)).sum());
        branches.push(branch);
    }
    Ok(Replicate { block_sse, branches })
}

struct BlockReference {
    ideal: f64,
    bound_r_p: Option<f64>,
    bound_r0: Option<f64>,
}

fn block_reference(g: &MixingDistribution, ideal_unit: f64, n: usize, eps: f64) -> Result<BlockReference> {
    let scale = eps * eps * n as f64;
    let (bound_r_p, bound_r0) = if n >= 3 {
        let mu2 = g.atoms().iter().map(|a| a.weight * a.location * a.location).sum::<f64>().sqrt();
        (Some(scale * r_p(n, mu2, 2.0)?), Some(scale * r0(n, g)?))
    } else {
        (None, None)
    };
    Ok(BlockReference {
        ideal: scale * ideal_unit,
        bound_r_p,
        bound_r0,
    })
}

fn references(design: &Design) -> Result<Vec<BlockReference>> {
    let eps = design.epsilon;
    match &design.truth {
        Truth::Fixed(beta) => design
            .blocks
            .par_iter()
            .map(|&(_, start, len)| {
                let g = empirical_mixing(&beta[start..start + len], eps)?;
                block_reference(&g, bayes_risk(&g)?, len, eps)
            })
            .collect(),
        Truth::Random(prior) => {
            let g = prior.mixing()?;
            let r = prior.bayes_risk()?;
            design.blocks.iter().map(|&(_, _, len)| block_reference(&g, r, len, eps)).collect()
        }
    }
}

/// Average squared error over replicates with per-block decomposition,
/// ideal risks, bound columns and the standard error of the total.
///
/// Replicate `r` draws from stream `r` of the master seed, so estimators run
/// with the same seed see the same noise, and results do not depend on the
/// number of threads.
pub fn monte_carlo_risk(spec: &ExperimentSpec) -> Result<RiskReport> {
    let design = resolve(spec)?;
    rng::with_jobs(spec.jobs, || {
        let reps: Vec<Replicate> = (0..spec.replicates)
            .into_par_iter()
            .map(|r| run_replicate(spec, &design, r))
            .collect::<Result<_>>()?;
        let refs = references(&design)?;
        let count = spec.replicates as f64;
        let per_block = design
            .blocks
            .iter()
            .enumerate()
            .zip(refs)
            .map(|((b, &(id, _, len)), rf)| BlockRisk {
                block_id: id,
                size: len,
                branch: reps[0].branches[b],
                empirical_mse: reps.iter().map(|r| r.block_sse[b]).sum::<f64>() / count,
                ideal_risk: rf.ideal,
                bound_r_p: rf.bound_r_p,
                bound_r0: rf.bound_r0,
            })
            .collect();
        let totals: Vec<f64> = reps.iter().map(|r| r.block_sse.iter().sum()).collect();
        let se = (spec.replicates > 1).then(|| {
            let mean = totals.iter().sum::<f64>() / count;
            let var = totals.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (count - 1.0);
            (var / count).sqrt()
        });
        Ok(RiskReport::from_blocks(per_block, se, spec.replicates))
    })?
}

/// Least-squares fit of `log(risk)` on `log(epsilon)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// `(epsilon, total_mse)` per grid point.
    pub points: Vec<(f64, f64)>,
}

/// Run [`monte_carlo_risk`] at every `epsilon` in `spec.epsilon` (at least 4)
/// and fit the log-log slope.
pub fn rate_fit(spec: &ExperimentSpec) -> Result<RateFit> {
    if spec.epsilon.len() < 4 {
        return Err(GebError::invalid("rate_fit needs at least 4 noise levels"));
    }
    let mut points = Vec::with_capacity(spec.epsilon.len());
    for &e in &spec.epsilon {
        let single = ExperimentSpec {
            epsilon: vec![e],
            ..spec.clone()
        };
        let risk = monte_carlo_risk(&single)?.totals.total_mse;
        if !(risk > 0.0) || !risk.is_finite() {
            return Err(GebError::numeric(format!("risk at epsilon = {e} is {risk}; log-log fit undefined")));
        }
        points.push((e, risk));
    }
    let (slope, intercept) = least_squares(points.iter().map(|&(e, r)| (e.ln(), r.ln())))?;
    Ok(RateFit { slope, intercept, points })
}

fn least_squares(pts: impl Iterator<Item = (f64, f64)> + Clone) -> Result<(f64, f64)> {
    let n = pts.clone().count() as f64;
    let mx = pts.clone().map(|p| p.0).sum::<f64>() / n;
    let my = pts.clone().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.clone().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(GebError::invalid("noise levels must not all be equal"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
