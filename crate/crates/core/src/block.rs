//! Data-driven rules fit to one block of standardized observations.
//!
//! The hybrid rule estimates the signal mass of the block with `kappa_hat`
//! and switches between the kernel-based empirical Bayes rule (dense blocks)
//! and the universal soft threshold (sparse blocks).

use crate::error::{GebError, Result};
use crate::kde::{KdeMode, KernelDensityEstimate};
use crate::normal::{self, INV_SQRT_2PI};
use crate::quadrature::{self, QuadSettings};
use crate::rule::{GebRule, ScalarRule};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Perturbation `eta_n` of the density floor, looked up by block size.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum EtaSchedule {
    #[default]
    Zero,
    Constant(f64),
    /// Values for specific block sizes; sizes not listed get 0.
    PerSize(BTreeMap<usize, f64>),
}

impl EtaSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            EtaSchedule::Zero => 0.0,
            EtaSchedule::Constant(v) => *v,
            EtaSchedule::PerSize(m) => m.get(&n).copied().unwrap_or(0.0),
        }
    }
}

/// Estimator used for blocks smaller than `n_star`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallBlockPolicy {
    #[default]
    Mle,
    JamesStein,
}

/// Tuning constants of the hybrid rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    pub rho0: f64,
    pub b0: f64,
    pub eta: EtaSchedule,
    /// Smallest block size that gets the hybrid rule.
    pub n_star: usize,
    /// Threshold inflation: `lambda = sqrt(2 (1 + a0) log n)`.
    pub a0: f64,
    pub small_block_policy: SmallBlockPolicy,
    /// Evaluation mode of the kernel density estimate inside the GEB rule.
    pub kde_mode: KdeMode,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            rho0: 0.4,
            b0: 2.0,
            eta: EtaSchedule::Zero,
            n_star: 64,
            a0: 0.0,
            small_block_policy: SmallBlockPolicy::Mle,
            kde_mode: KdeMode::Direct,
        }
    }
}

/// Density-floor constant that balances the two leading regret terms.
pub const BALANCED_RHO0: f64 = 0.6094;

impl TuningConfig {
    /// Defaults with `rho0` set to [`BALANCED_RHO0`].
    pub fn balanced() -> Self {
        TuningConfig {
            rho0: BALANCED_RHO0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0) || !self.rho0.is_finite() {
            return Err(GebError::config("rho0 must be positive"));
        }
        if !(self.b0 > 0.0) || !self.b0.is_finite() {
            return Err(GebError::config("b0 must be positive"));
        }
        if self.n_star <= 2 {
            return Err(GebError::config("n_star must exceed 2"));
        }
        if !(self.a0 >= 0.0) || !self.a0.is_finite() {
            return Err(GebError::config("a0 must be nonnegative"));
        }
        Ok(())
    }
}

/// Block-size dependent constants `(rho, b, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub rho: f64,
    pub b: f64,
    pub lambda: f64,
}

pub fn tuning(n: usize, cfg: &TuningConfig) -> Result<Tuning> {
    if n < 3 {
        return Err(GebError::invalid(format!("tuning needs n >= 3, got {n}")));
    }
    cfg.validate()?;
    let nf = n as f64;
    let ln = nf.ln();
    let rho = (1.0 + cfg.eta.at(n)) * cfg.rho0 * (2.0 * ln / nf).sqrt();
    if !(rho > 0.0 && rho < INV_SQRT_2PI) {
        return Err(GebError::config(format!(
            "rho({n}) = {rho} must lie in (0, 1/sqrt(2 pi)); block too small for rho0 = {}",
            cfg.rho0
        )));
    }
    Ok(Tuning {
        rho,
        b: cfg.b0 * ln / nf.sqrt(),
        lambda: (2.0 * (1.0 + cfg.a0) * ln).sqrt(),
    })
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < INV_SQRT_2PI) {
        return Err(GebError::invalid("rho must lie in (0, 1/sqrt(2 pi))"));
    }
    Ok(())
}

/// GEB rule fit to standardized observations, direct kernel evaluation.
pub fn geb_rule(xs: &[f64], rho: f64) -> Result<ScalarRule> {
    geb_rule_with_mode(xs, rho, KdeMode::Direct)
}

pub fn geb_rule_with_mode(xs: &[f64], rho: f64, mode: KdeMode) -> Result<ScalarRule> {
    check_rho(rho)?;
    let kde = KernelDensityEstimate::fit(xs, mode)?;
    Ok(ScalarRule::Geb(GebRule::new(kde, rho)))
}

/// `1 - (sqrt 2 / n) Σ exp(-X_k^2 / 2)`, an unbiased estimate of
/// `1 - ∫ exp(-u^2/4) dG`.
pub fn kappa_hat(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(GebError::invalid("kappa_hat needs at least one observation"));
    }
    let s: f64 = xs.iter().map(|x| (-0.5 * x * x).exp()).sum();
    Ok(1.0 - std::f64::consts::SQRT_2 * s / xs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    Soft,
    Hard,
}

#[inline]
pub(crate) fn soft(x: f64, lambda: f64) -> f64 {
    let m = x.abs() - lambda;
    if m > 0.0 {
        m.copysign(x)
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn hard(x: f64, lambda: f64) -> f64 {
    if x.abs() > lambda {
        x
    } else {
        0.0
    }
}

pub fn threshold(x: f64, lambda: f64, mode: ThresholdMode) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(GebError::invalid("threshold level must be nonnegative"));
    }
    Ok(match mode {
        ThresholdMode::Soft => soft(x, lambda),
        ThresholdMode::Hard => hard(x, lambda),
    })
}

/// Risk of the soft threshold at level `lambda` for one mean `mu`, via
/// Stein's identity: `∫_0^λ P_μ{|X| > u} d(u²) + 2 P_μ{|X| > λ} - 1`.
pub fn soft_threshold_risk(mu: f64, lambda: f64) -> Result<f64> {
    if !mu.is_finite() || !lambda.is_finite() || lambda < 0.0 {
        return Err(GebError::invalid("soft_threshold_risk needs finite mu and finite lambda >= 0"));
    }
    let capped = if lambda > 0.0 {
        quadrature::integrate(
            |u| 2.0 * u * normal::two_sided_tail(mu, u),
            0.0,
            lambda,
            QuadSettings::with_tol(1e-10),
        )?
    } else {
        0.0
    };
    Ok(capped + 2.0 * normal::two_sided_tail(mu, lambda) - 1.0)
}

/// Which rule a block ended up with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Geb,
    Threshold,
    Mle,
    JamesStein,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Geb => "geb",
            Branch::Threshold => "threshold",
            Branch::Mle => "mle",
            Branch::JamesStein => "james-stein",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridDiagnostics {
    pub kappa_hat: f64,
    pub b: f64,
    pub rho: f64,
    pub lambda: f64,
    pub n: usize,
}

/// A rule fit to one block with the branch that produced it.
#[derive(Debug, Clone)]
pub struct FittedBlockRule {
    pub rule: ScalarRule,
    pub branch: Branch,
    pub diagnostics: Option<HybridDiagnostics>,
}

impl FittedBlockRule {
    pub fn apply(&self, xs: &[f64]) -> Vec<f64> {
        self.rule.apply(xs)
    }
}

/// Hybrid rule for a block of at least `cfg.n_star` standardized observations.
pub fn hybrid_fit(xs: &[f64], cfg: &TuningConfig) -> Result<FittedBlockRule> {
    cfg.validate()?;
    if xs.len() < cfg.n_star {
        return Err(GebError::invalid(format!(
            "hybrid_fit needs at least n_star = {} observations, got {}",
            cfg.n_star,
            xs.len()
        )));
    }
    hybrid_fit_any_size(xs, cfg)
}

/// Hybrid fit without the `n_star` floor (still needs `n >= 3`); used where a
/// level qualifies by index but has few usable coefficients.
pub(crate) fn hybrid_fit_any_size(xs: &[f64], cfg: &TuningConfig) -> Result<FittedBlockRule> {
    let n = xs.len();
    let t = tuning(n, cfg)?;
    let kh = kappa_hat(xs)?;
    let diagnostics = Some(HybridDiagnostics {
        kappa_hat: kh,
        b: t.b,
        rho: t.rho,
        lambda: t.lambda,
        n,
    });
    if kh > t.b {
        Ok(FittedBlockRule {
            rule: geb_rule_with_mode(xs, t.rho, cfg.kde_mode)?,
            branch: Branch::Geb,
            diagnostics,
        })
    } else {
        Ok(FittedBlockRule {
            rule: ScalarRule::SoftThreshold { lambda: t.lambda },
            branch: Branch::Threshold,
            diagnostics,
        })
    }
}

/// Positive-part James–Stein shrinkage toward zero; identity for `n <= 2`.
pub fn james_stein(y: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    let factor = james_stein_factor(y, epsilon)?;
    Ok(y.iter().map(|v| factor * v).collect())
}

/// Shrinkage factor `(1 - (n-2) eps^2 / ||y||^2)^+`.
pub fn james_stein_factor(y: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(GebError::invalid("epsilon must be positive"));
    }
    let n = y.len();
    if n <= 2 {
        return Ok(1.0);
    }
    let norm2: f64 = y.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - (n - 2) as f64 * epsilon * epsilon / norm2).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuning_reference_values() {
        let t = tuning(2048, &TuningConfig::default()).unwrap();
        let ln = 2048f64.ln();
        assert!((t.rho - 0.4 * (2.0 * ln / 2048.0).sqrt()).abs() < 1e-15);
        assert!((t.rho - 0.034_516).abs() < 1e-6);
        assert!((t.b - 0.336_963_736_817_313).abs() < 1e-12);
        assert!((t.lambda - 3.905_027_269_087_733).abs() < 1e-12);
    }

    #[test]
    fn balanced_preset() {
        let t = tuning(1024, &TuningConfig::balanced()).unwrap();
        let star = 0.6094 * (2.0 * 1024f64.ln() / 1024.0).sqrt();
        assert_eq!(t.rho, star);
    }

    #[test]
    fn tuning_guards() {
        let cfg = TuningConfig {
            rho0: 2.0,
            ..Default::default()
        };
        assert!(matches!(tuning(8, &cfg), Err(GebError::InvalidConfig(_))));
        assert!(tuning(2, &TuningConfig::default()).is_err());
        let bad = TuningConfig {
            n_star: 2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn inflated_threshold() {
        let cfg = TuningConfig {
            a0: 0.5,
            ..Default::default()
        };
        let t = tuning(100, &cfg).unwrap();
        assert!((t.lambda - (3.0 * 100f64.ln()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn eta_schedule_lookup() {
        let mut m = BTreeMap::new();
        m.insert(64usize, 0.25);
        let cfg = TuningConfig {
            eta: EtaSchedule::PerSize(m),
            ..Default::default()
        };
        let base = tuning(64, &TuningConfig::default()).unwrap().rho;
        assert!((tuning(64, &cfg).unwrap().rho - 1.25 * base).abs() < 1e-15);
        assert_eq!(tuning(128, &cfg).unwrap(), tuning(128, &TuningConfig::default()).unwrap());
    }

    #[test]
    fn kappa_hat_examples() {
        assert!((kappa_hat(&[0.0; 10]).unwrap() - (1.0 - std::f64::consts::SQRT_2)).abs() < 1e-15);
        let expect = 1.0 - std::f64::consts::SQRT_2 / 2.0 * (1.0 + (-2f64).exp());
        assert!((kappa_hat(&[0.0, 2.0]).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.197_196_722_303_041_4).abs() < 1e-12);
        assert!(kappa_hat(&[]).is_err());
    }

    #[test]
    fn threshold_examples() {
        use ThresholdMode::*;
        assert_eq!(threshold(3.0, 2.0, Soft).unwrap(), 1.0);
        assert_eq!(threshold(-3.0, 2.0, Soft).unwrap(), -1.0);
        assert_eq!(threshold(1.0, 2.0, Soft).unwrap(), 0.0);
        assert_eq!(threshold(3.0, 2.0, Hard).unwrap(), 3.0);
        assert_eq!(threshold(-1.5, 2.0, Hard).unwrap(), 0.0);
        for x in [-4.2, -0.1, 0.0, 7.5] {
            assert_eq!(threshold(x, 0.0, Soft).unwrap(), x);
        }
        assert!(threshold(1.0, -1.0, Soft).is_err());
    }

    #[test]
    fn soft_risk_identity_cases() {
        assert!((soft_threshold_risk(0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        for mu in [-3.0, 0.4, 12.0] {
            assert!((soft_threshold_risk(mu, 0.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn soft_risk_at_zero_mean_closed_form() {
        // 2 ∫_λ^∞ (u - λ)^2 φ(u) du = 2[(1 + λ²) Φ̄(λ) - λ φ(λ)]
        for lambda in [0.5f64, 1.0, 2.0, 3.0, (2.0 * 1024f64.ln()).sqrt()] {
            let oracle = 2.0 * ((1.0 + lambda * lambda) * normal::sf(lambda) - lambda * normal::pdf(lambda));
            let r = soft_threshold_risk(0.0, lambda).unwrap();
            assert!((r - oracle).abs() < 1e-10, "lambda {lambda}: {r} vs {oracle}");
        }
        let l = (2.0 * 1024f64.ln()).sqrt();
        assert!(soft_threshold_risk(0.0, l).unwrap() <= 4.0 * normal::pdf(l) / l.powi(3));
    }

    #[test]
    fn soft_risk_limit_large_mean() {
        let l = 2.5;
        assert!((soft_threshold_risk(60.0, l).unwrap() - (l * l + 1.0)).abs() < 1e-9);
        assert!((soft_threshold_risk(-60.0, l).unwrap() - (l * l + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn hybrid_sparse_block_thresholds() {
        let xs = vec![0.0; 64];
        let fit = hybrid_fit(&xs, &TuningConfig::default()).unwrap();
        assert_eq!(fit.branch, Branch::Threshold);
        assert!(fit.apply(&xs).iter().all(|v| *v == 0.0));
        let d = fit.diagnostics.unwrap();
        assert_eq!(d.n, 64);
        assert!(d.kappa_hat <= d.b);
    }

    #[test]
    fn hybrid_dense_block_uses_geb() {
        let mut xs = vec![10.0; 64];
        xs.extend(vec![-10.0; 64]);
        let fit = hybrid_fit(&xs, &TuningConfig::default()).unwrap();
        assert_eq!(fit.branch, Branch::Geb);
        assert!(fit.diagnostics.unwrap().kappa_hat > 0.99);
    }

    #[test]
    fn hybrid_requires_n_star() {
        assert!(matches!(
            hybrid_fit(&[1.0; 10], &TuningConfig::default()),
            Err(GebError::InvalidArgument(_))
        ));
    }

    #[test]
    fn geb_rule_symmetry_point() {
        let c = 1.5;
        let offsets = [0.3, -1.2, 2.0, 0.05, -0.7];
        let xs: Vec<f64> = offsets.iter().flat_map(|d| [c + d, c - d]).collect();
        let r = geb_rule(&xs, 0.05).unwrap();
        assert!((r.eval(c) - c).abs() < 1e-12);
        let zeros = geb_rule(&[0.0; 20], 0.05).unwrap();
        assert_eq!(zeros.eval(0.0), 0.0);
        assert!(geb_rule(&[0.0; 20], 0.5).is_err());
    }

    #[test]
    fn james_stein_examples() {
        assert_eq!(james_stein(&[3.0, -4.0], 1.0).unwrap(), vec![3.0, -4.0]);
        assert_eq!(james_stein(&[0.5, 0.5, 0.5], 1.0).unwrap(), vec![0.0; 3]);
        assert_eq!(james_stein(&[0.0; 5], 1.0).unwrap(), vec![0.0; 5]);
        let big = vec![1e6, -2e6, 3e6, 5e5];
        let out = james_stein(&big, 1.0).unwrap();
        for (a, b) in out.iter().zip(&big) {
            assert!(((a - b) / b).abs() < 1e-11);
        }
        let y = [1.0, 2.0, 2.0, 4.0];
        let f = 1.0 - 2.0 / 25.0;
        let out = james_stein(&y, 1.0).unwrap();
        assert!(out.iter().zip(&y).all(|(o, v)| (o - f * v).abs() < 1e-15));
        assert!(james_stein(&y, 0.0).is_err());
    }
}
