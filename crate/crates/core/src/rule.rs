//! Scalar decision rules and their Bayes risks against a mixing distribution.

use crate::block::soft_threshold_risk;
use crate::error::{GebError, Result};
use crate::kde::KernelDensityEstimate;
use crate::mixture::MixingDistribution;
use crate::normal;
use crate::quadrature::{self, QuadSettings};
use std::sync::Arc;

/// Fitted general empirical Bayes rule `x + f'(x) / max(f(x), rho)` where `f`
/// is the sinc-kernel estimate of the marginal density.
#[derive(Debug, Clone)]
pub struct GebRule {
    kde: Arc<KernelDensityEstimate>,
    rho: f64,
}

impl GebRule {
    pub fn new(kde: KernelDensityEstimate, rho: f64) -> Self {
        GebRule { kde: Arc::new(kde), rho }
    }

    pub fn kde(&self) -> &KernelDensityEstimate {
        &self.kde
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let (v, d) = self.kde.eval(x);
        x + d / v.max(self.rho)
    }
}

/// A separable rule applied coordinatewise to standardized observations.
#[derive(Debug, Clone)]
pub enum ScalarRule {
    Identity,
    Zero,
    /// `x ↦ factor · x`; the per-block form of James–Stein shrinkage.
    Linear { factor: f64 },
    SoftThreshold { lambda: f64 },
    HardThreshold { lambda: f64 },
    /// Bayes rule for a known mixing distribution.
    Oracle(Arc<MixingDistribution>),
    Geb(GebRule),
}

impl ScalarRule {
    pub fn oracle(g: MixingDistribution) -> Self {
        ScalarRule::Oracle(Arc::new(g))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarRule::Identity => x,
            ScalarRule::Zero => 0.0,
            ScalarRule::Linear { factor } => factor * x,
            ScalarRule::SoftThreshold { lambda } => crate::block::soft(x, *lambda),
            ScalarRule::HardThreshold { lambda } => crate::block::hard(x, *lambda),
            ScalarRule::Oracle(g) => g.posterior_mean(x),
            ScalarRule::Geb(r) => r.eval(x),
        }
    }

    pub fn apply(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Points where the rule has kinks or jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ScalarRule::SoftThreshold { lambda } | ScalarRule::HardThreshold { lambda } => vec![-lambda, *lambda],
            _ => Vec::new(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalarRule::Identity => "identity",
            ScalarRule::Zero => "zero",
            ScalarRule::Linear { .. } => "linear",
            ScalarRule::SoftThreshold { .. } => "soft-threshold",
            ScalarRule::HardThreshold { .. } => "hard-threshold",
            ScalarRule::Oracle(_) => "oracle",
            ScalarRule::Geb(_) => "geb",
        }
    }
}

/// `∫ E_θ (t(X) - θ)^2 dG(θ)` for `X ~ N(θ, 1)`.
///
/// Soft thresholds use the closed-form risk per atom; every other rule is
/// integrated against the mixture on the support window of `G`.
pub fn rule_risk(t: &ScalarRule, g: &MixingDistribution) -> Result<f64> {
    if let ScalarRule::SoftThreshold { lambda } = t {
        let mut acc = 0.0;
        for a in g.atoms() {
            acc += a.weight * soft_threshold_risk(a.location, *lambda)?;
        }
        return Ok(acc);
    }
    let (lo, hi) = g.support_window();
    let integrand = |x: f64| {
        let tx = t.eval(x);
        let mut acc = 0.0;
        for a in g.atoms() {
            let e = tx - a.location;
            acc += a.weight * e * e * normal::pdf(x - a.location);
        }
        acc
    };
    let risk = quadrature::integrate_with_breaks(integrand, lo, hi, &t.breakpoints(), QuadSettings::default())?;
    if !risk.is_finite() {
        return Err(GebError::numeric("rule risk is not finite"));
    }
    Ok(risk)
}
