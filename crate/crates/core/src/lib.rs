//! General empirical Bayes shrinkage for blocked normal means and wavelet
//! regression.
//!
//! Observations are `y_jk = beta_jk + epsilon z_jk` grouped into blocks. Each
//! large block is standardized and passed through a hybrid rule: a
//! kernel-based estimate of the Bayes rule `x + phi_G'(x)/phi_G(x)` when the
//! block carries enough signal, the universal soft threshold otherwise. The
//! crate also computes the oracle quantities that rule is measured against
//! and runs Monte Carlo risk experiments.

// NaN must fail range checks, so negated comparisons are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod block;
pub mod error;
pub mod io;
pub mod kde;
pub mod mixture;
pub mod normal;
pub mod quadrature;
pub mod regression;
pub mod risk;
pub mod rng;
pub mod rule;
pub mod sequence;
pub mod signals;
pub mod wavelet;

pub use block::{
    geb_rule, geb_rule_with_mode, hybrid_fit, james_stein, kappa_hat, soft_threshold_risk, threshold, tuning, Branch,
    EtaSchedule, FittedBlockRule, HybridDiagnostics, SmallBlockPolicy, ThresholdMode, Tuning, TuningConfig,
    BALANCED_RHO0,
};
pub use error::{GebError, Result};
pub use kde::{kde_eval, kde_fit, KdeMode, KernelDensityEstimate};
pub use mixture::{
    bayes_risk, delta, delta_star, empirical_mixing, kl_bernoulli, mixture_density, mixture_summaries,
    oracle_bound_suite, r0, r_p, Atom, MixingDistribution, MixtureSummary, OracleBounds,
};
pub use quadrature::QuadSettings;
pub use regression::{
    denoise_equispaced, haar_coefficients, mad_sigma, random_design_estimate, random_design_transform,
    universal_soft_equispaced, Denoised, LevelSummary, PiecewiseConstant, RandomDesignData, RandomDesignFit,
};
pub use risk::{besov_norm, monte_carlo_risk, rate_fit, Estimator, ExperimentSpec, RateFit, TruthSource};
pub use rule::{rule_risk, GebRule, ScalarRule};
pub use sequence::{
    check_blocks, estimate_sequence, ideal_risk, Block, BlockRisk, BlockScheduleReport, BlockedSequence, RiskReport,
    RiskTotals, SchedulePreset, SequenceEstimate,
};
pub use signals::{test_signal, SignalName};
pub use wavelet::{dwt, idwt, WaveletBasis, WaveletName};
