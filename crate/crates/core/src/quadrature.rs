//! Composite adaptive Gauss–Legendre quadrature.
//!
//! The base rule is a fixed-order Gauss–Legendre rule. An interval is accepted
//! when the rule on the whole interval agrees with the sum over its two halves
//! to within the local tolerance; otherwise both halves are refined with half
//! the tolerance each. Integrals start from a uniform partition so that narrow
//! features (Gaussian bumps of unit width) are never skipped by the first probe.

use crate::error::{GebError, Result};
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre polynomial from Chebyshev
    /// initial guesses.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Apply the rule on `[a, b]`.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// Order of the base rule used by the adaptive integrator.
pub const BASE_ORDER: usize = 15;

pub fn base_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(BASE_ORDER))
}

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub abs_tol: f64,
    /// Width of the initial uniform panels.
    pub initial_panel: f64,
    pub max_depth: u32,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            abs_tol: 1e-8,
            initial_panel: 0.5,
            max_depth: 40,
        }
    }
}

impl QuadSettings {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadSettings {
            abs_tol,
            ..Default::default()
        }
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `settings.abs_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, settings: QuadSettings) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(GebError::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let rule = base_rule();
    let panels = (((hi - lo) / settings.initial_panel).ceil() as usize).max(1);
    let width = (hi - lo) / panels as f64;
    let tol_per_panel = settings.abs_tol / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let pa = lo + width * p as f64;
        let pb = if p + 1 == panels { hi } else { pa + width };
        let whole = rule.integrate(&mut f, pa, pb);
        total += refine(&mut f, rule, pa, pb, whole, tol_per_panel, settings.max_depth)?;
    }
    if !total.is_finite() {
        return Err(GebError::NumericFailure {
            message: "non-finite integral".into(),
            lo,
            hi,
            estimate: total,
        });
    }
    Ok(sign * total)
}

/// Integrate over consecutive subintervals delimited by `breaks` (sorted,
/// clipped to `[a, b]`), so that kinks and jumps fall on panel edges.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    settings: QuadSettings,
) -> Result<f64> {
    let mut points = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    points.extend(inner);
    points.push(b);
    let pieces = (points.len() - 1) as f64;
    let local = QuadSettings {
        abs_tol: settings.abs_tol / pieces,
        ..settings
    };
    let mut total = 0.0;
    for w in points.windows(2) {
        total += integrate(&mut f, w[0], w[1], local)?;
    }
    Ok(total)
}

fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(&mut *f, a, mid);
    let right = rule.integrate(&mut *f, mid, b);
    let split = left + right;
    let err = (split - whole).abs();
    if err <= tol || (err <= 64.0 * f64::EPSILON * split.abs()) {
        return Ok(split);
    }
    if depth == 0 || mid <= a || mid >= b {
        return Err(GebError::NumericFailure {
            message: format!("adaptive quadrature did not converge (error estimate {err:.3e}, tolerance {tol:.3e})"),
            lo: a,
            hi: b,
            estimate: split,
        });
    }
    Ok(refine(f, rule, a, mid, left, 0.5 * tol, depth - 1)?
        + refine(f, rule, mid, b, right, 0.5 * tol, depth - 1)?)
}
