//! Discrete mixing distributions on standardized means and the exact
//! functionals of their Gaussian location mixtures: marginal density, the
//! Bayes (oracle) rule, Bayes risk, signal-mass summaries and the bound
//! functionals used to judge regret.

use crate::error::{GebError, Result};
use crate::normal::{self, INV_SQRT_2PI};
use crate::quadrature::{self, QuadSettings};
use serde::{Deserialize, Serialize};

/// Tolerance on the total mass of a mixing distribution.
pub const MASS_TOL: f64 = 1e-12;

/// Support is widened by this many standard deviations on each side when
/// integrating against the mixture marginal.
pub const TRUNCATION_SD: f64 = 8.0;

/// One point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// A finite discrete probability measure, atoms sorted by location and merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingDistribution {
    atoms: Vec<Atom>,
}

impl MixingDistribution {
    /// Build from `(location, weight)` pairs. Weights must be nonnegative and
    /// sum to one within [`MASS_TOL`]; zero-weight atoms are dropped.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut list: Vec<Atom> = Vec::new();
        for (location, weight) in atoms {
            if !location.is_finite() {
                return Err(GebError::invalid("atom locations must be finite"));
            }
            if !(weight >= 0.0) || !weight.is_finite() {
                return Err(GebError::invalid("atom weights must be finite and nonnegative"));
            }
            if weight > 0.0 {
                list.push(Atom { location, weight });
            }
        }
        if list.is_empty() {
            return Err(GebError::invalid("mixing distribution needs at least one atom of positive weight"));
        }
        let total: f64 = list.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(GebError::invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self::from_sorted_merge(list))
    }

    /// Like [`MixingDistribution::new`] but rescales the weights to unit mass.
    pub fn normalized(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = atoms.into_iter().collect();
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(GebError::invalid("total weight must be positive and finite"));
        }
        Self::new(pairs.into_iter().map(|(l, w)| (l, w / total)))
    }

    pub fn point_mass(location: f64) -> Result<Self> {
        Self::new([(location, 1.0)])
    }

    fn from_sorted_merge(mut list: Vec<Atom>) -> Self {
        list.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(list.len());
        for atom in list {
            match merged.last_mut() {
                Some(last) if last.location == atom.location => last.weight += atom.weight,
                _ => merged.push(atom),
            }
        }
        MixingDistribution { atoms: merged }
    }

    /// Grid approximation of `N(mean, sd^2)` on `mean ± half_width`, with
    /// weights proportional to the density. Grid convergence is the caller's
    /// concern.
    pub fn normal_grid(mean: f64, sd: f64, half_width: f64, points: usize) -> Result<Self> {
        if !(sd > 0.0) || points < 2 || !(half_width > 0.0) {
            return Err(GebError::invalid("normal grid needs sd > 0, half_width > 0, points >= 2"));
        }
        let step = 2.0 * half_width / (points - 1) as f64;
        Self::normalized((0..points).map(|i| {
            let x = -half_width + step * i as f64;
            (mean + x, normal::pdf(x / sd))
        }))
    }

    /// Equal-weight grid on `[lo, hi]`.
    pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if !(hi > lo) || points < 2 {
            return Err(GebError::invalid("uniform grid needs hi > lo and points >= 2"));
        }
        let step = (hi - lo) / (points - 1) as f64;
        Self::normalized((0..points).map(|i| (lo + step * i as f64, 1.0)))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn min_location(&self) -> f64 {
        self.atoms[0].location
    }

    pub fn max_location(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].location
    }

    /// Integration domain for integrals against the mixture marginal.
    pub fn support_window(&self) -> (f64, f64) {
        (self.min_location() - TRUNCATION_SD, self.max_location() + TRUNCATION_SD)
    }

    /// `w * self + (1 - w) * other`.
    pub fn blend(&self, other: &Self, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(GebError::invalid("blend weight must lie in [0, 1]"));
        }
        let pairs = self
            .atoms
            .iter()
            .map(|a| (a.location, w * a.weight))
            .chain(other.atoms.iter().map(|a| (a.location, (1.0 - w) * a.weight)));
        Self::normalized(pairs.collect::<Vec<_>>())
    }

    /// Mixture density `phi_G(x)` and its derivative.
    pub fn density(&self, x: f64) -> (f64, f64) {
        let mut d = 0.0;
        let mut dd = 0.0;
        for a in &self.atoms {
            let z = x - a.location;
            let p = a.weight * normal::pdf(z);
            d += p;
            dd -= z * p;
        }
        (d, dd)
    }

    /// `phi_G'(x) / phi_G(x)` evaluated without underflow: each atom is
    /// reweighted relative to the nearest one before exponentiating.
    /// Also returns `phi_G(x)`.
    pub fn score(&self, x: f64) -> (f64, f64) {
        let min_sq = self
            .atoms
            .iter()
            .map(|a| {
                let z = x - a.location;
                z * z
            })
            .fold(f64::INFINITY, f64::min);
        let mut s = 0.0;
        let mut s1 = 0.0;
        for a in &self.atoms {
            let z = x - a.location;
            let e = a.weight * (-0.5 * (z * z - min_sq)).exp();
            s += e;
            s1 += (a.location - x) * e;
        }
        let density = INV_SQRT_2PI * (-0.5 * min_sq).exp() * s;
        (s1 / s, density)
    }

    /// Posterior mean `x + phi_G'(x)/phi_G(x)`.
    pub fn posterior_mean(&self, x: f64) -> f64 {
        x + self.score(x).0
    }
}

/// Empirical distribution of `values / scale`, duplicates merged.
pub fn empirical_mixing(values: &[f64], scale: f64) -> Result<MixingDistribution> {
    if values.is_empty() {
        return Err(GebError::invalid("empirical_mixing needs at least one value"));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(GebError::invalid("scale must be positive and finite"));
    }
    let w = 1.0 / values.len() as f64;
    let mut atoms = Vec::with_capacity(values.len());
    for &v in values {
        let loc = v / scale;
        if !loc.is_finite() {
            return Err(GebError::invalid("values must be finite"));
        }
        atoms.push(Atom { location: loc, weight: w });
    }
    Ok(MixingDistribution::from_sorted_merge(atoms))
}

/// `(phi_G(x), phi_G'(x))`.
pub fn mixture_density(g: &MixingDistribution, x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(GebError::invalid("x must be finite"));
    }
    Ok(g.density(x))
}

/// `R*(G) = 1 - ∫ (phi_G'/phi_G)^2 phi_G dx`, clamped to `[0, 1]`.
pub fn bayes_risk(g: &MixingDistribution) -> Result<f64> {
    bayes_risk_with(g, QuadSettings::default())
}

pub fn bayes_risk_with(g: &MixingDistribution, settings: QuadSettings) -> Result<f64> {
    if g.len() == 1 {
        return Ok(0.0);
    }
    let (lo, hi) = g.support_window();
    let fisher = quadrature::integrate(
        |x| {
            let (s, d) = g.score(x);
            s * s * d
        },
        lo,
        hi,
        settings,
    )?;
    Ok((1.0 - fisher).clamp(0.0, 1.0))
}

/// Signal-mass summaries of a mixing distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSummary {
    /// `∫ (u^2 ∧ 1) dG`
    pub kappa: f64,
    /// `1 - ∫ exp(-u^2/4) dG`
    pub kappa_tilde: f64,
    /// `G{|u| > x}`
    pub tail_at_x: f64,
    /// `(∫ |u|^p dG)^{1/p}`
    pub mu_p: f64,
}

pub fn mixture_summaries(g: &MixingDistribution, p: f64, x: f64) -> Result<MixtureSummary> {
    if !(p > 0.0) {
        return Err(GebError::invalid("p must be positive"));
    }
    if !(x >= 0.0) {
        return Err(GebError::invalid("x must be nonnegative"));
    }
    let mut kappa = 0.0;
    let mut gauss = 0.0;
    let mut tail = 0.0;
    let mut moment = 0.0;
    for a in g.atoms() {
        let u = a.location;
        kappa += a.weight * (u * u).min(1.0);
        gauss += a.weight * (-0.25 * u * u).exp();
        if u.abs() > x {
            tail += a.weight;
        }
        moment += a.weight * u.abs().powf(p);
    }
    Ok(MixtureSummary {
        kappa,
        kappa_tilde: (1.0 - gauss).max(0.0),
        tail_at_x: tail,
        mu_p: moment.powf(1.0 / p),
    })
}

/// `G{|u| > x}`.
pub fn tail_mass(g: &MixingDistribution, x: f64) -> f64 {
    g.atoms().iter().filter(|a| a.location.abs() > x).map(|a| a.weight).sum()
}

/// Regret bound functionals for one block of size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBounds {
    /// Mass lost by the `rho` floor in the denominator of the GEB rule.
    pub delta: f64,
    /// Stochastic error term of the kernel-based rule.
    pub delta_star: f64,
    /// Moment-based bound `r_p(n, C)`.
    pub r_p: f64,
    /// Tail-based bound `r_0(n, G)`.
    pub r0: f64,
}

fn check_n_rho(n: usize, rho: f64) -> Result<()> {
    if n < 3 {
        return Err(GebError::invalid("bound functionals need n >= 3"));
    }
    if !(rho > 0.0 && rho < INV_SQRT_2PI) {
        return Err(GebError::invalid("rho must lie in (0, 1/sqrt(2 pi))"));
    }
    Ok(())
}

/// `∫ (phi_G'/phi_G)^2 {1 - phi_G/(phi_G ∨ rho)}^2 phi_G dx`.
pub fn delta(rho: f64, g: &MixingDistribution) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(GebError::invalid("rho must be positive"));
    }
    let (lo, hi) = g.support_window();
    quadrature::integrate(
        |x| {
            let (s, d) = g.score(x);
            let shortfall = 1.0 - d / d.max(rho);
            s * s * shortfall * shortfall * d
        },
        lo,
        hi,
        QuadSettings::default(),
    )
}

/// `{sqrt((2/3) log n) + sqrt(-log rho^2)}^2 sqrt(2 log n) / (pi rho n)`.
pub fn delta_star(n: usize, rho: f64) -> Result<f64> {
    check_n_rho(n, rho)?;
    let ln = (n as f64).ln();
    let a = (2.0 / 3.0 * ln).sqrt() + (-(rho * rho).ln()).sqrt();
    Ok(a * a * (2.0 * ln).sqrt() / (std::f64::consts::PI * rho * n as f64))
}

/// `min(1, C^p/(log n)^{p/2-1}, max[(log n)^2/sqrt n, {C (log n)^{3/2}/sqrt n}^{p/(p+1)}])`.
pub fn r_p(n: usize, c: f64, p: f64) -> Result<f64> {
    if n < 3 {
        return Err(GebError::invalid("r_p needs n >= 3"));
    }
    if !(p > 0.0) || !(c >= 0.0) {
        return Err(GebError::invalid("r_p needs p > 0 and C >= 0"));
    }
    let ln = (n as f64).ln();
    let sn = (n as f64).sqrt();
    let moment = c.powf(p) / ln.powf(p / 2.0 - 1.0);
    let rate = (ln * ln / sn).max((c * ln.powf(1.5) / sn).powf(p / (p + 1.0)));
    Ok(1f64.min(moment).min(rate))
}

/// `min(1, ∫_0^{log n} Ḡ(√u) du, (log n)^2/√n + inf_{x≥1}[Ḡ(x) + x (log n)^{3/2}/√n])`.
///
/// Both pieces are exact: the integral equals `Σ w min(u², log n)` and the
/// infimum is attained at `x = 1` or at an atom magnitude above one, since the
/// objective increases linearly between jumps of the tail function.
pub fn r0(n: usize, g: &MixingDistribution) -> Result<f64> {
    if n < 3 {
        return Err(GebError::invalid("r0 needs n >= 3"));
    }
    let ln = (n as f64).ln();
    let sn = (n as f64).sqrt();
    let slope = ln.powf(1.5) / sn;
    let integral: f64 = g.atoms().iter().map(|a| a.weight * (a.location * a.location).min(ln)).sum();
    let inf = std::iter::once(1.0)
        .chain(g.atoms().iter().map(|a| a.location.abs()).filter(|m| *m >= 1.0))
        .map(|x| tail_mass(g, x) + x * slope)
        .fold(f64::INFINITY, f64::min);
    Ok(1f64.min(integral).min(ln * ln / sn + inf))
}

/// All bound functionals for one block.
pub fn oracle_bound_suite(n: usize, rho: f64, g: &MixingDistribution, p: f64, c: f64) -> Result<OracleBounds> {
    check_n_rho(n, rho)?;
    Ok(OracleBounds {
        delta: delta(rho, g)?,
        delta_star: delta_star(n, rho)?,
        r_p: r_p(n, c, p)?,
        r0: r0(n, g)?,
    })
}

/// Kullback–Leibler information between Bernoulli(p1) and Bernoulli(p2).
pub fn kl_bernoulli(p1: f64, p2: f64) -> Result<f64> {
    let inside = |p: f64| p > 0.0 && p < 1.0;
    if !inside(p1) || !inside(p2) {
        return Err(GebError::invalid("kl_bernoulli arguments must lie strictly inside (0, 1)"));
    }
    Ok(p1 * (p1 / p2).ln() + (1.0 - p1) * ((1.0 - p1) / (1.0 - p2)).ln())
}
