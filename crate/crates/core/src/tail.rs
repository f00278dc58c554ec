//! Quantiles, tail indices and tail means at a single treatment level.
//!
//! Intermediate quantiles come straight from inverting the local survival
//! step function. Extreme quantiles are extrapolated from the intermediate
//! anchor `q̂(1 - k/N)` with the power law `q(α) ≈ q(β)·((1-β)/(1-α))^γ`,
//! where `γ` is estimated by a kernel Pickands or a weighted Hill estimator.

use serde::{Deserialize, Serialize};

use crate::survival::{density_at, LocalDistribution};
use crate::{Dataset, Error, Result, Smoother};

/// Hill log-spacing levels `v_j = 1 - (j-1)/J`, `j = 1..=J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillWeights {
    vs: Vec<f64>,
}

pub const DEFAULT_J: usize = 8;

impl HillWeights {
    pub fn new(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidInput("J must be positive".into()));
        }
        let jf = j as f64;
        Ok(Self { vs: (0..j).map(|i| 1.0 - i as f64 / jf).collect() })
    }

    /// Arbitrary strictly decreasing levels starting at 1.
    pub fn from_levels(vs: Vec<f64>) -> Result<Self> {
        let ok = vs.first() == Some(&1.0)
            && vs.windows(2).all(|w| w[0] > w[1])
            && vs.last().is_some_and(|&v| v > 0.0);
        if !ok {
            return Err(Error::InvalidInput("Hill levels must satisfy 1 = v_1 > … > v_J > 0".into()));
        }
        Ok(Self { vs })
    }

    pub fn j(&self) -> usize {
        self.vs.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.vs
    }

    /// `Σ_j log(1/v_j)`.
    pub fn log_sum(&self) -> f64 {
        self.vs.iter().map(|v| -v.ln()).sum()
    }
}

impl Default for HillWeights {
    fn default() -> Self {
        Self::new(DEFAULT_J).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum GammaMethod {
    Hill(HillWeights),
    Pickands,
}

impl Default for GammaMethod {
    fn default() -> Self {
        Self::Hill(HillWeights::default())
    }
}

impl std::fmt::Display for GammaMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Hill(w) => write!(f, "hill(J={})", w.j()),
            Self::Pickands => f.write_str("pickands"),
        }
    }
}

/// Everything downstream estimators need at one treatment level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub t: f64,
    pub h: f64,
    pub n: usize,
    pub k_n: usize,
    pub gamma_hat: f64,
    pub method: GammaMethod,
    /// `q̂_{t,h}(1 - k_n/N)`.
    pub q_intermediate: f64,
    pub f_t_hat: f64,
}

impl TailFit {
    /// The intermediate anchor level `1 - k_n/N`.
    pub fn anchor_level(&self) -> f64 {
        anchor_level(self.k_n, self.n)
    }
}

#[inline]
fn anchor_level(k_n: usize, n: usize) -> f64 {
    1.0 - k_n as f64 / n as f64
}

fn check_level(level: f64) -> Result<f64> {
    if level > 0.0 && level < 1.0 {
        Ok(level)
    } else {
        Err(Error::LevelOutOfRange(level))
    }
}

/// `q̂_{t,h}(α)` by scanning the local step function.
pub fn intermediate_quantile(ds: &Dataset, weights: &[f64], smoother: &Smoother, t: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::AlphaNotPositive);
    }
    LocalDistribution::new(ds, weights, smoother, t)?.quantile(alpha)
}

/// The no-extrapolation baseline: the same inversion at an extreme level. It
/// saturates at the largest in-window outcome once `1 - α` drops below the
/// smallest survival step.
pub fn naive_extreme_quantile(ds: &Dataset, weights: &[f64], smoother: &Smoother, t: f64, alpha: f64) -> Result<f64> {
    intermediate_quantile(ds, weights, smoother, t, alpha)
}

/// `log((q₄ - q₂)/(q₂ - q₁)) / log 2` from the quantiles at levels
/// `1 - k/(4N)`, `1 - k/(2N)`, `1 - k/N`.
pub fn pickands_from_quantiles(q_quarter: f64, q_half: f64, q_one: f64) -> Result<f64> {
    let num = q_quarter - q_half;
    let den = q_half - q_one;
    if !(den > 0.0) || !(num > 0.0) {
        return Err(Error::DegenerateSpacing);
    }
    Ok((num / den).ln() / std::f64::consts::LN_2)
}

/// Pickands estimate from any quantile function `α ↦ q(α)`.
pub fn pickands_with(n: usize, k_n: usize, mut quantile: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if k_n < 4 {
        return Err(Error::InvalidInput(format!("Pickands needs k_n ≥ 4, got {k_n}")));
    }
    let frac = k_n as f64 / n as f64;
    let q_one = quantile(check_level(1.0 - frac)?)?;
    let q_half = quantile(check_level(1.0 - frac / 2.0)?)?;
    let q_quarter = quantile(check_level(1.0 - frac / 4.0)?)?;
    pickands_from_quantiles(q_quarter, q_half, q_one)
}

/// Weighted Hill estimate from any quantile function `α ↦ q(α)`:
/// `Σ_j log(q(1 - v_j k/N) / q(1 - k/N)) / Σ_j log(1/v_j)`.
pub fn hill_with(n: usize, k_n: usize, w: &HillWeights, mut quantile: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if k_n < w.j() {
        return Err(Error::InvalidInput(format!("Hill needs k_n ≥ J = {}, got {k_n}", w.j())));
    }
    let denom = w.log_sum();
    if !(denom > 0.0) {
        return Err(Error::InvalidInput("Hill level log-sum is zero; J must be ≥ 2".into()));
    }
    let frac = k_n as f64 / n as f64;
    let base = quantile(check_level(1.0 - frac)?)?;
    if !(base > 0.0) {
        return Err(Error::NonPositiveQuantile);
    }
    let mut sum = 0.0;
    for &v in &w.levels()[1..] {
        let q = quantile(check_level(1.0 - v * frac)?)?;
        if !(q > 0.0) {
            return Err(Error::NonPositiveQuantile);
        }
        sum += (q / base).ln();
    }
    Ok(sum / denom)
}

pub fn pickands_gamma(ds: &Dataset, weights: &[f64], smoother: &Smoother, t: f64, k_n: usize) -> Result<f64> {
    let local = LocalDistribution::new(ds, weights, smoother, t)?;
    pickands_with(ds.n(), k_n, |a| local.quantile(a))
}

pub fn hill_gamma(ds: &Dataset, weights: &[f64], smoother: &Smoother, t: f64, k_n: usize, w: &HillWeights) -> Result<f64> {
    let local = LocalDistribution::new(ds, weights, smoother, t)?;
    hill_with(ds.n(), k_n, w, |a| local.quantile(a))
}

/// Tail index at `t` from an existing local distribution.
pub fn gamma_from_local(local: &LocalDistribution, n: usize, k_n: usize, method: &GammaMethod) -> Result<f64> {
    match method {
        GammaMethod::Hill(w) => hill_with(n, k_n, w, |a| local.quantile(a)),
        GammaMethod::Pickands => pickands_with(n, k_n, |a| local.quantile(a)),
    }
}

/// Fits the tail at `t`: tail index, intermediate anchor and `f̂_T(t)`.
pub fn fit_tail(
    ds: &Dataset,
    weights: &[f64],
    smoother: &Smoother,
    t: f64,
    k_n: usize,
    method: &GammaMethod,
) -> Result<TailFit> {
    let local = LocalDistribution::new(ds, weights, smoother, t)?;
    fit_from_local(ds, smoother, &local, k_n, method)
}

pub fn fit_from_local(
    ds: &Dataset,
    smoother: &Smoother,
    local: &LocalDistribution,
    k_n: usize,
    method: &GammaMethod,
) -> Result<TailFit> {
    let n = ds.n();
    let gamma_hat = gamma_from_local(local, n, k_n, method)?;
    if !gamma_hat.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite tail index at t = {}", local.t())));
    }
    let q_intermediate = local.quantile(check_level(anchor_level(k_n, n))?)?;
    Ok(TailFit {
        t: local.t(),
        h: smoother.h,
        n,
        k_n,
        gamma_hat,
        method: method.clone(),
        q_intermediate,
        f_t_hat: density_at(ds, smoother, local.t()),
    })
}

/// `q̂ᴱ(α) = q̂(1 - k/N) · (k / (N(1 - α)))^γ̂`.
pub fn extreme_quantile(fit: &TailFit, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    if !(fit.q_intermediate > 0.0) {
        return Err(Error::NonPositiveQuantile);
    }
    if alpha == fit.anchor_level() {
        return Ok(fit.q_intermediate);
    }
    let ratio = fit.k_n as f64 / (fit.n as f64 * (1.0 - alpha));
    Ok(fit.q_intermediate * ratio.powf(fit.gamma_hat))
}

/// `TM̂(α) = q̂ᴱ(α) / (1 - γ̂)`.
pub fn tail_mean(fit: &TailFit, alpha: f64) -> Result<f64> {
    if !(fit.gamma_hat < 1.0) {
        return Err(Error::TailMeanUndefined(fit.gamma_hat));
    }
    if fit.gamma_hat >= 0.5 {
        log::warn!("γ̂ = {:.3} ≥ 0.5 at t = {}: tail mean has infinite variance", fit.gamma_hat, fit.t);
    }
    Ok(extreme_quantile(fit, alpha)? / (1.0 - fit.gamma_hat))
}
