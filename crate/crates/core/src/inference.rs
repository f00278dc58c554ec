//! Variance estimation, plug-in effects and simultaneous bands.
//!
//! Both covariance estimators are sums of products of per-observation
//! influence terms
//!
//! ```text
//! ψ(i, v) = √(h·p_v/N) · [ π_i 1(Y_i > y_v) K_h(T_i - t) / (p_v f̂_T(t)) - 1 ]
//! ```
//!
//! with `(y_v, p_v) = (v·y_N, F̄̂(v·y_N))` for the survival process and
//! `(y_v, p_v) = (q̂(1 - v(1-α)), v(1-α))` for the quantile process. The
//! tail-index variances are quadratic forms in the quantile covariance.

use serde::{Deserialize, Serialize};

use crate::numeric::two_sided_z;
use crate::survival::{density_at, LocalDistribution};
use crate::tail::{extreme_quantile, tail_mean, GammaMethod, HillWeights, TailFit};
use crate::{Dataset, Error, Result, Smoother};

/// Influence terms for one threshold, one entry per observation.
fn influence(ds: &Dataset, weights: &[f64], smoother: &Smoother, t: f64, f_hat: f64, threshold: f64, p: f64) -> Vec<f64> {
    let n = ds.n() as f64;
    let scale = (smoother.h * p / n).sqrt();
    let denom = p * f_hat;
    ds.observations()
        .iter()
        .zip(weights)
        .map(|(o, &w)| {
            let hit = if o.y > threshold { w * smoother.weight(o.t, t) / denom } else { 0.0 };
            scale * (hit - 1.0)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn positive_density(ds: &Dataset, smoother: &Smoother, t: f64) -> Result<f64> {
    let f = density_at(ds, smoother, t);
    if f > 0.0 {
        Ok(f)
    } else {
        Err(Error::EmptyWindow { t, h: smoother.h })
    }
}

/// `Ω̂ᶠ_t(v₁, v₂)`, the covariance of the normalized survival process at
/// thresholds `v₁·y_N` and `v₂·y_N`.
pub fn omega_f_hat(
    ds: &Dataset,
    weights: &[f64],
    smoother: &Smoother,
    t: f64,
    y_n: f64,
    v1: f64,
    v2: f64,
) -> Result<f64> {
    let local = LocalDistribution::new(ds, weights, smoother, t)?;
    let f_hat = positive_density(ds, smoother, t)?;
    let column = |v: f64| -> Result<Vec<f64>> {
        let threshold = v * y_n;
        let p = local.survival(threshold);
        if !(p > 0.0) {
            return Err(Error::BeyondDataTail);
        }
        Ok(influence(ds, weights, smoother, t, f_hat, threshold, p))
    };
    let a = column(v1)?;
    if v1 == v2 {
        return Ok(dot(&a, &a));
    }
    Ok(dot(&a, &column(v2)?))
}

fn quantile_columns(
    ds: &Dataset,
    weights: &[f64],
    smoother: &Smoother,
    local: &LocalDistribution,
    f_hat: f64,
    alpha: f64,
    vs: &[f64],
) -> Result<Vec<Vec<f64>>> {
    vs.iter()
        .map(|&v| {
            let p = v * (1.0 - alpha);
            let level = 1.0 - p;
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::LevelOutOfRange(level));
            }
            let q = local.quantile(level)?;
            Ok(influence(ds, weights, smoother, local.t(), f_hat, q, p))
        })
        .collect()
}

/// Full matrix `[Ω̂^Q_t(v_a, v_b)]` over the given levels, base level `α`.
pub fn omega_q_matrix(
    ds: &Dataset,
    weights: &[f64],
    smoother: &Smoother,
    t: f64,
    alpha: f64,
    gamma_hat: f64,
    vs: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if !gamma_hat.is_finite() {
        return Err(Error::InvalidInput("tail index must be finite".into()));
    }
    let local = LocalDistribution::new(ds, weights, smoother, t)?;
    let f_hat = positive_density(ds, smoother, t)?;
    let cols = quantile_columns(ds, weights, smoother, &local, f_hat, alpha, vs)?;
    let g2 = gamma_hat * gamma_hat;
    let m = vs.len();
    let mut out = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in a..m {
            let v = g2 * dot(&cols[a], &cols[b]);
            out[a][b] = v;
            out[b][a] = v;
        }
    }
    Ok(out)
}

/// `Ω̂^Q_t(v₁, v₂)`; levels `v > 1` are allowed as long as
/// `1 - v(1-α)` stays inside `(0, 1)`.
#[allow(clippy::too_many_arguments)]
pub fn omega_q_hat(
    ds: &Dataset,
    weights: &[f64],
    smoother: &Smoother,
    t: f64,
    alpha: f64,
    gamma_hat: f64,
    v1: f64,
    v2: f64,
) -> Result<f64> {
    Ok(omega_q_matrix(ds, weights, smoother, t, alpha, gamma_hat, &[v1, v2])?[0][1])
}

fn floor_variance(v: f64, what: &str, t: f64) -> f64 {
    if v < 0.0 {
        log::warn!("{what} quadratic form negative ({v:.3e}) at t = {t}; flooring at 0");
        0.0
    } else {
        v
    }
}

/// `Θᵀ Σ Θ / (Σ_j log(1/v_j))²` with `Θ = (1-J, v₂^{-1/2}, …, v_J^{-1/2})`.
pub fn hill_variance_from_sigma(sigma: &[Vec<f64>], w: &HillWeights) -> Result<f64> {
    let j = w.j();
    if j < 2 {
        return Err(Error::TooFewHillLevels);
    }
    if sigma.len() != j || sigma.iter().any(|r| r.len() != j) {
        return Err(Error::InvalidInput("Σ_J must be J×J".into()));
    }
    let theta: Vec<f64> = w
        .levels()
        .iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 { 1.0 - j as f64 } else { v.powf(-0.5) })
        .collect();
    let form: f64 = (0..j).map(|a| (0..j).map(|b| theta[a] * sigma[a][b] * theta[b]).sum::<f64>()).sum();
    Ok(form / w.log_sum().powi(2))
}

/// Plug-in asymptotic variance of `√(k_N h)(γ̂ᴴ - γ)` at `t`.
#[allow(clippy::too_many_arguments)]
pub fn hill_variance(
    ds: &Dataset,
    weights: &[f64],
    smoother: &Smoother,
    t: f64,
    k_n: usize,
    w: &HillWeights,
    gamma_hat: f64,
) -> Result<f64> {
    if w.j() < 2 {
        return Err(Error::TooFewHillLevels);
    }
    let alpha = 1.0 - k_n as f64 / ds.n() as f64;
    let sigma = omega_q_matrix(ds, weights, smoother, t, alpha, gamma_hat, w.levels())?;
    Ok(floor_variance(hill_variance_from_sigma(&sigma, w)?, "Hill variance", t))
}

/// Which denominator to pair with the Pickands variance bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PickandsPrefactor {
    /// `{log 2}² {2^γ - 1}²`.
    #[default]
    PowerMinusOne,
    /// `{log 2}² {1 - 2^{-γ}}²`.
    OneMinusInverse,
}

/// Index of the Pickands levels in the covariance tables below:
/// 0 ↔ `1 - k/(4N)`, 1 ↔ `1 - k/(2N)`, 2 ↔ `1 - k/N`.
pub type PickandsTable = [[f64; 3]; 3];

/// The bracket of the Pickands variance, with `varpi[a][b]` indexed as in
/// [`PickandsTable`].
pub fn pickands_bracket(gamma: f64, varpi: &PickandsTable) -> f64 {
    let p = 2f64.powf(gamma);
    let s2 = std::f64::consts::SQRT_2;
    2f64.powf(2.0 * gamma + 2.0) * varpi[0][0] - 2f64.powf(gamma + 2.5) * (1.0 + p) * varpi[0][1]
        + 2f64.powf(gamma + 2.0) * varpi[0][2]
        + 2.0 * (1.0 + p).powi(2) * varpi[1][1]
        - 2.0 * s2 * (1.0 + p) * varpi[1][2]
        + varpi[2][2]
}

/// Combines the limit terms `ϖ^Q` into the Pickands variance.
pub fn pickands_variance_from_varpi(
    gamma: f64,
    kappa02: f64,
    f_t: f64,
    varpi: &PickandsTable,
    prefactor: PickandsPrefactor,
) -> Result<f64> {
    if gamma == 0.0 {
        return Err(Error::PickandsVarianceAtZero);
    }
    let ln2 = std::f64::consts::LN_2;
    let spacing = match prefactor {
        PickandsPrefactor::PowerMinusOne => 2f64.powf(gamma) - 1.0,
        PickandsPrefactor::OneMinusInverse => 1.0 - 2f64.powf(-gamma),
    };
    let pre = gamma * gamma * kappa02 / f_t / (ln2 * ln2 * spacing * spacing);
    Ok(pre * pickands_bracket(gamma, varpi))
}

/// Plug-in asymptotic variance of `√(k_N h)(γ̂ᴾ - γ)` at `t`.
///
/// The covariance terms are taken at the three levels the estimator itself
/// uses, `1 - k/(4N)`, `1 - k/(2N)`, `1 - k/N`, i.e. base `1 - k/(4N)` with
/// `v ∈ {1, 2, 4}`.
#[allow(clippy::too_many_arguments)]
pub fn pickands_variance(
    ds: &Dataset,
    weights: &[f64],
    smoother: &Smoother,
    t: f64,
    k_n: usize,
    gamma_hat: f64,
    prefactor: PickandsPrefactor,
) -> Result<f64> {
    if gamma_hat == 0.0 {
        return Err(Error::PickandsVarianceAtZero);
    }
    let base = 1.0 - k_n as f64 / (4.0 * ds.n() as f64);
    let omega = omega_q_matrix(ds, weights, smoother, t, base, gamma_hat, &[1.0, 2.0, 4.0])?;
    let f_hat = positive_density(ds, smoother, t)?;
    let kappa02 = smoother.kernel.kappa02;
    let scale = f_hat / (gamma_hat * gamma_hat * kappa02);
    let mut varpi = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            varpi[a][b] = omega[a][b] * scale;
        }
    }
    let v = pickands_variance_from_varpi(gamma_hat, kappa02, f_hat, &varpi, prefactor)?;
    Ok(floor_variance(v, "Pickands variance", t))
}

/// `σ̂²_Γ(t)` for whichever tail-index method produced `fit`.
pub fn gamma_variance(
    ds: &Dataset,
    weights: &[f64],
    smoother: &Smoother,
    fit: &TailFit,
    prefactor: PickandsPrefactor,
) -> Result<f64> {
    match &fit.method {
        GammaMethod::Hill(w) => hill_variance(ds, weights, smoother, fit.t, fit.k_n, w, fit.gamma_hat),
        GammaMethod::Pickands => pickands_variance(ds, weights, smoother, fit.t, fit.k_n, fit.gamma_hat, prefactor),
    }
}

/// `ÊQTE_{t1,t2}(α) = q̂ᴱ_{t1}(α) / q̂ᴱ_{t2}(α)`.
pub fn eqte(fit1: &TailFit, fit2: &TailFit, alpha: f64) -> Result<f64> {
    let num = extreme_quantile(fit1, alpha)?;
    let den = extreme_quantile(fit2, alpha)?;
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator);
    }
    Ok(num / den)
}

/// `ÊATE_{t1,t2}(α) = TM̂_{t1}(α) / TM̂_{t2}(α)`.
pub fn eate(fit1: &TailFit, fit2: &TailFit, alpha: f64) -> Result<f64> {
    let num = tail_mean(fit1, alpha)?;
    let den = tail_mean(fit2, alpha)?;
    if !(den > 0.0) {
        return Err(Error::NonPositiveDenominator);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub t1: f64,
    pub t2: f64,
    pub alpha: f64,
    pub eqte: f64,
    pub eate: f64,
    pub var_gamma_t1: f64,
    pub var_gamma_t2: f64,
    pub k_n: usize,
    pub h: f64,
}

pub fn effect_estimate(fit1: &TailFit, fit2: &TailFit, alpha: f64, var1: f64, var2: f64) -> Result<EffectEstimate> {
    Ok(EffectEstimate {
        t1: fit1.t,
        t2: fit2.t,
        alpha,
        eqte: eqte(fit1, fit2, alpha)?,
        eate: eate(fit1, fit2, alpha)?,
        var_gamma_t1: var1,
        var_gamma_t2: var2,
        k_n: fit1.k_n,
        h: fit1.h,
    })
}

/// A fitted treatment level paired with its tail-index variance.
#[derive(Debug, Clone, PartialEq)]
pub struct BandArm {
    pub fit: TailFit,
    pub var_gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub rho: f64,
    pub center: f64,
    /// `None` where the band is undefined (EATE at or inside the anchor).
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectBand {
    pub t1: f64,
    pub t2: f64,
    pub alpha_n: f64,
    pub delta0: f64,
    pub confidence: f64,
    pub z: f64,
    pub points: Vec<BandPoint>,
}

impl EffectBand {
    pub fn contains(&self, idx: usize, value: f64) -> Option<bool> {
        let p = &self.points[idx];
        Some(p.lower? <= value && value <= p.upper?)
    }
}

/// Band options shared by EQTE and EATE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub alpha_n: f64,
    pub delta0: f64,
    pub confidence: f64,
}

impl BandSpec {
    pub fn new(alpha_n: f64, confidence: f64) -> Self {
        Self { alpha_n, delta0: DEFAULT_DELTA0, confidence }
    }

    fn check_grid(&self, rho: &[f64]) -> Result<()> {
        if !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return Err(Error::InvalidInput(format!("Δ₀ must lie in (0, 1), got {}", self.delta0)));
        }
        let lo = self.delta0 * self.alpha_n;
        if let Some(bad) = rho.iter().find(|&&r| !(r >= lo && r <= self.alpha_n)) {
            return Err(Error::InvalidInput(format!(
                "ϱ = {bad} outside [{lo}, {}]",
                self.alpha_n
            )));
        }
        Ok(())
    }
}

pub const DEFAULT_DELTA0: f64 = 0.5;

/// `log(k_N / (N(1 - ϱ)))`, the extrapolation distance at level `ϱ`.
fn log_extrapolation(fit: &TailFit, rho: f64) -> f64 {
    (fit.k_n as f64 / (fit.n as f64 * (1.0 - rho))).ln()
}

fn check_arms(a: &BandArm, b: &BandArm) -> Result<()> {
    if a.fit.k_n != b.fit.k_n || a.fit.n != b.fit.n || a.fit.h != b.fit.h {
        return Err(Error::InvalidInput("both arms must share N, k_N and h".into()));
    }
    if !(a.var_gamma >= 0.0 && b.var_gamma >= 0.0) {
        return Err(Error::InvalidInput("tail-index variances must be nonnegative".into()));
    }
    Ok(())
}

/// Simultaneous band for `EQTEᴱ_{t1,t2}(ϱ)`:
/// `center · exp(± z √(σ̂²(t1) + σ̂²(t2)) · log(k_N/(N(1-ϱ))) / √(k_N h))`.
///
/// The log factor enters by magnitude, so the band stays ordered for levels
/// on either side of the anchor.
pub fn eqte_band(arm1: &BandArm, arm2: &BandArm, spec: &BandSpec, rho: &[f64]) -> Result<EffectBand> {
    check_arms(arm1, arm2)?;
    spec.check_grid(rho)?;
    let z = two_sided_z(spec.confidence)?;
    let sd = (arm1.var_gamma + arm2.var_gamma).sqrt();
    let root_kh = (arm1.fit.k_n as f64 * arm1.fit.h).sqrt();
    let points = rho
        .iter()
        .map(|&r| {
            let center = eqte(&arm1.fit, &arm2.fit, r)?;
            let half = z * sd * log_extrapolation(&arm1.fit, r).abs() / root_kh;
            Ok(BandPoint { rho: r, center, lower: Some(center * (-half).exp()), upper: Some(center * half.exp()) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectBand {
        t1: arm1.fit.t,
        t2: arm2.fit.t,
        alpha_n: spec.alpha_n,
        delta0: spec.delta0,
        confidence: spec.confidence,
        z,
        points,
    })
}

/// `(1 + 1/(L (1 - γ̂)))²`, the finite-sample inflation of the tail-index
/// variance for tail means at log extrapolation distance `L`.
pub fn tail_mean_adjustment(log_factor: f64, gamma_hat: f64) -> f64 {
    (1.0 + 1.0 / (log_factor * (1.0 - gamma_hat))).powi(2)
}

/// Simultaneous band for `EATE_{t1,t2}(ϱ)`. With `adjusted` the per-arm
/// variance is inflated by [`tail_mean_adjustment`]; grid points where the
/// log factor is not positive are left without bounds.
pub fn eate_band(arm1: &BandArm, arm2: &BandArm, spec: &BandSpec, rho: &[f64], adjusted: bool) -> Result<EffectBand> {
    check_arms(arm1, arm2)?;
    spec.check_grid(rho)?;
    for arm in [arm1, arm2] {
        if !(arm.fit.gamma_hat < 1.0) {
            return Err(Error::TailMeanUndefined(arm.fit.gamma_hat));
        }
    }
    let z = two_sided_z(spec.confidence)?;
    let root_kh = (arm1.fit.k_n as f64 * arm1.fit.h).sqrt();
    let points = rho
        .iter()
        .map(|&r| {
            let center = eate(&arm1.fit, &arm2.fit, r)?;
            let l = log_extrapolation(&arm1.fit, r);
            if !(l > 0.0) {
                return Ok(BandPoint { rho: r, center, lower: None, upper: None });
            }
            let var = if adjusted {
                tail_mean_adjustment(l, arm1.fit.gamma_hat) * arm1.var_gamma
                    + tail_mean_adjustment(l, arm2.fit.gamma_hat) * arm2.var_gamma
            } else {
                arm1.var_gamma + arm2.var_gamma
            };
            let half = z * var.sqrt() * l / root_kh;
            Ok(BandPoint { rho: r, center, lower: Some(center * (-half).exp()), upper: Some(center * half.exp()) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EffectBand {
        t1: arm1.fit.t,
        t2: arm2.fit.t,
        alpha_n: spec.alpha_n,
        delta0: spec.delta0,
        confidence: spec.confidence,
        z,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(t: f64, q: f64, gamma_hat: f64) -> TailFit {
        TailFit {
            t,
            h: 0.1,
            n: 2000,
            k_n: 100,
            gamma_hat,
            method: GammaMethod::default(),
            q_intermediate: q,
            f_t_hat: 1.0,
        }
    }

    #[test]
    fn hill_variance_identity_sigma() {
        let w = HillWeights::new(2).unwrap();
        let sigma = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let v = hill_variance_from_sigma(&sigma, &w).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((v - 3.0 / (ln2 * ln2)).abs() < 1e-12, "{v}");
        assert!((v - 6.2441).abs() < 1e-3);
        let one = HillWeights::new(1).unwrap();
        assert_eq!(hill_variance_from_sigma(&[vec![1.0]], &one).unwrap_err(), Error::TooFewHillLevels);
    }

    #[test]
    fn pickands_bracket_equal_terms_is_squared_coefficient_sum() {
        // With every ϖ equal to c the bracket is c·(Σ θ)² for the linear
        // combination θ = (2^{γ+1}, -√2(1+2^γ), 1).
        let g: f64 = 0.25;
        let c = 1.7;
        let theta_sum = 2f64.powf(g + 1.0) - 2f64.sqrt() * (1.0 + 2f64.powf(g)) + 1.0;
        let b = pickands_bracket(g, &[[c; 3]; 3]);
        assert!((b - c * theta_sum * theta_sum).abs() < 1e-12, "{b}");
    }

    #[test]
    fn pickands_variance_grows_with_gamma() {
        // Pareto-shaped limits: ϖ(a, b) = √(min/max) of the exceedance probabilities
        let probs: [f64; 3] = [1.0, 2.0, 4.0];
        let mut varpi = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                varpi[a][b] = (probs[a].min(probs[b]) / probs[a].max(probs[b])).sqrt();
            }
        }
        let v: Vec<f64> = [0.25, 0.5, 1.0]
            .iter()
            .map(|&g| pickands_variance_from_varpi(g, 0.6, 1.0, &varpi, PickandsPrefactor::PowerMinusOne).unwrap())
            .collect();
        assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
        assert_eq!(
            pickands_variance_from_varpi(0.0, 0.6, 1.0, &varpi, PickandsPrefactor::PowerMinusOne).unwrap_err(),
            Error::PickandsVarianceAtZero
        );
    }

    #[test]
    fn pickands_prefactor_at_one() {
        // with γ = 1, κ₀₂ = f = 1 and a bracket of 1, only the prefactor is left
        let mut varpi = [[0.0; 3]; 3];
        varpi[2][2] = 1.0;
        let v = pickands_variance_from_varpi(1.0, 1.0, 1.0, &varpi, PickandsPrefactor::PowerMinusOne).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((v - 1.0 / (ln2 * ln2)).abs() < 1e-12);
        let p = pickands_variance_from_varpi(1.0, 1.0, 1.0, &varpi, PickandsPrefactor::OneMinusInverse).unwrap();
        assert!((p - 4.0 / (ln2 * ln2)).abs() < 1e-12);
    }

    #[test]
    fn effects_on_identical_fits() {
        let f = fit(0.3, 4.0, 0.25);
        assert_eq!(eqte(&f, &f, 0.999).unwrap(), 1.0);
        assert_eq!(eate(&f, &f, 0.999).unwrap(), 1.0);
        let g = fit(0.6, 3.0, 0.25);
        assert!((eate(&f, &g, 0.999).unwrap() - eqte(&f, &g, 0.999).unwrap()).abs() < 1e-12);
        assert_eq!(eqte(&f, &g, 0.999).unwrap() * eqte(&g, &f, 0.999).unwrap(), 1.0);
    }

    #[test]
    fn eqte_band_degenerate_cases() {
        let a = BandArm { fit: fit(0.2, 4.0, 0.3), var_gamma: 0.0 };
        let b = BandArm { fit: fit(0.7, 3.0, 0.2), var_gamma: 0.0 };
        let spec = BandSpec::new(0.999, 0.95);
        let band = eqte_band(&a, &b, &spec, &[0.99, 0.999]).unwrap();
        for p in &band.points {
            assert_eq!(p.lower, Some(p.center));
            assert_eq!(p.upper, Some(p.center));
        }
        let a = BandArm { var_gamma: 0.1, ..a };
        let anchor = 1.0 - 100.0 / 2000.0;
        let band = eqte_band(&a, &b, &spec, &[anchor]).unwrap();
        let p = band.points[0];
        assert!((p.lower.unwrap() / p.center - 1.0).abs() < 1e-12);
        assert!((p.upper.unwrap() / p.center - 1.0).abs() < 1e-12);
        assert!((band.z - 1.959964).abs() < 1e-6);
        assert!(eqte_band(&a, &b, &spec, &[0.2]).is_err());
    }

    #[test]
    fn adjustment_factor_arithmetic() {
        assert_eq!(tail_mean_adjustment(1.0, 0.5), 9.0);
        assert!((tail_mean_adjustment(1e12, 0.0) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn adjusted_eate_band_is_wider() {
        let a = BandArm { fit: fit(0.2, 4.0, 0.3), var_gamma: 0.05 };
        let b = BandArm { fit: fit(0.7, 3.0, 0.2), var_gamma: 0.04 };
        let spec = BandSpec::new(0.999, 0.95);
        let rho = [0.96, 0.99, 0.999];
        let adj = eate_band(&a, &b, &spec, &rho, true).unwrap();
        let raw = eate_band(&a, &b, &spec, &rho, false).unwrap();
        for (p, q) in adj.points.iter().zip(&raw.points) {
            assert!(p.upper.unwrap() > q.upper.unwrap());
            assert!(p.lower.unwrap() < q.lower.unwrap());
        }
        let inside = eate_band(&a, &b, &spec, &[0.9], true).unwrap();
        assert_eq!(inside.points[0].lower, None);
    }
}
