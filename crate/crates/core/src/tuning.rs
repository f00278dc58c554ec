//! Bandwidth and tail-sample-size selection.

use serde::{Deserialize, Serialize};

use crate::numeric::sample_variance;
use crate::par::{map_range, map_slice, ExecMode};
use crate::survival::LocalDistribution;
use crate::tail::{gamma_from_local, GammaMethod, HillWeights};
use crate::{Dataset, Error, KernelSpec, Result, Smoother};

/// The treatment evaluation grid `{0.1, 0.2, …, 0.9}`.
pub fn default_t_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// `h_ROT = 1.06 · sd(T) · N^{-1/5}`.
pub fn rot_bandwidth(ds: &Dataset) -> Result<f64> {
    let n = ds.n();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two observations".into()));
    }
    let var = sample_variance(&ds.treatments());
    if !(var > 0.0) {
        return Err(Error::NoTreatmentVariation);
    }
    Ok(1.06 * var.sqrt() * (n as f64).powf(-0.2))
}

/// The interval `[N^{-1/3}, h_ROT]`, or the single point `N^{-1/3}` when
/// the rule of thumb falls below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthInterval {
    pub lo: f64,
    pub hi: f64,
    pub collapsed: bool,
}

impl BandwidthInterval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `m` evenly spaced points including both ends (one point if collapsed).
    pub fn grid(&self, m: usize) -> Vec<f64> {
        if self.collapsed || m <= 1 {
            return vec![if self.collapsed { self.lo } else { self.midpoint() }];
        }
        (0..m).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (m - 1) as f64).collect()
    }
}

pub fn bandwidth_candidates(ds: &Dataset) -> Result<BandwidthInterval> {
    let rot = rot_bandwidth(ds)?;
    Ok(bandwidth_interval(ds.n(), rot))
}

pub fn bandwidth_interval(n: usize, rot: f64) -> BandwidthInterval {
    let lo = (n as f64).powf(-1.0 / 3.0);
    if rot < lo {
        log::warn!("rule-of-thumb bandwidth {rot:.5} below N^(-1/3) = {lo:.5}; using the single point");
        BandwidthInterval { lo, hi: lo, collapsed: true }
    } else {
        BandwidthInterval { lo, hi: rot, collapsed: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSelection {
    pub h: f64,
    pub candidates: Vec<f64>,
    /// Cross-validation score per candidate, `None` when infeasible.
    pub scores: Vec<Option<f64>>,
}

/// Leave-one-out weighted squared error of the kernel regression of
/// `1(Y > y_q)` on `T`, averaged over the sample quantiles 0.5, 0.75, 0.9 of
/// `Y`. `None` if any leave-one-out window or any window at a `t_grid` point
/// is empty.
pub fn cv_score(ds: &Dataset, weights: &[f64], kernel: &KernelSpec, h: f64, t_grid: &[f64]) -> Option<f64> {
    let obs = ds.observations();
    let n = obs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| obs[a].t.total_cmp(&obs[b].t));
    let ts: Vec<f64> = order.iter().map(|&i| obs[i].t).collect();
    let window = |t: f64| (ts.partition_point(|&s| s < t - h), ts.partition_point(|&s| s <= t + h));

    for &t in t_grid {
        let (a, b) = window(t);
        if !(a..b).any(|p| kernel.eval((ts[p] - t) / h) > 0.0) {
            return None;
        }
    }

    let mut ys = ds.outcomes();
    ys.sort_by(f64::total_cmp);
    let thresholds = [0.5, 0.75, 0.9].map(|p| crate::numeric::sorted_quantile(&ys, p));

    let mut total = 0.0;
    let mut wsum = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        let (a, b) = window(ts[pos]);
        let mut den = 0.0;
        let mut num = [0.0; 3];
        for p in a..b {
            if p == pos {
                continue;
            }
            let j = order[p];
            let k = weights[j] * kernel.eval((ts[p] - ts[pos]) / h);
            den += k;
            for (q, thr) in thresholds.iter().enumerate() {
                if obs[j].y > *thr {
                    num[q] += k;
                }
            }
        }
        if !(den > 0.0) {
            return None;
        }
        for (q, thr) in thresholds.iter().enumerate() {
            let z = if obs[i].y > *thr { 1.0 } else { 0.0 };
            total += weights[i] * (z - num[q] / den).powi(2);
        }
        wsum += weights[i];
    }
    Some(total / (3.0 * wsum))
}

/// Minimizes [`cv_score`] over `candidates`; ties go to the larger bandwidth.
pub fn select_bandwidth(
    ds: &Dataset,
    weights: &[f64],
    kernel: &KernelSpec,
    candidates: &[f64],
    t_grid: &[f64],
    mode: ExecMode,
) -> Result<BandwidthSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("empty bandwidth candidate set".into()));
    }
    if candidates.iter().any(|&h| !(h > 0.0)) {
        return Err(Error::InvalidInput("bandwidth candidates must be positive".into()));
    }
    let scores = map_slice(candidates, mode, |&h| cv_score(ds, weights, kernel, h, t_grid));
    let mut best: Option<(f64, f64)> = None;
    for (&h, s) in candidates.iter().zip(&scores) {
        if let Some(s) = *s {
            best = match best {
                Some((bh, bs)) if s > bs || (s == bs && h <= bh) => Some((bh, bs)),
                _ => Some((h, s)),
            };
        }
    }
    let (h, _) = best.ok_or_else(|| Error::NoFeasibleCandidate("every bandwidth leaves an empty window".into()))?;
    Ok(BandwidthSelection { h, candidates: candidates.to_vec(), scores })
}

/// `𝒦 = [J, ⌊0.2 N^{0.95}⌋]`.
pub fn k_candidate_range(n: usize, j: usize) -> (usize, usize) {
    (j, (0.2 * (n as f64).powf(0.95)).floor() as usize)
}

/// Candidates in `[lo, hi]`: every integer up to 64, then steps of ×1.1,
/// always ending at `hi`.
pub fn thinned_candidates(lo: usize, hi: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut l = lo;
    while l <= hi {
        out.push(l);
        l = if l < 64 { l + 1 } else { ((l as f64 * 1.1).ceil() as usize).max(l + 1) };
    }
    if out.last() != Some(&hi) && hi >= lo {
        out.push(hi);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    pub candidates: Vec<usize>,
    /// `D_ℓ` per candidate; `None` where the candidate was skipped.
    pub distances: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    pub t_grid: Vec<f64>,
    pub j: usize,
    /// Scan every `ℓ` in the candidate range instead of the thinned set.
    pub exhaustive: bool,
    /// Overrides the candidate range `𝒦`.
    pub k_range: Option<(usize, usize)>,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self { t_grid: default_t_grid(), j: crate::tail::DEFAULT_J, exhaustive: false, k_range: None }
    }
}

/// `D_ℓ = sup_t max_{i<ℓ} |F̄̂_t(Z_i)/F̄̂_t(Z_ℓ) - (Z_ℓ/Z_i)^{1/γ̂ᴴ_ℓ(t)}|`
/// for one candidate, given the per-`t` local distributions. `None` if the
/// candidate is infeasible at any grid point.
pub fn distance(locals: &[LocalDistribution], z_desc: &[f64], n: usize, ell: usize, method: &GammaMethod) -> Option<f64> {
    let z_ell = z_desc[ell - 1];
    if !(z_ell > 0.0) {
        return None;
    }
    let mut sup: f64 = 0.0;
    for local in locals {
        let gamma = gamma_from_local(local, n, ell, method).ok()?;
        if !(gamma > 0.0) {
            return None;
        }
        let base = local.survival(z_ell);
        if !(base > 0.0) {
            return None;
        }
        for &z_i in &z_desc[..ell - 1] {
            let d = (local.survival(z_i) / base - (z_ell / z_i).powf(1.0 / gamma)).abs();
            sup = sup.max(d);
        }
    }
    Some(sup)
}

/// `argmin_ℓ D_ℓ` over the candidate range; ties go to the smaller `ℓ`.
pub fn select_k(ds: &Dataset, weights: &[f64], smoother: &Smoother, config: &TuningConfig, mode: ExecMode) -> Result<KSelection> {
    let n = ds.n();
    let w = HillWeights::new(config.j)?;
    if n < config.j + 1 {
        return Err(Error::InvalidInput(format!("need N ≥ J + 1 = {}", config.j + 1)));
    }
    let (lo, hi) = config.k_range.unwrap_or_else(|| k_candidate_range(n, config.j));
    let hi = hi.min(n);
    if lo > hi {
        return Err(Error::NoFeasibleCandidate(format!("empty candidate range [{lo}, {hi}]")));
    }
    let candidates: Vec<usize> = if config.exhaustive { (lo..=hi).collect() } else { thinned_candidates(lo, hi) };

    let mut z_desc = ds.outcomes();
    z_desc.sort_by(|a, b| b.total_cmp(a));
    let locals = config
        .t_grid
        .iter()
        .map(|&t| LocalDistribution::new(ds, weights, smoother, t))
        .collect::<Result<Vec<_>>>()?;
    let method = GammaMethod::Hill(w);

    let distances = map_range(candidates.len(), mode, |c| distance(&locals, &z_desc, n, candidates[c], &method));
    let mut best: Option<(usize, f64)> = None;
    for (&ell, d) in candidates.iter().zip(&distances) {
        if let Some(d) = *d {
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((ell, d));
            }
        }
    }
    let (k, _) = best.ok_or_else(|| Error::NoFeasibleCandidate("every tail sample size was skipped".into()))?;
    Ok(KSelection { k, candidates, distances })
}
