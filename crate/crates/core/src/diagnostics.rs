//! Heavy-tail diagnostics: a Box-Cox normality search and the exponential
//! Q-Q check on scaled log-spacings of the upper order statistics.

use serde::{Deserialize, Serialize};

use crate::numeric::{normal_quantile, pearson};
use crate::par::{map_range, ExecMode};
use crate::{Error, Result};

/// `((y + λ₂)^λ₁ - 1)/λ₁`, or `log(y + λ₂)` at `λ₁ = 0`.
pub fn box_cox(y: f64, lambda1: f64, lambda2: f64) -> f64 {
    let s = y + lambda2;
    if lambda1 == 0.0 {
        s.ln()
    } else {
        (lambda1 * s.ln()).exp_m1() / lambda1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxGrid {
    pub lambda1: (f64, f64, f64),
    pub lambda2: (f64, f64, f64),
}

impl Default for BoxCoxGrid {
    fn default() -> Self {
        Self { lambda1: (-1.0, 2.0, 0.01), lambda2: (0.0, 1.0, 0.005) }
    }
}

fn expand((lo, hi, step): (f64, f64, f64)) -> Vec<f64> {
    let m = ((hi - lo) / step + 1e-9).floor() as usize;
    // integer multiples keep grid points exact, e.g. λ₁ = 0 is hit exactly
    (0..=m).map(|i| ((lo / step).round() + i as f64) * step).collect()
}

impl BoxCoxGrid {
    pub fn points(&self) -> (Vec<f64>, Vec<f64>) {
        (expand(self.lambda1), expand(self.lambda2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxResult {
    pub lambda1: f64,
    pub lambda2: f64,
    pub correlation: f64,
    /// Transformed data in input order, shifted so the minimum is 0.
    pub transformed: Vec<f64>,
}

/// Normal scores `Φ⁻¹((i - 3/8)/(n + 1/4))`.
pub fn normal_scores(n: usize) -> Vec<f64> {
    (1..=n).map(|i| normal_quantile((i as f64 - 0.375) / (n as f64 + 0.25))).collect()
}

/// Grid search for the `(λ₁, λ₂)` whose transformed order statistics
/// correlate best with normal scores. Combinations producing non-finite
/// values are skipped; ties keep the first grid point.
pub fn box_cox_search(ys: &[f64], grid: &BoxCoxGrid, mode: ExecMode) -> Result<BoxCoxResult> {
    if ys.len() < 3 {
        return Err(Error::InvalidInput("Box-Cox search needs at least three outcomes".into()));
    }
    let mut sorted = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scores = normal_scores(sorted.len());
    let (l1s, l2s) = grid.points();
    let best_per_l1 = map_range(l1s.len(), mode, |a| {
        let l1 = l1s[a];
        let mut best: Option<(f64, f64)> = None;
        let mut buf = vec![0.0; sorted.len()];
        for &l2 in &l2s {
            if !(sorted[0] + l2 > 0.0) {
                continue;
            }
            for (b, &y) in buf.iter_mut().zip(&sorted) {
                *b = box_cox(y, l1, l2);
            }
            if buf.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let r = pearson(&buf, &scores);
            if r.is_finite() && best.is_none_or(|(_, br)| r > br) {
                best = Some((l2, r));
            }
        }
        best
    });
    let mut best: Option<(f64, f64, f64)> = None;
    for (&l1, b) in l1s.iter().zip(&best_per_l1) {
        if let Some((l2, r)) = *b {
            if best.is_none_or(|(_, _, br)| r > br) {
                best = Some((l1, l2, r));
            }
        }
    }
    let (lambda1, lambda2, correlation) =
        best.ok_or_else(|| Error::InvalidInput("no admissible Box-Cox parameters (outcomes too negative)".into()))?;
    let t: Vec<f64> = ys.iter().map(|&y| box_cox(y, lambda1, lambda2)).collect();
    let min = t.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BoxCoxResult { lambda1, lambda2, correlation, transformed: t.into_iter().map(|v| v - min).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpQq {
    /// `(−log(1 − i/(m+1)), Z_(i))` with `Z` sorted ascending.
    pub pairs: Vec<(f64, f64)>,
    pub correlation: f64,
    /// Indices dropped because `Y^(i+1) ≤ 0`.
    pub skipped: usize,
}

/// Exponential Q-Q data for `Z^(i) = i·log(Y^(i)/Y^(i+1))`, `i ≤ ⌊N/8⌋`,
/// with `Y^(1) ≥ Y^(2) ≥ …` the descending order statistics.
pub fn exponential_qq(ys: &[f64]) -> Result<ExpQq> {
    let mut desc = ys.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let top = desc.len() / 8;
    let mut z = Vec::with_capacity(top);
    let mut skipped = 0;
    for i in 1..=top {
        let (a, b) = (desc[i - 1], desc[i]);
        if !(b > 0.0) {
            skipped += 1;
            continue;
        }
        z.push(i as f64 * (a / b).ln());
    }
    if skipped > 0 {
        log::warn!("{skipped} log-spacings skipped for nonpositive outcomes");
    }
    if z.len() < 3 {
        return Err(Error::InvalidInput("too few positive upper order statistics for a Q-Q check".into()));
    }
    z.sort_by(f64::total_cmp);
    let m = z.len() as f64;
    let theo: Vec<f64> = (1..=z.len()).map(|i| -(1.0 - i as f64 / (m + 1.0)).ln()).collect();
    let correlation = pearson(&theo, &z);
    Ok(ExpQq { pairs: theo.into_iter().zip(z).collect(), correlation, skipped })
}
