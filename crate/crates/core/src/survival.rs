//! Kernel-weighted counterfactual survival function
//!
//! ```text
//! F̄_{t,h}(y) = Σ π_i 1(Y_i > y) K_h(T_i - t) / Σ π_i K_h(T_i - t)
//! ```
//!
//! At a fixed `(t, h)` the estimator is a right-continuous step function that
//! jumps only at outcomes inside the kernel window. [`LocalDistribution`]
//! materializes it once (sorted outcomes and tail sums), after which survival
//! lookups and quantile inversion are binary searches.

use crate::{Dataset, Error, Result, Smoother};

/// The weighted step survival function at one treatment level.
#[derive(Debug, Clone)]
pub struct LocalDistribution {
    t: f64,
    h: f64,
    /// Distinct in-window outcomes, ascending.
    ys: Vec<f64>,
    /// `surv[j] = F̄(ys[j])`, the weight strictly above `ys[j]` over the total.
    surv: Vec<f64>,
    total_weight: f64,
}

impl LocalDistribution {
    pub fn new(ds: &Dataset, weights: &[f64], smoother: &Smoother, t: f64) -> Result<Self> {
        let obs = ds.observations();
        if weights.len() != obs.len() {
            return Err(Error::InvalidInput("weight count does not match observation count".into()));
        }
        let mut pts: Vec<(f64, f64)> = obs
            .iter()
            .zip(weights)
            .filter_map(|(o, &w)| {
                let k = smoother.weight(o.t, t);
                (k > 0.0).then_some((o.y, w * k))
            })
            .collect();
        Self::from_weighted(&mut pts, t, smoother.h)
    }

    /// Builds from `(outcome, weight)` pairs; pairs are sorted in place.
    pub fn from_weighted(pts: &mut [(f64, f64)], t: f64, h: f64) -> Result<Self> {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ys: Vec<f64> = Vec::with_capacity(pts.len());
        let mut mass: Vec<f64> = Vec::with_capacity(pts.len());
        for &(y, w) in pts.iter() {
            match ys.last() {
                Some(&last) if last == y => *mass.last_mut().unwrap() += w,
                _ => {
                    ys.push(y);
                    mass.push(w);
                }
            }
        }
        // Tail sums accumulated from the top keep small survival values exact.
        let mut surv = vec![0.0; ys.len()];
        let mut above = 0.0;
        for j in (0..ys.len()).rev() {
            surv[j] = above;
            above += mass[j];
        }
        let total_weight = above;
        if !(total_weight > f64::MIN_POSITIVE) || !total_weight.is_finite() {
            return Err(Error::EmptyWindow { t, h });
        }
        for s in &mut surv {
            *s /= total_weight;
        }
        Ok(Self { t, h, ys, surv, total_weight })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Distinct in-window outcomes, ascending.
    pub fn support(&self) -> &[f64] {
        &self.ys
    }

    /// Survival values at [`Self::support`].
    pub fn survival_values(&self) -> &[f64] {
        &self.surv
    }

    pub fn survival(&self, y: f64) -> f64 {
        // number of support points ≤ y
        let idx = self.ys.partition_point(|&v| v <= y);
        if idx == 0 {
            1.0
        } else {
            self.surv[idx - 1]
        }
    }

    /// Generalized inverse `inf{z : F̄(z) ≤ 1 - alpha}`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::AlphaNotPositive);
        }
        if !(alpha < 1.0) {
            return Err(Error::LevelOutOfRange(alpha));
        }
        let target = 1.0 - alpha;
        let idx = self.surv.partition_point(|&s| s > target);
        // surv ends with 0, so idx is always in range
        Ok(self.ys[idx])
    }

    /// Smallest strictly positive survival step, i.e. the most extreme level
    /// `1 - step` the data can still resolve.
    pub fn smallest_step(&self) -> f64 {
        self.surv.iter().rev().copied().find(|&s| s > 0.0).unwrap_or(0.0)
    }
}

/// `F̄_{t,h}(y)` at a single threshold.
pub fn survival_at(ds: &Dataset, weights: &[f64], smoother: &Smoother, t: f64, y: f64) -> Result<f64> {
    Ok(LocalDistribution::new(ds, weights, smoother, t)?.survival(y))
}

/// Survival estimates over a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub t: f64,
    pub h: f64,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

/// [`survival_at`] over a strictly increasing grid, sharing one data pass.
pub fn survival_curve(ds: &Dataset, weights: &[f64], smoother: &Smoother, t: f64, ys: &[f64]) -> Result<SurvivalCurve> {
    if ys.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("threshold grid must be strictly increasing".into()));
    }
    let local = LocalDistribution::new(ds, weights, smoother, t)?;
    Ok(SurvivalCurve {
        t,
        h: smoother.h,
        ys: ys.to_vec(),
        values: ys.iter().map(|&y| local.survival(y)).collect(),
    })
}

/// Kernel density estimate `f̂_T(t) = N⁻¹ Σ K_h(T_i - t)`.
pub fn density_at(ds: &Dataset, smoother: &Smoother, t: f64) -> f64 {
    let obs = ds.observations();
    obs.iter().map(|o| smoother.weight(o.t, t)).sum::<f64>() / obs.len() as f64
}
