//! Stabilized weights `π₀(t, x) = f_T(t) / f_{T|X}(t|x)`.
//!
//! Three sources are supported: weights carried by the dataset, a kernel
//! density ratio estimate, and the analytic weights of the simulation design
//! (see [`crate::sim::oracle_weights`]).

use serde::{Deserialize, Serialize};

use crate::numeric::sample_variance;
use crate::par::{map_range, ExecMode};
use crate::{Dataset, Error, KernelSpec, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    UserSupplied,
    #[default]
    KernelRatio,
    Oracle,
}

pub const DEFAULT_ETA: (f64, f64) = (0.05, 20.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightModel {
    pub source: WeightSource,
    pub h_t: f64,
    pub h_x: Vec<f64>,
    pub eta_lo: f64,
    pub eta_hi: f64,
}

/// `1.06 · sd · N^{-1/(4+r)}`.
pub fn rule_of_thumb(values: &[f64], r: usize) -> f64 {
    1.06 * sample_variance(values).sqrt() * (values.len() as f64).powf(-1.0 / (4.0 + r as f64))
}

impl WeightModel {
    pub fn new(source: WeightSource, h_t: f64, h_x: Vec<f64>, eta_lo: f64, eta_hi: f64) -> Result<Self> {
        if !(eta_lo > 0.0 && eta_lo <= eta_hi && eta_hi.is_finite()) {
            return Err(Error::InvalidInput(format!("clip bounds must satisfy 0 < lo ≤ hi < ∞, got ({eta_lo}, {eta_hi})")));
        }
        if !(h_t > 0.0) || h_x.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidInput("bandwidths must be positive".into()));
        }
        Ok(Self { source, h_t, h_x, eta_lo, eta_hi })
    }

    /// Kernel-ratio model with rule-of-thumb bandwidths for every coordinate.
    pub fn kernel_ratio(ds: &Dataset) -> Result<Self> {
        let r = ds.r();
        let n = ds.n();
        if n < 2 {
            return Err(Error::InvalidInput("need at least two observations".into()));
        }
        let h_t = rule_of_thumb(&ds.treatments(), r);
        let h_x = (0..r)
            .map(|j| {
                let col: Vec<f64> = ds.observations().iter().map(|o| o.x[j]).collect();
                rule_of_thumb(&col, r)
            })
            .collect();
        let (lo, hi) = DEFAULT_ETA;
        Self::new(WeightSource::KernelRatio, h_t, h_x, lo, hi)
            .map_err(|_| Error::InvalidInput("a covariate or the treatment is constant".into()))
    }
}

/// `f̂_{T,h}(t) = N⁻¹ Σ h⁻¹ K((T_i - t)/h)`.
pub fn estimate_f_t(ds: &Dataset, kernel: &KernelSpec, h: f64, t: f64) -> f64 {
    let obs = ds.observations();
    obs.iter().map(|o| kernel.eval((o.t - t) / h)).sum::<f64>() / (h * obs.len() as f64)
}

/// Density-ratio weights, clipped to `[eta_lo, eta_hi]` and rescaled to mean 1.
pub fn estimate_weights_kernel_ratio(ds: &Dataset, model: &WeightModel, kernel: &KernelSpec, mode: ExecMode) -> Result<Vec<f64>> {
    if model.source != WeightSource::KernelRatio {
        return Err(Error::InvalidInput("weight model is not a kernel ratio".into()));
    }
    if model.h_x.len() != ds.r() {
        return Err(Error::InvalidInput("one covariate bandwidth per covariate required".into()));
    }
    let obs = ds.observations();
    let n = obs.len() as f64;
    let raw: Vec<Result<f64>> = map_range(obs.len(), mode, |i| {
        let oi = &obs[i];
        let (mut f_t, mut joint, mut marg) = (0.0, 0.0, 0.0);
        for oj in obs {
            let kt = kernel.eval((oj.t - oi.t) / model.h_t);
            f_t += kt;
            let kx: f64 = oi.x.iter().zip(&oj.x).zip(&model.h_x).map(|((a, b), h)| kernel.eval((b - a) / h)).product();
            marg += kx;
            joint += kx * kt;
        }
        let f_t = f_t / (n * model.h_t);
        let cond = joint / marg / model.h_t;
        if !(cond > f64::EPSILON) || !(marg > 0.0) {
            return Err(Error::DensityUnderflow(i));
        }
        Ok((f_t / cond).clamp(model.eta_lo, model.eta_hi))
    });
    let w = raw.into_iter().collect::<Result<Vec<_>>>()?;
    let mean = w.iter().sum::<f64>() / n;
    Ok(w.into_iter().map(|v| v / mean).collect())
}

/// User-supplied weights, validated.
pub fn load_weights(ds: &Dataset) -> Result<Vec<f64>> {
    ds.observations()
        .iter()
        .enumerate()
        .map(|(i, o)| match o.weight {
            Some(w) if w > 0.0 && w.is_finite() => Ok(w),
            Some(w) => Err(Error::NonPositiveWeight { index: i, value: w }),
            None => Err(Error::InvalidInput(format!("observation {i} carries no weight"))),
        })
        .collect()
}

/// Weights according to `model.source`.
pub fn resolve_weights(ds: &Dataset, model: &WeightModel, kernel: &KernelSpec, mode: ExecMode) -> Result<Vec<f64>> {
    match model.source {
        WeightSource::UserSupplied => load_weights(ds),
        WeightSource::KernelRatio => estimate_weights_kernel_ratio(ds, model, kernel, mode),
        WeightSource::Oracle => crate::sim::oracle_weights(ds),
    }
}
