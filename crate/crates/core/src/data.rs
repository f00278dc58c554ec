//! Observations, datasets and treatment rescaling.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One unit: treatment level, covariates, outcome and an optional
/// precomputed stabilized weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: f64,
    pub weight: Option<f64>,
}

impl Observation {
    pub fn new(t: f64, x: Vec<f64>, y: f64) -> Self {
        Self { t, x, y, weight: None }
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.weight = Some(w);
        self
    }
}

/// Validated, immutable sample of observations.
///
/// All observations share the covariate dimension, and either all or none
/// carry a weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    observations: Vec<Observation>,
    r: usize,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        let first = observations
            .first()
            .ok_or_else(|| Error::InvalidInput("dataset must contain at least one observation".into()))?;
        let r = first.x.len();
        let weighted = first.weight.is_some();
        for (i, o) in observations.iter().enumerate() {
            if !o.t.is_finite() || !o.y.is_finite() || o.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite value at observation {i}")));
            }
            if o.x.len() != r {
                return Err(Error::InvalidInput(format!(
                    "observation {i} has {} covariates, expected {r}",
                    o.x.len()
                )));
            }
            match o.weight {
                Some(w) if !(w > 0.0 && w.is_finite()) => {
                    return Err(Error::NonPositiveWeight { index: i, value: w })
                }
                Some(_) if !weighted => {
                    return Err(Error::InvalidInput("either all or no observations may carry a weight".into()))
                }
                None if weighted => {
                    return Err(Error::InvalidInput("either all or no observations may carry a weight".into()))
                }
                _ => {}
            }
        }
        Ok(Self { observations, r })
    }

    /// Convenience constructor for covariate-free, unweighted data.
    pub fn from_ty(t: &[f64], y: &[f64]) -> Result<Self> {
        if t.len() != y.len() {
            return Err(Error::InvalidInput("t and y lengths differ".into()));
        }
        Self::new(t.iter().zip(y).map(|(&t, &y)| Observation::new(t, Vec::new(), y)).collect())
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn has_weights(&self) -> bool {
        self.observations[0].weight.is_some()
    }

    pub fn treatments(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.t).collect()
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.y).collect()
    }

    /// Same treatments and covariates, outcomes mapped through `f`.
    pub fn map_outcomes(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.observations
                .iter()
                .map(|o| Observation { y: f(o.y), ..o.clone() })
                .collect(),
        )
    }

    /// Drops any precomputed weights.
    pub fn without_weights(&self) -> Self {
        let observations = self
            .observations
            .iter()
            .map(|o| Observation { weight: None, ..o.clone() })
            .collect();
        Self { observations, r: self.r }
    }

    /// Attaches one weight per observation.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.n() {
            return Err(Error::InvalidInput("weight count does not match observation count".into()));
        }
        Self::new(
            self.observations
                .iter()
                .zip(weights)
                .map(|(o, &w)| Observation { weight: Some(w), ..o.clone() })
                .collect(),
        )
    }
}

/// Affine map `t ↦ (t - offset) / scale` between original and unit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub offset: f64,
    pub scale: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { offset: 0.0, scale: 1.0 };

    pub fn to_unit(&self, t: f64) -> f64 {
        (t - self.offset) / self.scale
    }

    pub fn to_original(&self, u: f64) -> f64 {
        self.offset + u * self.scale
    }
}

/// Maps treatments affinely onto `[0, 1]`.
pub fn rescale_treatment(ds: &Dataset) -> Result<(Dataset, AffineMap)> {
    let (lo, hi) = ds
        .observations
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), o| (lo.min(o.t), hi.max(o.t)));
    if hi <= lo {
        return Err(Error::NoTreatmentVariation);
    }
    let map = AffineMap { offset: lo, scale: hi - lo };
    if lo == 0.0 && hi == 1.0 {
        return Ok((ds.clone(), map));
    }
    let observations = ds
        .observations
        .iter()
        .map(|o| Observation { t: map.to_unit(o.t), ..o.clone() })
        .collect();
    Ok((Dataset { observations, r: ds.r }, map))
}
