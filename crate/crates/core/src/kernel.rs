//! Compact-support kernels and the bandwidth-scaled smoother built on them.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelShape {
    #[default]
    Epanechnikov,
    Biweight,
    Triangular,
}

impl std::str::FromStr for KernelShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(Self::Epanechnikov),
            "biweight" | "quartic" => Ok(Self::Biweight),
            "triangular" | "tri" => Ok(Self::Triangular),
            other => Err(Error::InvalidInput(format!("unknown kernel `{other}`"))),
        }
    }
}

impl std::fmt::Display for KernelShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Epanechnikov => "epanechnikov",
            Self::Biweight => "biweight",
            Self::Triangular => "triangular",
        })
    }
}

/// Symmetric kernel on `[-1, 1]` integrating to one, with its moments
/// `kappa21 = ∫u²K` and `kappa02 = ∫K²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub shape: KernelShape,
    pub kappa21: f64,
    pub kappa02: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::new(KernelShape::default())
    }
}

impl KernelSpec {
    pub fn new(shape: KernelShape) -> Self {
        let (kappa21, kappa02) = kernel_moments(shape);
        Self { shape, kappa21, kappa02 }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        kernel_eval(self.shape, u)
    }
}

#[inline]
pub fn kernel_eval(shape: KernelShape, u: f64) -> f64 {
    let a = u.abs();
    if a > 1.0 {
        return 0.0;
    }
    match shape {
        KernelShape::Epanechnikov => 0.75 * (1.0 - a * a),
        KernelShape::Biweight => {
            let s = 1.0 - a * a;
            15.0 / 16.0 * s * s
        }
        KernelShape::Triangular => 1.0 - a,
    }
}

/// Closed-form `(∫u²K, ∫K²)`.
pub fn kernel_moments(shape: KernelShape) -> (f64, f64) {
    match shape {
        KernelShape::Epanechnikov => (0.2, 0.6),
        KernelShape::Biweight => (1.0 / 7.0, 5.0 / 7.0),
        KernelShape::Triangular => (1.0 / 6.0, 2.0 / 3.0),
    }
}

/// Edge handling for treatments supported on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Adds mirror images of every treatment about 0 and 1, which restores
    /// the mass lost outside the support for `t` within `h` of an edge.
    #[default]
    Reflect,
    Raw,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reflect" => Ok(Self::Reflect),
            "raw" => Ok(Self::Raw),
            other => Err(Error::InvalidInput(format!("unknown boundary mode `{other}`"))),
        }
    }
}

/// `K_h(s - t) = h⁻¹ K((s - t)/h)` with optional boundary reflection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoother {
    pub kernel: KernelSpec,
    pub h: f64,
    pub boundary: Boundary,
}

impl Smoother {
    pub fn new(kernel: KernelSpec, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("bandwidth must be positive, got {h}")));
        }
        Ok(Self { kernel, h, boundary: Boundary::Reflect })
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// Normalized kernel weight of a treatment `s` at evaluation point `t`.
    #[inline]
    pub fn weight(&self, s: f64, t: f64) -> f64 {
        let inv = 1.0 / self.h;
        let mut k = self.kernel.eval((s - t) * inv);
        if self.boundary == Boundary::Reflect {
            k += self.kernel.eval((-s - t) * inv);
            k += self.kernel.eval((2.0 - s - t) * inv);
        }
        k * inv
    }
}
