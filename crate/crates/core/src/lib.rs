//! Extreme quantile and tail-mean treatment effects for continuously valued
//! treatments.
//!
//! The pipeline runs in four stages:
//!
//! 1. stabilized weights `f_T(t) / f_{T|X}(t|x)` ([`weights`]);
//! 2. a kernel-weighted counterfactual survival function at each treatment
//!    level ([`survival`]);
//! 3. tail-index estimation and extrapolation of intermediate quantiles to
//!    extreme levels, plus tail means ([`tail`]);
//! 4. ratio effects between two treatment levels with simultaneous bands over
//!    a range of tail levels ([`inference`]).
//!
//! [`tuning`] holds the bandwidth and tail-sample-size rules, [`sim`] the
//! simulation designs with analytic truths, and [`diagnostics`] the Box-Cox
//! search and exponential Q-Q heavy-tail check.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod data;
pub mod diagnostics;
mod error;
pub mod inference;
pub mod io;
pub mod kernel;
pub mod numeric;
pub mod par;
pub mod rng;
pub mod sim;
pub mod survival;
pub mod tail;
pub mod tuning;
pub mod weights;

pub use data::{AffineMap, Dataset, Observation};
pub use error::{Error, Result};
pub use kernel::{Boundary, KernelShape, KernelSpec, Smoother};
pub use par::ExecMode;
pub use rng::SeededRng;
