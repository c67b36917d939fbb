//! Long-range voter model laboratory: heavy-tailed step laws, backward
//! coalescing ancestral lines, the equilibrium ±1 field they induce, and the
//! analytic limit objects the rescaled field is compared against.
//!
//! The crate is `no_std` with `alloc`. The default `std` feature only adds the
//! FFT-backed kernel convolution in [`heatkernel`].
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analytic;
pub mod coalesce;
pub mod error;
pub mod field;
pub mod heatkernel;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod steplaw;
pub mod unionfind;

pub use analytic::{AnalyticConstants, LimitField, SpaceTimePoint};
pub use coalesce::{ComponentLabeling, Site};
pub use error::{Error, Result};
pub use field::SpaceTimeField;
pub use stats::ExperimentResult;
pub use steplaw::{SlowlyVarying, StepLaw};
