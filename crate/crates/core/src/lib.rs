//! Autoregressive models for time series on spheres and discretized
//! Hilbert spheres.
//!
//! Observations are points on the unit sphere of a weighted inner-product
//! space ([`hilbert`]). Differences between points are skew-symmetric
//! operators ([`skew`]), and the SAR and DSAR models ([`sar`]) fit a scalar
//! autoregression to those operators by Yule-Walker. Compositions and
//! probability densities enter through square-root maps ([`transforms`]).
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

// `!(x > 0)` is how NaN gets rejected along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hilbert;
pub mod io;
pub mod linalg;
pub mod sar;
pub mod scalar;
pub mod simulate;
pub mod skew;
pub mod transforms;

pub use error::{Error, Result};
pub use scalar::Real;

pub use sar::{Projection, Variant};

pub type AmbientVector = hilbert::AmbientVector<f64>;
pub type SpherePoint = hilbert::SpherePoint<f64>;
pub type SkewOperator = skew::SkewOperator<f64>;
pub type SarModel = sar::SarModel<f64>;
pub type Prediction = sar::Prediction<f64>;
pub type Composition = transforms::Composition<f64>;
pub type DensityGrid = transforms::DensityGrid<f64>;
pub type Axis = transforms::Axis<f64>;
pub type InnovationSpec = simulate::InnovationSpec<f64>;
pub type SimulationRun = simulate::SimulationRun<f64>;

pub type AmbientVector32 = hilbert::AmbientVector<f32>;
pub type SpherePoint32 = hilbert::SpherePoint<f32>;
pub type SkewOperator32 = skew::SkewOperator<f32>;
pub type SarModel32 = sar::SarModel<f32>;
pub type Composition32 = transforms::Composition<f32>;
pub type DensityGrid32 = transforms::DensityGrid<f32>;
