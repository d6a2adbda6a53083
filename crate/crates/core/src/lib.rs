//! Numerical companion for averaged restriction estimates over rotated
//! copies of a surface measure.
//!
//! A measure is a finite weighted point cloud in ℝ³. The crate builds such
//! clouds (graphs of surface profiles, the sphere, Cantor-type fractal
//! stages, explicit atoms), measures annulus masses `μ×μ{t ≤ |u−v| ≤ t(1+ε)}`
//! with a cell index, evaluates the extension transform under Haar-random
//! rotations, and reports the mixed `L⁴(L²(SO(3)))` norm against `‖f‖_{L²(μ)}`.
//! Brute-force oracles in [`oracle`] back every fast path and [`verify`]
//! bundles the acceptance suite.
//!
//! Everything numerical is generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annulus;
pub mod error;
pub mod geometry;
pub mod measure;
pub mod norms;
pub mod oracle;
pub mod oscillatory;
pub mod rng;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use rng::RngState;
pub use scalar::Real;

pub type Vec3 = geometry::Vec3<f64>;
pub type Rotation = geometry::Rotation<f64>;
pub type DiscreteMeasure = measure::DiscreteMeasure<f64>;
pub type SurfaceProfile = measure::SurfaceProfile<f64>;
pub type FractalMeasure = measure::FractalMeasure<f64>;
pub type AnnulusQuery = annulus::AnnulusQuery<f64>;
pub type CellIndex = annulus::CellIndex<f64>;
pub type ExtensionSample = oscillatory::ExtensionSample<f64>;
