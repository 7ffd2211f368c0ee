//! Numerical toolkit for matrix-weighted Lebesgue spaces.
//!
//! Self-adjoint matrix powers, matrix Muckenhoupt constants, John ellipsoid
//! fitting, modulars and Luxemburg norms, the translation / dyadic / ball
//! averaging operators, the Christ–Goldberg maximal operator, and an engine
//! that turns Kolmogorov–Riesz compactness moduli into certified ε-nets for
//! finite families of sampled vector fields.
//!
//! All computations are generic over the real scalar (`f32` or `f64`, see
//! [`Scalar`]). The `*64` aliases below fix the scalar to `f64`, which is what
//! the command-line harness and the acceptance suite use.

// `!(x > 0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compactness;
pub mod error;
pub mod field_io;
pub mod grid;
pub mod matrix;
pub mod muckenhoupt;
pub mod operators;
pub mod reference;
pub mod scalar;
pub mod spaces;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::{Scalar, C};

pub type Grid64 = grid::Grid<f64>;
pub type HermitianMatrix64 = matrix::HermitianMatrix<f64>;
pub type MatrixWeightField64 = weights::MatrixWeightField<f64>;
pub type ScalarWeightField64 = weights::ScalarWeightField<f64>;
pub type MeasureDensity64 = weights::MeasureDensity<f64>;
pub type SampledVectorField64 = spaces::SampledVectorField<f64>;
pub type ExponentField64 = spaces::ExponentField<f64>;
pub type NormFamily64 = spaces::NormFamily<f64>;
pub type FunctionFamily64 = compactness::FunctionFamily<f64>;
pub type Space64 = compactness::Space<f64>;
pub type EpsilonNet64 = compactness::EpsilonNet<f64>;

pub type Grid32 = grid::Grid<f32>;
pub type MatrixWeightField32 = weights::MatrixWeightField<f32>;
pub type SampledVectorField32 = spaces::SampledVectorField<f32>;
