//! Spectra of self-adjoint discrete Sturm-Liouville problems
//!
//! ```text
//! -∇(f_n Δy_n) + q_n y_n = λ w_n y_n,   n = 1..N
//! A (y_0, f_0 Δy_0)^T + B (y_N, f_N Δy_N)^T = 0
//! ```
//!
//! The crate builds the characteristic polynomial from the two fundamental
//! solutions, predicts the eigenvalue count from a 2x2 rank, finds every
//! eigenvalue, classifies boundary conditions on their manifold, decides
//! membership in the sets where the count drops, and traces eigenvalue
//! branches along one-parameter families.
//!
//! The model, manifold and spectral layers are generic over [`Scalar`]
//! (`f32` or `f64`). The set classification, branch tracing, oracles and
//! CLI work in `f64`.

// index loops read better than iterator chains over 2x2 and 2x4 matrices
#![allow(clippy::needless_range_loop)]

pub mod bc_manifold;
pub mod branch_lab;
pub mod cli_io;
pub mod core_model;
pub mod linalg;
pub mod reference_oracle;
pub mod scalar;
pub mod singular_sets;
pub mod spectral_engine;
pub mod tolerances;

pub use scalar::Scalar;
pub use tolerances::Tolerances;

pub use bc_manifold::{CanonicalForm, Chart, ChartCoordinates};
pub use core_model::{BoundaryCondition, Equation, ModelError, Problem};
pub use spectral_engine::{ComplexPoly, FundamentalSolutions, RealPoly, Spectrum};

pub type Equation64 = Equation<f64>;
pub type Equation32 = Equation<f32>;
pub type BoundaryCondition64 = BoundaryCondition<f64>;
pub type BoundaryCondition32 = BoundaryCondition<f32>;
pub type Problem64 = Problem<f64>;
pub type Problem32 = Problem<f32>;
pub type Spectrum64 = Spectrum<f64>;
pub type Spectrum32 = Spectrum<f32>;
pub type ComplexPoly64 = ComplexPoly<f64>;
pub type RealPoly64 = RealPoly<f64>;
pub type CanonicalForm64 = CanonicalForm<f64>;
pub type ChartCoordinates64 = ChartCoordinates<f64>;
