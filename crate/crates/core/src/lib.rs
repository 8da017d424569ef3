//! Special orthonormal frames on metrics of constant sectional curvature −1.
//!
//! Given a coframe `ω_i` and connection forms `ω_ij` sampled on a rectangular
//! grid, this crate certifies the structure equations, integrates the frame
//! rotation that makes `v_1` geodesic and `v_2..v_n` horocyclic, recovers the
//! closed 1-form `θ_1` dual to `v_1`, and turns it into conservation laws.
//!
//! Built-in models: Camassa–Holm (with the η-series hierarchy), sine-Gordon
//! kinks and the intrinsic generalized sine-Gordon system in `n` dimensions.

// NaN must fail every tolerance check, hence `!(x <= tol)`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod app;
pub mod config;
pub mod conservation;
pub mod convergence;
pub mod error;
pub mod forms;
pub mod frames;
pub mod grid;
pub mod hierarchy;
pub mod lie;
pub mod models;
pub mod pssfield;
pub mod rotation;
mod sweep;

pub use error::{Error, Result};
pub use forms::{ConnectionField, OneFormField, TwoFormField};
pub use frames::{FrameData, FrameRotationField};
pub use grid::{GridChart, Norms, ScalarField};
