//! Numerical laboratory for multilinear Coifman-Meyer operators on Hardy spaces.
//!
//! Everything lives on a periodic grid over `[-L, L)^n`, `n in {1, 2}`. The modules
//! build on each other in order: [`grid`] (sampling, transforms, quadrature),
//! [`symbols`] (multipliers and their diagnostics), [`operators`] (general, product
//! and mixed application), [`atoms`], [`maximal`], and [`verify`] (the experiment
//! harness that turns each estimate into a measured ratio).

pub mod atoms;
pub mod error;
pub mod grid;
pub mod maximal;
pub mod operators;
pub mod stencil;
pub mod sum;
pub mod symbols;
pub mod verify;

pub use error::{Error, Result};
