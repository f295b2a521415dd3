//! Numerical toolkit for planar sigma-harmonic mappings: Dirichlet and
//! periodic cell-problem solvers for div(sigma grad u) = 0 with possibly
//! non-symmetric uniformly elliptic coefficients, stream functions and
//! Beltrami coefficients, dilatation and drift fields, and quantitative
//! estimators (BMO, Muckenhoupt, Harnack) with built-in analytic cases.

pub mod analysis;
pub mod cases;
pub mod coeff;
pub mod config;
pub mod conjugate;
pub mod dilatation;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod pipeline;
pub mod report;
pub mod solve;

pub use error::{Error, Result};
