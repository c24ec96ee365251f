//! Bidiagonal factorizations `A = Q B Pᵀ` and their low-rank updates.
//!
//! Dense Householder and Golub–Kahan–Lanczos reductions, a randomized
//! variant, truncation error formulas and SVD comparison bounds, two
//! rank-1 update schemes (compact Householder and Givens bulge chasing),
//! and a rank-r streaming tracker built on the Givens update.

pub mod bgu;
pub mod bhu;
pub mod bounds;
pub mod cli;
pub mod dense;
pub mod error;
pub mod gkb;
pub mod house;
pub mod io;
pub mod jacobi;
pub mod matrix;
pub mod profile;
pub mod rbd;
pub mod synth;
pub mod tracking;
pub mod truncation;

pub use error::{Error, Result};
pub use matrix::{BidiagonalMatrix, DenseMatrix, OrthogonalFactor, SvdTriple};
