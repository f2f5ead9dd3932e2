//! Many small scatterers versus the effective medium they build.
//!
//! A desired potential `q = n A` is realised by balls of radius `a` and
//! strength `A(x_m)` placed with density `n`. The many-body field (a
//! Foldy–Lax system) is compared with the Lippmann–Schwinger solution
//! for `q` as `a -> 0`, in 3D and in 1D.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod effective;
pub mod error;
pub mod experiment;
pub mod farfield;
pub mod fields;
pub mod foldy_lax;
pub mod io;
pub mod kernel;
pub mod krylov;
pub mod oned;
pub mod partial_wave;
pub mod placement;
pub mod quad;

pub use error::{Error, Result};
