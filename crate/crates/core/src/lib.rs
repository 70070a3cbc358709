//! Best uniform rational approximation on discrete grids.
//!
//! * [`basis`]: Chebyshev bases on boxes and [`basis::RationalApprox`].
//! * [`lp`]: the dense simplex engine behind both optimizers.
//! * [`diffcorr`]: differential correction.
//! * [`bisection`]: quasiconvex bisection with an optional denominator cap.
//! * [`aaa`]: greedy barycentric (AAA) fitting.
//! * [`nn`]: a one-hidden-layer network with ReLU or rational activations.
//! * [`data`]: target functions, grids and grid files.

pub mod aaa;
pub mod basis;
pub mod bisection;
pub mod data;
mod design;
pub mod diffcorr;
pub mod error;
pub mod lp;
pub mod nn;

pub use error::{Error, Result};
