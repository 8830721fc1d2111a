#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Expansion of sampled volumes in prolate spheroidal wavefunctions
//! bandlimited to a ball, with error budgets for the approximation.

mod accum;
pub mod approx;
pub mod basis;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod quadrature;
pub mod radial;
pub mod specfun;

pub use error::{Error, Result};
