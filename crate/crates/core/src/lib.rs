#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certify;
pub mod disc_solver;
pub mod error;
pub mod morawetz;
pub mod params;
pub mod quadrature;
pub mod resonances;
pub mod specfun;

pub use error::{Error, Result};
pub use params::Params;
