// Argument checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod inequalities;
pub mod noise;
pub mod nonlinearity;
pub mod quadrature;
pub mod sde;
pub mod spectral;

pub use error::{Error, Result};
