//! Schrödinger-picture evolution of a self-interacting massless scalar field
//! through inflation and radiation domination, with diagnostics for the
//! formation of redundant records (wavefunction branches).

// `!(x > 0.0)` is used deliberately in validation so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cosmo;
pub mod cubic;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod localized;
pub mod numeric;
pub mod records;
pub mod scenario;
pub mod toy;

pub use error::{Error, Result};
