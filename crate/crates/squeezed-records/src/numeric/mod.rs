//! Numerical building blocks: ODE integration, quadrature, special functions.

pub mod ode;
pub mod quad;
pub mod special;

pub use ode::{dopri5, OdeOptions, OdeStats};
pub use quad::{
    gauss_legendre, gauss_legendre_on, integrate, integrate_complex, QuadOptions, QuadResult,
};
pub use special::{diff_of_products, sine_integral};
