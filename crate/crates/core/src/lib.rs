//! Forward solution and source reconstruction for the one-dimensional
//! space-time fractional diffusion equation
//!
//! ```text
//! d_t^alpha (u - phi) + A^beta u = f(x) mu(t)   in (0,1) x (0,T),
//! u = 0 on the boundary,
//! ```
//!
//! where `A = -d_xx` with Dirichlet conditions. The crate provides
//!
//! * [`mlf`]: Mittag-Leffler functions and fractional integrals,
//! * [`spectral`]: the sine eigensystem, grids and `L^2` quadrature,
//! * [`forward`]: the eigenfunction-expansion solver with exact convolution weights,
//! * [`observe`]: interior observation windows, noise models and norms,
//! * [`invert`]: Levenberg-Marquardt reconstruction of `f` outside the window.

pub mod error;
pub mod forward;
pub mod invert;
pub mod mlf;
pub mod observe;
pub mod registry;
pub mod spectral;

pub use error::{Error, Result};
