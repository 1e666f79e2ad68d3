//! Numerical laboratory for martingale states viewed as vacuum states of
//! the Black-Scholes and Merton-Garman pricing Hamiltonians.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`] and [`params`]: truncated uniform grids, sampled fields,
//!   trapezoid quadrature, and the market parameter records.
//! - [`operators`]: banded finite-difference operators, the two
//!   Hamiltonians, composition and commutators.
//! - [`martingale`]: annihilation residuals, the volatility constraint and
//!   its root, broken-generator reports, commutator expectations.
//! - [`potentials`]: truncated field-space potentials and their vacua.
//! - [`pricing`]: implicit time evolution `exp(-T H)` with a registry of
//!   stepping schemes, and the closed-form call oracle.

pub mod error;
pub mod grid;
pub mod martingale;
pub mod operators;
pub mod params;
pub mod potentials;
pub mod pricing;
pub mod roots;
pub mod solve;

pub use error::{Error, ErrorKind, Result};
pub use grid::{inner_product, Field, Grid, Grid1D, Grid2D};
pub use operators::{BandedOperator, Offset};
pub use params::{BsParams, MgParams};
