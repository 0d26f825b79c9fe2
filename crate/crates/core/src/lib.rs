//! Analysis of strictly hyperbolic quasi-linear systems `A(u)u_x + B(u)u_y = 0`
//! that need not be in evolution form.
//!
//! The crate is organised bottom-up:
//!
//! - [`expr`]: expression parsing and forward-mode differentiation;
//! - [`pencil`]: the characteristic pencil `det(αB − βA)` and its angle fan;
//! - [`richness`]: diagonal systems in Riemann invariants, the compatibility
//!   conditions on speeds and on angles, and the integrating potentials `G_j`;
//! - [`fields`]: solution fields of a diagonal system (analytic, gridded,
//!   simple waves);
//! - [`riccati`]: characteristic tracing and the Riccati blow-up analysis;
//! - [`conservation`]: verification of conservation-law form;
//! - [`geoflow`]: the conformal geodesic flow with a cubic integral;
//! - [`analysis`]: the named analysis registry used by the command line tool.

pub mod analysis;
pub mod conservation;
pub mod error;
pub mod expr;
pub mod fields;
pub mod geoflow;
pub mod pencil;
pub mod quadrature;
pub mod riccati;
pub mod richness;
pub mod sampling;

pub use error::{Error, Result};
