//! Numerical complex hyperbolic geometry on the unit ball.
//!
//! The crate covers the group SU(n,1) acting on the ball, the Bergman kernel
//! and its weighted reproducing constants, hyperbolic elements and their
//! axes, Poincaré series attached to a point or to a closed geodesic, and the
//! large-`k` asymptotics of the geodesic inner product `(Theta_C, Theta_C)`.
//!
//! Large powers are carried in log form ([`LogComplex`]) throughout, so
//! weights `(n+1)k` in the thousands are fine in double precision.
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod ball;
pub mod error;
pub mod geodesic;
pub mod group;
pub mod io;
pub mod linalg;
pub mod logc;
pub mod quadrature;
pub mod series;

pub use ball::{BallPoint, BoundaryPoint, Point};
pub use error::{Error, Result};
pub use geodesic::{Classification, HyperbolicDecomposition};
pub use linalg::{CMatrix, GroupElement};
pub use logc::LogComplex;
pub use series::{ElementSet, SeriesParams, SeriesResult};

/// Crate version, embedded in CLI output.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
