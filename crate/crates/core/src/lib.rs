//! Desk-scale numerical laboratory for periodic linear cocycles.
//!
//! The crate implements and verifies four families of explicit matrix
//! constructions from smooth dynamics:
//!
//! * [`cocycle`] — periodic linear cocycles in dimensions 2 and 3:
//!   return maps, boundedness constants, n-dominated splittings, quotients
//!   and the sub/quotient domination dichotomy.
//! * [`paths`] — one-parameter rotation perturbations of a cocycle that
//!   trade a small eigenspace angle for a complex eigenvalue pair, with all
//!   quantitative bounds (rotation Lipschitz constant, path diameter,
//!   eigenvalue monotonicity, determinant invariance).
//! * [`transitions`] — transition products `D_n` built from a diagonal
//!   return map and a swap matrix, whose stable block is a homothety.
//! * [`unfolding`] — a piecewise-affine local model of a degenerate
//!   homoclinic tangency: its bifurcation parameter, the period-(n+N)
//!   orbit it creates, segment contraction rates witnessing a
//!   heterodimensional cycle, and the renormalization / reduction pipeline
//!   that brings a return differential into antidiagonal normal form.
//!
//! [`sampling`] provides the seeded random instance generators used by the
//! verification suites, and [`rational`] an exact-arithmetic mirror of the
//! reduction pipeline for the symbolic zero checks.

#![allow(clippy::needless_range_loop)]

pub mod cocycle;
pub mod matrix;
pub mod paths;
pub mod rational;
pub mod sampling;
pub mod spectrum;
pub mod transitions;
pub mod unfolding;

pub use cocycle::{
    eigenspace_angle, Cocycle2, Cocycle3, CocycleError, DichotomyReport, LineBundle,
    PeriodicCocycle, Splitting2, Splitting3,
};
pub use matrix::{Mat2, Mat3, Vec2, Vec3};
pub use paths::{CocyclePath, PathContractReport, PathError, PathTrace};
pub use spectrum::{spectrum2, spectrum3, SpectralData};
pub use transitions::{HomothetyReport, NonPowerReport, TransitionSystem};
pub use unfolding::{CycleReport, ModelReport, Trajectory, UnfoldingError, UnfoldingModel};
