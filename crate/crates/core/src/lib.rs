//! Quantitative unique continuation for divergence-form elliptic equations
//! whose leading coefficients jump across a C² interface.
//!
//! The crate is organised along the pipeline it implements:
//!
//! - [`geometry`]: the interface and its flattening charts, the three
//!   Carleman regions `U1 ⊂ U3`, `U2 ⊂ U3` with their scaling, and the
//!   covering constructions (Vitali cover, chain of balls, cube cover).
//! - [`solver`]: an interface-fitted P1 finite-element solver for
//!   `L_γ u = f + ∇·F` with exact-solution oracles.
//! - [`estimator`]: region-restricted norms and the checks/fits of the
//!   three-region, three-ball and propagation inequalities.
//! - [`experiments`]: global propagation, Cauchy stability, positive-measure
//!   propagation, quantitative Runge approximation and the extremal
//!   smallness sweep.
//! - [`config`]: the JSON configuration document shared by the CLI.

pub mod config;
pub mod estimator;
pub mod experiments;
pub mod geometry;
pub mod quadrature;
pub mod rng;
pub mod solver;

pub use nalgebra::{Matrix2, Point2, Vector2};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Spatial dimension of every discrete instantiation in this crate.
pub const DIM: usize = 2;

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}
