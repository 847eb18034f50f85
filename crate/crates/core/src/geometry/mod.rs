//! Interface geometry, Carleman regions and covering constructions.

mod audit;
mod chart;
mod covering;
mod domain;
mod interface;
mod regions;
pub mod scaling;
mod spline;

pub use audit::{audit_lemmas, distance_to_graph, random_admissible, LemmaAudit, LemmaCheck};
pub use chart::{InterfaceChart, LocalGraph};
pub use covering::{
    ball_chain, ball_chain_in, cube_cover, sample_interface_in_d, vitali_cover, BallChain, Cube, CubeCover, VitaliCover,
};
pub use domain::{Aabb, DomainSpec, Polygon, Subdomain};
pub use interface::{Interface, Side};
pub use regions::{
    bounding_radius_u3, eval_z, propagation_scales, safe_ball_radius_u2, u1_clearance, PropagationScales, Region,
    RegionKind, ThreeRegionParams,
};
pub use spline::CubicSpline;

use nalgebra::Point2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("point ({x:.6}, {y:.6}) lies outside the chart cylinder")]
    OutOfChart { x: f64, y: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("covering construction failed: {0}")]
    CoverFailure(String),
    #[error("no path between ({:.4}, {:.4}) and ({:.4}, {:.4}) inside the enlarged domain", from.x, from.y, to.x, to.y)]
    PathNotFound { from: Point2<f64>, to: Point2<f64> },
    #[error("geometry infeasible: {0}")]
    GeometryInfeasible(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GeometryError {
    GeometryError::InvalidParams(msg.into())
}
