use std::sync::Arc;

use nalgebra::{Point2, Vector2};
use serde::Serialize;

use super::Result;
use crate::geometry::{eval_z, GeometryError, InterfaceChart, Side, ThreeRegionParams};
use crate::quadrature::{barycentric_point, DEGREE5};
use crate::solver::{assemble_load, slab_mesh, star_mesh, DirichletSolver, DiscreteField, Mesh, PiecewiseCoefficients};

const BOUNDARY_SAMPLES: usize = 720;

/// Region on which the inhomogeneous problem is lifted.
#[derive(Debug, Clone)]
pub enum LiftRegion {
    /// Disc whose lower half is the `−` side.
    Disc { center: Point2<f64>, radius: f64 },
    /// Preimage of `θU₃` under the chart flattening.
    U3Preimage { params: ThreeRegionParams, chart: InterfaceChart },
}

impl LiftRegion {
    /// Mesh of the region with elements tagged by side of the interface.
    pub fn mesh(&self, spacing: f64) -> Result<Mesh> {
        match self {
            LiftRegion::Disc { center, radius } => {
                let c = *center;
                Ok(star_mesh(c, |_| *radius, spacing, |p| p, |p| if p.y > c.y { Side::Plus } else { Side::Minus })?)
            }
            LiftRegion::U3Preimage { params, chart } => {
                params.validate()?;
                let t = params.theta;
                let (y_lo, y_hi) = (t * params.y_floor(), t * params.r1 / params.a());
                // θU₃ = {|x| ≤ w(y)} with w² = 2δθ² (z(0, y/θ) + 4R₂)
                let half = |y: f64| {
                    let z = eval_z(params, Point2::new(0.0, y / t));
                    t * (2.0 * params.delta * (z + 4.0 * params.r2)).max(0.0).sqrt()
                };
                for i in 0..=BOUNDARY_SAMPLES {
                    let y = y_lo + (y_hi - y_lo) * i as f64 / BOUNDARY_SAMPLES as f64;
                    let w = half(y);
                    chart.unflatten(Point2::new(-w, y))?;
                    chart.unflatten(Point2::new(w, y))?;
                }
                // validated above: every mesh node lies inside the chart cylinder
                let map = |q: Point2<f64>| chart.to_global(Point2::new(q.x, q.y + chart.psi(q.x)));
                let side = |q: Point2<f64>| if q.y > 0.0 { Side::Plus } else { Side::Minus };
                let width = |y: f64| {
                    let w = half(y);
                    (-w, w)
                };
                Ok(slab_mesh(y_lo, y_hi, width, &[0.0], spacing, map, side)?)
            }
        }
    }
}

pub type ScalarData<'a> = &'a (dyn Fn(Point2<f64>) -> f64 + Sync);
pub type VectorData<'a> = &'a (dyn Fn(Point2<f64>) -> Vector2<f64> + Sync);

#[derive(Debug, Clone, Serialize)]
pub struct LiftReport {
    #[serde(skip)]
    pub field: DiscreteField,
    /// `‖u₀‖_{L²}` over the region.
    pub u0_norm: f64,
    /// `‖f‖_{L²} + ‖F‖_{L²}` over the region.
    pub data_norm: f64,
    /// `‖u₀‖ / (‖f‖ + ‖F‖)`, zero for zero data.
    pub ratio: f64,
    pub n_triangles: usize,
}

fn data_norms(mesh: &Mesh, f: Option<ScalarData>, big_f: Option<VectorData>) -> (f64, f64) {
    let (mut sf, mut sv) = (0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let v = mesh.vertices(t);
        let area = mesh.area(t);
        for (b, w) in DEGREE5.points.iter().zip(DEGREE5.weights) {
            let p = barycentric_point(&v, b);
            sf += w * area * f.map_or(0.0, |f| f(p).powi(2));
            sv += w * area * big_f.map_or(0.0, |g| g(p).norm_squared());
        }
    }
    (sf.sqrt(), sv.sqrt())
}

/// Solves `L u₀ = f + ∇·F` on the region with `u₀ = 0` on its boundary.
pub fn lift_inhomogeneous(
    region: &LiftRegion,
    coeffs: &PiecewiseCoefficients,
    f: Option<ScalarData>,
    big_f: Option<VectorData>,
    spacing: f64,
) -> Result<LiftReport> {
    let mesh = Arc::new(region.mesh(spacing)?);
    if mesh.total_area() <= 0.0 {
        return Err(GeometryError::InvalidParams("lift region has no area".into()).into());
    }
    let solver = DirichletSolver::new(mesh.clone(), coeffs)?;
    let load = assemble_load(&mesh, f, big_f);
    let field = solver.solve_trace(|_| 0.0, Some(&load))?;
    let u0_norm = field.l2_norm();
    let (nf, nv) = data_norms(&mesh, f, big_f);
    let data_norm = nf + nv;
    let ratio = if data_norm > 0.0 { u0_norm / data_norm } else { 0.0 };
    Ok(LiftReport { n_triangles: mesh.n_triangles(), field, u0_norm, data_norm, ratio })
}
