use nalgebra::Point2;

use super::fit::{InequalityReport, NormSample};
use super::norms::RegionQuadrature;
use super::{EstimatorError, Result};
use crate::geometry::{Aabb, InterfaceChart, Region, RegionKind, ThreeRegionParams};
use crate::solver::{DiscreteField, Mesh};

const EDGE_SAMPLES: usize = 200;

/// Quadratures of the pulled-back `θU₁, θU₂, θU₃` on one mesh, reusable
/// across a family of fields.
#[derive(Debug, Clone)]
pub struct ThreeRegionProbe {
    pub params: ThreeRegionParams,
    quads: [RegionQuadrature; 3],
}

/// Global bounding box of a region, from its flattened box pushed through
/// the chart. `None` if part of the box leaves the chart cylinder, which
/// conservatively rejects regions the chart cannot carry.
fn global_bbox(region: &Region) -> Option<Aabb> {
    let ([x0, x1], [y0, y1]) = region.flattened_bounds();
    let (mut lo, mut hi) =
        (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    let n = EDGE_SAMPLES;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let x = x0 + (x1 - x0) * t;
        let y = y0 + (y1 - y0) * t;
        for q in [Point2::new(x, y0), Point2::new(x, y1), Point2::new(x0, y), Point2::new(x1, y)] {
            let p = region.chart.unflatten(q).ok()?;
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
    }
    let pad = 1e-3 * (hi - lo).norm();
    Some(Aabb::new(lo - nalgebra::Vector2::repeat(pad), hi + nalgebra::Vector2::repeat(pad)))
}

impl ThreeRegionProbe {
    pub fn new(mesh: &Mesh, params: ThreeRegionParams, chart: &InterfaceChart) -> Result<Self> {
        params.validate()?;
        let build = |kind: RegionKind| -> Result<RegionQuadrature> {
            let region = Region::new(kind, params, chart.clone())?;
            let bbox = global_bbox(&region).ok_or_else(|| {
                EstimatorError::InvalidParams(format!("{kind:?} leaves the chart cylinder; reduce theta"))
            })?;
            let quad = RegionQuadrature::new(mesh, &|p| region.contains(p).unwrap_or(false), Some(bbox));
            if quad.measure() <= 0.0 {
                return Err(EstimatorError::EmptyRegion(format!("{kind:?} does not meet the mesh")));
            }
            Ok(quad)
        };
        Ok(Self { params, quads: [build(RegionKind::U1)?, build(RegionKind::U2)?, build(RegionKind::U3)?] })
    }

    /// Areas of `θU₁, θU₂, θU₃` as resolved on the mesh.
    pub fn measures(&self) -> [f64; 3] {
        [self.quads[0].measure(), self.quads[1].measure(), self.quads[2].measure()]
    }

    pub fn norms(&self, field: &DiscreteField) -> [f64; 3] {
        [self.quads[0].l2_norm(field), self.quads[1].l2_norm(field), self.quads[2].l2_norm(field)]
    }

    /// Report with the exponent pinned to `ξ = R₂/(2R₁+3R₂)` and the least
    /// constant making the inequality hold for this field.
    pub fn check(&self, field: &DiscreteField, eps: f64, c_max: Option<f64>) -> InequalityReport {
        let [n1, n2, n3] = self.norms(field);
        let report = InequalityReport::fit_at_delta(NormSample::new(n1, n2, n3, eps), self.params.xi(), None);
        match c_max {
            Some(c) => report.with_cap(c),
            None => report,
        }
    }
}

pub fn three_region_check(
    field: &DiscreteField,
    params: ThreeRegionParams,
    chart: &InterfaceChart,
    eps: f64,
    c_max: Option<f64>,
) -> Result<InequalityReport> {
    Ok(ThreeRegionProbe::new(&field.mesh, params, chart)?.check(field, eps, c_max))
}
