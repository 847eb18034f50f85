use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use super::{DiscreteField, PiecewiseCoefficients};
use crate::geometry::Side;

/// `L²(Σ)` norms of the solution jump and the conormal-flux jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionReport {
    pub jump_u: f64,
    pub jump_flux: f64,
    pub interface_length: f64,
}

pub fn verify_transmission(field: &DiscreteField, coeffs: &PiecewiseCoefficients) -> TransmissionReport {
    let mesh = &field.mesh;
    let nbrs = mesh.edge_neighbours();
    let (mut ju, mut jf, mut len) = (0.0, 0.0, 0.0);
    for e in &mesh.interface_edges {
        let ts = &nbrs[e];
        let (tp, tm) = if mesh.sides[ts[0]] == Side::Plus { (ts[0], ts[1]) } else { (ts[1], ts[0]) };
        let (p, q) = (mesh.nodes[e[0]], mesh.nodes[e[1]]);
        let l = (q - p).norm();
        let tangent = (q - p) / l;
        let mut normal = Vector2::new(-tangent.y, tangent.x);
        // orient from the minus element towards the plus element
        if (mesh.centroid(tp) - p).dot(&normal) < 0.0 {
            normal = -normal;
        }
        let mid = Point2::from((p.coords + q.coords) * 0.5);
        let flux_p = (coeffs.a(Side::Plus, mid) * field.gradient(tp)).dot(&normal);
        let flux_m = (coeffs.a(Side::Minus, mid) * field.gradient(tm)).dot(&normal);
        jf += (flux_p - flux_m).powi(2) * l;
        // traces from each side at the edge endpoints, read from each
        // element's own vertex values
        let trace = |t: usize| {
            let tri = mesh.triangles[t];
            let pick = |n: usize| tri.iter().find(|&&v| v == n).map(|&v| field.values[v]).unwrap_or(f64::NAN);
            (pick(e[0]), pick(e[1]))
        };
        let (a0, a1) = trace(tp);
        let (b0, b1) = trace(tm);
        let (d0, d1) = (a0 - b0, a1 - b1);
        ju += l / 3.0 * (d0 * d0 + d0 * d1 + d1 * d1);
        len += l;
    }
    TransmissionReport { jump_u: ju.sqrt(), jump_flux: jf.sqrt(), interface_length: len }
}
