use nalgebra::Point2;
use rayon::prelude::*;

use crate::geometry::Aabb;
use crate::quadrature::{barycentric_point, MID_EDGE};
use crate::solver::{linalg::Csr, DiscreteField, Mesh};

/// Depth of the recursive midpoint subdivision of cut elements.
pub const SUBDIVISION_DEPTH: usize = 4;

/// Quadrature points of a point set `R` on a mesh: element, barycentric
/// coordinates in that element, weight. Elements fully inside use the
/// mid-edge rule; cut elements are split four-fold `SUBDIVISION_DEPTH`
/// times and each leaf's mid-edge points are weighted by membership.
#[derive(Debug, Clone)]
pub struct RegionQuadrature {
    pub points: Vec<(usize, [f64; 3], f64)>,
}

fn bary_mid(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]
}

fn tri_bbox(v: &[Point2<f64>; 3]) -> Aabb {
    Aabb::new(
        Point2::new(v[0].x.min(v[1].x).min(v[2].x), v[0].y.min(v[1].y).min(v[2].y)),
        Point2::new(v[0].x.max(v[1].x).max(v[2].x), v[0].y.max(v[1].y).max(v[2].y)),
    )
}

impl RegionQuadrature {
    /// `bbox`, when given, must contain the set; elements overlapping it are
    /// subdivided even if no sample point falls inside, so sets smaller
    /// than an element are still resolved.
    pub fn new(mesh: &Mesh, contains: &(dyn Fn(Point2<f64>) -> bool + Sync), bbox: Option<Aabb>) -> Self {
        let per_tri: Vec<Vec<(usize, [f64; 3], f64)>> = (0..mesh.n_triangles())
            .into_par_iter()
            .map(|t| {
                let v = mesh.vertices(t);
                let tb = tri_bbox(&v);
                if let Some(b) = &bbox {
                    if !b.intersects(&tb) {
                        return Vec::new();
                    }
                }
                let area = mesh.area(t);
                let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                let samples = [
                    corners[0],
                    corners[1],
                    corners[2],
                    bary_mid(&corners[0], &corners[1]),
                    bary_mid(&corners[1], &corners[2]),
                    bary_mid(&corners[2], &corners[0]),
                    [1.0 / 3.0; 3],
                ];
                let hits = samples.iter().filter(|b| contains(barycentric_point(&v, b))).count();
                let mut out = Vec::new();
                if hits == samples.len() {
                    for (b, w) in MID_EDGE.points.iter().zip(MID_EDGE.weights) {
                        out.push((t, *b, w * area));
                    }
                } else if hits > 0 || bbox.is_some() {
                    subdivide(&v, contains, t, corners, area, SUBDIVISION_DEPTH, &mut out);
                }
                out
            })
            .collect();
        Self { points: per_tri.into_iter().flatten().collect() }
    }

    /// Whole-domain rule (every element, mid-edge points).
    pub fn whole(mesh: &Mesh) -> Self {
        let mut points = Vec::with_capacity(3 * mesh.n_triangles());
        for t in 0..mesh.n_triangles() {
            let area = mesh.area(t);
            for (b, w) in MID_EDGE.points.iter().zip(MID_EDGE.weights) {
                points.push((t, *b, w * area));
            }
        }
        Self { points }
    }

    pub fn measure(&self) -> f64 {
        self.points.iter().map(|p| p.2).sum()
    }

    pub fn l2_norm(&self, field: &DiscreteField) -> f64 {
        self.points
            .iter()
            .map(|(t, b, w)| {
                let u = field.value_bary(*t, b);
                w * u * u
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `‖u − exact‖_{L²(R)}`
    pub fn l2_error(&self, field: &DiscreteField, exact: &(dyn Fn(Point2<f64>) -> f64 + Sync)) -> f64 {
        self.points
            .iter()
            .map(|(t, b, w)| {
                let e = field.value_bary(*t, b) - exact(barycentric_point(&field.mesh.vertices(*t), b));
                w * e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `∫_R φ_i φ_j`, so that `uᵀ M_R u = ‖u‖²_{L²(R)}`.
    pub fn mass_matrix(&self, mesh: &Mesh) -> Csr {
        let mut trip = Vec::with_capacity(9 * self.points.len());
        for (t, b, w) in &self.points {
            let tri = mesh.triangles[*t];
            for i in 0..3 {
                for j in 0..3 {
                    trip.push((tri[i], tri[j], w * b[i] * b[j]));
                }
            }
        }
        Csr::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &trip)
    }
}

fn subdivide(
    v: &[Point2<f64>; 3],
    contains: &(dyn Fn(Point2<f64>) -> bool + Sync),
    t: usize,
    c: [[f64; 3]; 3],
    area: f64,
    depth: usize,
    out: &mut Vec<(usize, [f64; 3], f64)>,
) {
    if depth == 0 {
        for (lb, w) in MID_EDGE.points.iter().zip(MID_EDGE.weights) {
            let b = [
                lb[0] * c[0][0] + lb[1] * c[1][0] + lb[2] * c[2][0],
                lb[0] * c[0][1] + lb[1] * c[1][1] + lb[2] * c[2][1],
                lb[0] * c[0][2] + lb[1] * c[1][2] + lb[2] * c[2][2],
            ];
            if contains(barycentric_point(v, &b)) {
                out.push((t, b, w * area));
            }
        }
        return;
    }
    let m01 = bary_mid(&c[0], &c[1]);
    let m12 = bary_mid(&c[1], &c[2]);
    let m20 = bary_mid(&c[2], &c[0]);
    let quarter = 0.25 * area;
    for child in [[c[0], m01, m20], [m01, c[1], m12], [m20, m12, c[2]], [m01, m12, m20]] {
        subdivide(v, contains, t, child, quarter, depth - 1, out);
    }
}

/// `(∫_R |u|²)^{1/2}` for the set `R` given by `contains`.
pub fn region_l2_norm(
    field: &DiscreteField,
    contains: &(dyn Fn(Point2<f64>) -> bool + Sync),
    bbox: Option<Aabb>,
) -> f64 {
    RegionQuadrature::new(&field.mesh, contains, bbox).l2_norm(field)
}

/// `‖u‖_{L²(B_r(c))}`
pub fn ball_l2_norm(field: &DiscreteField, center: Point2<f64>, r: f64) -> f64 {
    let bbox = Aabb::new(Point2::new(center.x - r, center.y - r), Point2::new(center.x + r, center.y + r));
    region_l2_norm(field, &|p| (p - center).norm_squared() < r * r, Some(bbox))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{DomainSpec, Interface};
    use crate::solver::build_mesh;

    fn ones() -> DiscreteField {
        let spec = DomainSpec::unit_square(Interface::Flat { y0: 0.5 }, 0.1).unwrap();
        let mesh = Arc::new(build_mesh(&spec, 0.05).unwrap());
        DiscreteField::interpolate(mesh, |_| 1.0, "one")
    }

    #[test]
    fn half_square() {
        let n = region_l2_norm(&ones(), &|p| p.x < 0.5, None);
        assert!((n - 0.5f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn disc_area() {
        let n = ball_l2_norm(&ones(), Point2::new(0.5, 0.5), 0.25);
        let exact = (std::f64::consts::PI * 0.0625).sqrt();
        assert!((n - exact).abs() < 1e-3, "{n} vs {exact}");
    }

    #[test]
    fn whole_domain_matches_plain_norm() {
        let u = ones();
        let u = DiscreteField::interpolate(u.mesh.clone(), |p| p.x * p.x - p.y, "q");
        let n = region_l2_norm(&u, &|_| true, None);
        assert!((n - u.l2_norm()).abs() < 1e-12);
        let m = RegionQuadrature::whole(&u.mesh).mass_matrix(&u.mesh);
        let mu = m.matvec(&u.values);
        let q: f64 = mu.iter().zip(&u.values).map(|(a, b)| a * b).sum();
        assert!((q.sqrt() - u.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn tiny_ball_inside_one_element() {
        let n = ball_l2_norm(&ones(), Point2::new(0.51, 0.52), 0.004);
        let exact = (std::f64::consts::PI * 0.004f64.powi(2)).sqrt();
        assert!((n - exact).abs() < 0.1 * exact, "{n} vs {exact}");
    }
}
