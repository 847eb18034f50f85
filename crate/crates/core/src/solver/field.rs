use std::sync::Arc;

use nalgebra::{Point2, Vector2};

use super::Mesh;
use crate::quadrature::{barycentric_point, DEGREE5};

/// Nodal P1 field on a mesh.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
    pub label: String,
}

impl DiscreteField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>, label: impl Into<String>) -> Self {
        assert_eq!(mesh.n_nodes(), values.len(), "field length must match node count");
        Self { mesh, values, label: label.into() }
    }

    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn(Point2<f64>) -> f64, label: impl Into<String>) -> Self {
        let values = mesh.nodes.iter().map(|p| f(*p)).collect();
        Self::new(mesh, values, label)
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.n_nodes();
        Self::new(mesh, vec![0.0; n], "zero")
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.mesh.clone(), self.values.iter().map(|v| v * s).collect(), self.label.clone())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Value on element `t` at barycentric coordinates `bary`.
    pub fn value_bary(&self, t: usize, bary: &[f64; 3]) -> f64 {
        let tri = self.mesh.triangles[t];
        bary[0] * self.values[tri[0]] + bary[1] * self.values[tri[1]] + bary[2] * self.values[tri[2]]
    }

    pub fn gradient(&self, t: usize) -> Vector2<f64> {
        let g = self.mesh.hat_gradients(t);
        let tri = self.mesh.triangles[t];
        g[0] * self.values[tri[0]] + g[1] * self.values[tri[1]] + g[2] * self.values[tri[2]]
    }

    /// Exact `‖u‖_{L²(Ω)}` of the P1 interpolant.
    pub fn l2_norm(&self) -> f64 {
        let mut s = 0.0;
        for t in 0..self.mesh.n_triangles() {
            let [a, b, c] = self.mesh.triangles[t];
            let (u, v, w) = (self.values[a], self.values[b], self.values[c]);
            s += self.mesh.area(t) / 6.0 * (u * u + v * v + w * w + u * v + v * w + w * u);
        }
        s.sqrt()
    }

    /// `‖∇u‖_{L²(Ω)}`
    pub fn h1_seminorm(&self) -> f64 {
        (0..self.mesh.n_triangles()).map(|t| self.mesh.area(t) * self.gradient(t).norm_squared()).sum::<f64>().sqrt()
    }

    pub fn h1_norm(&self) -> f64 {
        (self.l2_norm().powi(2) + self.h1_seminorm().powi(2)).sqrt()
    }

    /// `‖u − u_exact‖_{L²}` with a degree-5 rule.
    pub fn l2_error(&self, exact: impl Fn(Point2<f64>) -> f64) -> f64 {
        let mut s = 0.0;
        for t in 0..self.mesh.n_triangles() {
            let v = self.mesh.vertices(t);
            let area = self.mesh.area(t);
            for (b, w) in DEGREE5.points.iter().zip(DEGREE5.weights) {
                let e = self.value_bary(t, b) - exact(barycentric_point(&v, b));
                s += w * area * e * e;
            }
        }
        s.sqrt()
    }

    /// `‖u − u_exact‖_{H¹}` (full norm) with a degree-5 rule.
    pub fn h1_error(&self, exact: impl Fn(Point2<f64>) -> f64, grad: impl Fn(Point2<f64>) -> Vector2<f64>) -> f64 {
        let mut s = 0.0;
        for t in 0..self.mesh.n_triangles() {
            let v = self.mesh.vertices(t);
            let area = self.mesh.area(t);
            let g = self.gradient(t);
            for (b, w) in DEGREE5.points.iter().zip(DEGREE5.weights) {
                let p = barycentric_point(&v, b);
                let e = self.value_bary(t, b) - exact(p);
                s += w * area * (e * e + (g - grad(p)).norm_squared());
            }
        }
        s.sqrt()
    }
}
