use std::sync::Arc;

use nalgebra::{Point2, Vector2};
use rayon::prelude::*;

use super::linalg::{bicgstab, norm, Csr, SkylineCholesky};
use super::{DiscreteField, Mesh, PiecewiseCoefficients, Result, SolverError};
use crate::quadrature::{barycentric_point, MID_EDGE};

/// Stiffness `K_ij = ∫ a∇φ_j·∇φ_i − ∫ (b·∇φ_j) φ_i − ∫ q φ_j φ_i`, the
/// negative of the weak form of `L`. Coefficients are sampled at centroids
/// on the element's own side.
pub fn assemble_stiffness(mesh: &Mesh, coeffs: &PiecewiseCoefficients) -> Csr {
    let local: Vec<[(usize, usize, f64); 9]> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let tri = mesh.triangles[t];
            let area = mesh.area(t);
            let c = mesh.centroid(t);
            let a = coeffs.a(mesh.sides[t], c);
            let g = mesh.hat_gradients(t);
            let b = coeffs.b.as_ref().map(|b| b(c));
            let q = coeffs.q.as_ref().map_or(0.0, |q| q(c));
            let mut out = [(0, 0, 0.0); 9];
            for i in 0..3 {
                for j in 0..3 {
                    let mut v = area * (a * g[j]).dot(&g[i]);
                    if let Some(b) = b {
                        v -= area / 3.0 * b.dot(&g[j]);
                    }
                    let mass = if i == j { area / 6.0 } else { area / 12.0 };
                    v -= q * mass;
                    out[3 * i + j] = (tri[i], tri[j], v);
                }
            }
            out
        })
        .collect();
    let trip: Vec<(usize, usize, f64)> = local.into_iter().flatten().collect();
    Csr::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &trip)
}

/// Consistent P1 mass matrix.
pub fn mass_matrix(mesh: &Mesh) -> Csr {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let area = mesh.area(t);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], if i == j { area / 6.0 } else { area / 12.0 }));
            }
        }
    }
    Csr::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &trip)
}

/// `∫ ∇φ_j·∇φ_i`
pub fn laplace_stiffness(mesh: &Mesh) -> Csr {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let area = mesh.area(t);
        let g = mesh.hat_gradients(t);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], area * g[i].dot(&g[j])));
            }
        }
    }
    Csr::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &trip)
}

/// Load `l_i = −∫ f φ_i + ∫ F·∇φ_i` with the mid-edge rule.
pub fn assemble_load(
    mesh: &Mesh,
    f: Option<&(dyn Fn(Point2<f64>) -> f64 + Sync)>,
    big_f: Option<&(dyn Fn(Point2<f64>) -> Vector2<f64> + Sync)>,
) -> Vec<f64> {
    let mut l = vec![0.0; mesh.n_nodes()];
    if f.is_none() && big_f.is_none() {
        return l;
    }
    let local: Vec<[f64; 3]> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let v = mesh.vertices(t);
            let area = mesh.area(t);
            let g = mesh.hat_gradients(t);
            let mut out = [0.0; 3];
            for (b, w) in MID_EDGE.points.iter().zip(MID_EDGE.weights) {
                let p = barycentric_point(&v, b);
                let fv = f.map_or(0.0, |f| f(p));
                let fv_vec = big_f.map_or(Vector2::zeros(), |bf| bf(p));
                for i in 0..3 {
                    out[i] += w * area * (-fv * b[i] + fv_vec.dot(&g[i]));
                }
            }
            out
        })
        .collect();
    for (t, vals) in local.iter().enumerate() {
        for (i, v) in mesh.triangles[t].iter().zip(vals) {
            l[*i] += v;
        }
    }
    l
}

enum Factor {
    Cholesky(SkylineCholesky),
    Iterative,
}

/// Reusable Dirichlet solver: the interior block is factored once.
pub struct DirichletSolver {
    mesh: Arc<Mesh>,
    stiffness: Csr,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    a_ii: Csr,
    a_ib: Csr,
    factor: Factor,
}

const RESIDUAL_TOL: f64 = 1e-10;

impl DirichletSolver {
    pub fn new(mesh: Arc<Mesh>, coeffs: &PiecewiseCoefficients) -> Result<Self> {
        let boundary = mesh.boundary_nodes();
        Self::with_boundary(mesh, coeffs, boundary)
    }

    /// Solver with Dirichlet conditions on an explicit node set.
    pub fn with_boundary(mesh: Arc<Mesh>, coeffs: &PiecewiseCoefficients, boundary: Vec<usize>) -> Result<Self> {
        let stiffness = assemble_stiffness(&mesh, coeffs);
        let mut is_b = vec![false; mesh.n_nodes()];
        for &b in &boundary {
            is_b[b] = true;
        }
        let interior: Vec<usize> = (0..mesh.n_nodes()).filter(|&i| !is_b[i]).collect();
        if interior.is_empty() {
            return Err(SolverError::MeshFailure("mesh has no interior nodes".into()));
        }
        let a_ii = stiffness.select(&interior, &interior);
        let a_ib = stiffness.select(&interior, &boundary);
        let factor = if coeffs.is_symmetric_problem() {
            Factor::Cholesky(SkylineCholesky::factor(&a_ii)?)
        } else {
            Factor::Iterative
        };
        Ok(Self { mesh, stiffness, interior, boundary, a_ii, a_ib, factor })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn stiffness(&self) -> &Csr {
        &self.stiffness
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    fn solve_interior(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let scale = norm(rhs);
        if scale == 0.0 {
            return Ok(vec![0.0; rhs.len()]);
        }
        match &self.factor {
            Factor::Cholesky(chol) => {
                let mut x = chol.solve(rhs);
                for _ in 0..4 {
                    let r: Vec<f64> = rhs.iter().zip(self.a_ii.matvec(&x)).map(|(b, ax)| b - ax).collect();
                    if norm(&r) <= RESIDUAL_TOL * scale {
                        return Ok(x);
                    }
                    for (xi, d) in x.iter_mut().zip(chol.solve(&r)) {
                        *xi += d;
                    }
                }
                let r: Vec<f64> = rhs.iter().zip(self.a_ii.matvec(&x)).map(|(b, ax)| b - ax).collect();
                let rel = norm(&r) / scale;
                if rel <= RESIDUAL_TOL {
                    Ok(x)
                } else {
                    Err(SolverError::SolveFailure(format!("relative residual {rel:.2e} above {RESIDUAL_TOL:e}")))
                }
            }
            Factor::Iterative => bicgstab(&self.a_ii, rhs, 1e-12, 20 * rhs.len() + 100),
        }
    }

    /// Solves with boundary values `g` (ordered as [`Self::boundary_nodes`])
    /// and nodal load `load` (length `n_nodes`, or `None` for zero data).
    pub fn solve(&self, g: &[f64], load: Option<&[f64]>) -> Result<Vec<f64>> {
        if g.len() != self.boundary.len() {
            return Err(SolverError::DimensionMismatch { expected: self.boundary.len(), got: g.len() });
        }
        if let Some(l) = load {
            if l.len() != self.mesh.n_nodes() {
                return Err(SolverError::DimensionMismatch { expected: self.mesh.n_nodes(), got: l.len() });
            }
        }
        let ag = self.a_ib.matvec(g);
        let rhs: Vec<f64> = self.interior.iter().zip(&ag).map(|(&i, agi)| load.map_or(0.0, |l| l[i]) - agi).collect();
        let ui = self.solve_interior(&rhs)?;
        let mut u = vec![0.0; self.mesh.n_nodes()];
        for (&i, v) in self.interior.iter().zip(ui) {
            u[i] = v;
        }
        for (&b, v) in self.boundary.iter().zip(g) {
            u[b] = *v;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::SolveFailure("non-finite solution values".into()));
        }
        Ok(u)
    }

    /// Solves with boundary values taken from `g` at the boundary nodes.
    pub fn solve_trace(&self, g: impl Fn(Point2<f64>) -> f64, load: Option<&[f64]>) -> Result<DiscreteField> {
        let gb: Vec<f64> = self.boundary.iter().map(|&b| g(self.mesh.nodes[b])).collect();
        let u = self.solve(&gb, load)?;
        Ok(DiscreteField::new(self.mesh.clone(), u, "dirichlet"))
    }

    /// Discrete conormal flux at boundary nodes, `(K u)_b − l_b`, the
    /// residual of the weak form against boundary hat functions.
    pub fn boundary_flux(&self, u: &[f64], load: Option<&[f64]>) -> Vec<f64> {
        let ku = self.stiffness.matvec(u);
        self.boundary.iter().map(|&b| ku[b] - load.map_or(0.0, |l| l[b])).collect()
    }

    /// Largest interior residual `|(K u − l)_i|` relative to `‖l‖ + ‖K_IB g‖`.
    pub fn galerkin_residual(&self, u: &[f64], load: Option<&[f64]>) -> f64 {
        let ku = self.stiffness.matvec(u);
        let r: Vec<f64> = self.interior.iter().map(|&i| ku[i] - load.map_or(0.0, |l| l[i])).collect();
        let g: Vec<f64> = self.boundary.iter().map(|&b| u[b]).collect();
        let scale = load.map_or(0.0, norm) + norm(&self.a_ib.matvec(&g));
        if scale == 0.0 {
            norm(&r)
        } else {
            norm(&r) / scale
        }
    }
}

/// One-shot Dirichlet solve of `L u = f + ∇·F`, `u = g` on `∂Ω`.
pub fn solve_dirichlet(
    mesh: Arc<Mesh>,
    coeffs: &PiecewiseCoefficients,
    f: Option<&(dyn Fn(Point2<f64>) -> f64 + Sync)>,
    big_f: Option<&(dyn Fn(Point2<f64>) -> Vector2<f64> + Sync)>,
    g: impl Fn(Point2<f64>) -> f64,
) -> Result<DiscreteField> {
    let solver = DirichletSolver::new(mesh.clone(), coeffs)?;
    let load = assemble_load(&mesh, f, big_f);
    solver.solve_trace(g, Some(&load))
}
