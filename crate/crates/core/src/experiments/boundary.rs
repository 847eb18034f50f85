use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{ExperimentError, Result};
use crate::rng::Rng;
use crate::solver::Mesh;

/// Discrete trace space on a union of boundary edges, with `H^{±1/2}`
/// surrogates from the pencil of the 1D stiffness and mass matrices:
/// `‖g‖²_{1/2} = gᵀ M^{1/2}(I + M^{-1/2} K M^{-1/2})^{1/2} M^{1/2} g` and
/// its dual for nodal functionals.
#[derive(Debug, Clone)]
pub struct BoundarySpace {
    /// Global node ids, sorted.
    pub nodes: Vec<usize>,
    pub length: f64,
    mass: DMatrix<f64>,
    /// `‖g‖_{1/2} = |half · g|`
    half: DMatrix<f64>,
    /// `‖r‖_{−1/2} = |minus_half · r|`
    minus_half: DMatrix<f64>,
    /// `half⁻¹`, for changing variables in regularised least squares.
    half_inv: DMatrix<f64>,
}

/// Surrogates are dense; larger boundaries should be coarsened first.
pub const MAX_BOUNDARY_NODES: usize = 2000;

impl BoundarySpace {
    /// Space on the boundary edges of `mesh` with both ends in `candidates`.
    /// Candidates touching no such edge are dropped.
    pub fn new(mesh: &Mesh, candidates: &[usize]) -> Result<Self> {
        let mut is_c = vec![false; mesh.n_nodes()];
        for &c in candidates {
            is_c[c] = true;
        }
        let edges: Vec<[usize; 2]> =
            mesh.boundary_edges.iter().map(|e| e.nodes).filter(|e| is_c[e[0]] && is_c[e[1]]).collect();
        let mut nodes: Vec<usize> = edges.iter().flatten().copied().collect();
        nodes.sort_unstable();
        nodes.dedup();
        if edges.is_empty() {
            return Err(ExperimentError::InvalidConfig("boundary part has zero length".into()));
        }
        if nodes.len() > MAX_BOUNDARY_NODES {
            return Err(ExperimentError::InvalidConfig(format!(
                "{} boundary nodes exceed the dense limit {MAX_BOUNDARY_NODES}",
                nodes.len()
            )));
        }
        let pos = |g: usize| nodes.binary_search(&g).expect("edge node is in the set");
        let n = nodes.len();
        let mut mass = DMatrix::<f64>::zeros(n, n);
        let mut stiff = DMatrix::<f64>::zeros(n, n);
        let mut length = 0.0;
        for e in &edges {
            let (i, j) = (pos(e[0]), pos(e[1]));
            let l = (mesh.nodes[e[1]] - mesh.nodes[e[0]]).norm();
            length += l;
            mass[(i, i)] += l / 3.0;
            mass[(j, j)] += l / 3.0;
            mass[(i, j)] += l / 6.0;
            mass[(j, i)] += l / 6.0;
            stiff[(i, i)] += 1.0 / l;
            stiff[(j, j)] += 1.0 / l;
            stiff[(i, j)] -= 1.0 / l;
            stiff[(j, i)] -= 1.0 / l;
        }
        let chol = mass
            .clone()
            .cholesky()
            .ok_or_else(|| ExperimentError::EigSolveFailure("boundary mass matrix is not positive definite".into()))?;
        let l: DMatrix<f64> = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| ExperimentError::EigSolveFailure("singular boundary mass factor".into()))?;
        let a: DMatrix<f64> = &l_inv * &stiff * l_inv.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let eig = a.symmetric_eigen();
        let q = &eig.eigenvectors;
        let w = |p: f64| DMatrix::from_diagonal(&eig.eigenvalues.map(|v: f64| (1.0 + v.max(0.0)).powf(p)));
        let half = w(0.25) * q.transpose() * l.transpose();
        let minus_half = w(-0.25) * q.transpose() * &l_inv;
        let half_inv = l_inv.transpose() * q * w(-0.25);
        Ok(Self { nodes, length, mass, half, minus_half, half_inv })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Restriction of a nodal vector on the whole mesh to this space.
    pub fn restrict(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.nodes.iter().map(|&i| u[i]))
    }

    pub fn l2_norm(&self, g: &DVector<f64>) -> f64 {
        g.dot(&(&self.mass * g)).max(0.0).sqrt()
    }

    pub fn h_half_norm(&self, g: &DVector<f64>) -> f64 {
        (&self.half * g).norm()
    }

    pub fn h_minus_half_norm(&self, r: &DVector<f64>) -> f64 {
        (&self.minus_half * r).norm()
    }

    pub fn half_factor(&self) -> &DMatrix<f64> {
        &self.half
    }

    pub fn half_factor_inverse(&self) -> &DMatrix<f64> {
        &self.half_inv
    }

    pub fn minus_half_factor(&self) -> &DMatrix<f64> {
        &self.minus_half
    }

    /// Gaussian perturbation rescaled to `H^{1/2}` norm `eta`.
    pub fn trace_noise(&self, rng: &mut Rng, eta: f64) -> DVector<f64> {
        let e = DVector::from_iterator(self.len(), (0..self.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let n = self.h_half_norm(&e);
        if n > 0.0 {
            e * (eta / n)
        } else {
            e
        }
    }

    /// Gaussian perturbation of a nodal functional rescaled to `H^{−1/2}`
    /// norm `eta`.
    pub fn flux_noise(&self, rng: &mut Rng, eta: f64) -> DVector<f64> {
        let e = DVector::from_iterator(self.len(), (0..self.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let n = self.h_minus_half_norm(&e);
        if n > 0.0 {
            e * (eta / n)
        } else {
            e
        }
    }
}
