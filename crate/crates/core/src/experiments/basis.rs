use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::Result;
use crate::solver::linalg::Csr;
use crate::solver::{DirichletSolver, DiscreteField, Mesh, PiecewiseCoefficients};

/// Discrete solutions parameterised by boundary values on a set of control
/// nodes, with the remaining boundary nodes held at zero. Column `j` is the
/// solution whose trace is the hat function of control node `j`.
pub struct HarmonicBasis {
    pub solver: DirichletSolver,
    /// Global ids of the control nodes.
    pub controls: Vec<usize>,
    /// `n_nodes × n_controls`
    pub columns: DMatrix<f64>,
}

impl HarmonicBasis {
    pub fn new(mesh: Arc<Mesh>, coeffs: &PiecewiseCoefficients, controls: &[usize]) -> Result<Self> {
        let solver = DirichletSolver::new(mesh.clone(), coeffs)?;
        let boundary = solver.boundary_nodes();
        let slots: Vec<usize> = controls
            .iter()
            .map(|c| {
                boundary.binary_search(c).map_err(|_| {
                    super::ExperimentError::InvalidConfig(format!("control node {c} is not on the boundary"))
                })
            })
            .collect::<Result<_>>()?;
        let cols: Vec<Vec<f64>> = slots
            .par_iter()
            .map(|&s| {
                let mut g = vec![0.0; boundary.len()];
                g[s] = 1.0;
                solver.solve(&g, None)
            })
            .collect::<std::result::Result<_, _>>()?;
        let n = mesh.n_nodes();
        let columns = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        Ok(Self { solver, controls: controls.to_vec(), columns })
    }

    /// Basis on every boundary node.
    pub fn full(mesh: Arc<Mesh>, coeffs: &PiecewiseCoefficients) -> Result<Self> {
        let controls = mesh.boundary_nodes();
        Self::new(mesh, coeffs, &controls)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.solver.mesh()
    }

    pub fn dim(&self) -> usize {
        self.controls.len()
    }

    pub fn values(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.columns * c
    }

    pub fn field(&self, c: &DVector<f64>, label: &str) -> DiscreteField {
        DiscreteField::new(self.mesh().clone(), self.values(c).as_slice().to_vec(), label)
    }

    /// `A · S` for a sparse `A` with `n_nodes` columns.
    pub fn apply_sparse(&self, a: &Csr) -> DMatrix<f64> {
        let cols: Vec<Vec<f64>> =
            (0..self.dim()).into_par_iter().map(|j| a.matvec(self.columns.column(j).as_slice())).collect();
        DMatrix::from_fn(a.n_rows, cols.len(), |i, j| cols[j][i])
    }

    /// `Sᵀ M S`, symmetrised.
    pub fn gram(&self, mass: &Csr) -> DMatrix<f64> {
        let g = self.columns.transpose() * self.apply_sparse(mass);
        (&g + g.transpose()) * 0.5
    }

    /// `Sᵀ M v`
    pub fn cross(&self, mass: &Csr, v: &[f64]) -> DVector<f64> {
        self.columns.transpose() * DVector::from_vec(mass.matvec(v))
    }

    /// Discrete conormal flux `(K S)` on the given boundary nodes.
    pub fn flux_matrix(&self, rows: &[usize]) -> DMatrix<f64> {
        let k = self.solver.stiffness().select(rows, &(0..self.mesh().n_nodes()).collect::<Vec<_>>());
        self.apply_sparse(&k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::RegionQuadrature;
    use crate::geometry::{DomainSpec, Interface};
    use crate::solver::build_mesh;

    #[test]
    fn constant_trace_reproduces_constant() {
        let spec = DomainSpec::unit_square(Interface::Flat { y0: 0.5 }, 0.1).unwrap();
        let mesh = Arc::new(build_mesh(&spec, 0.1).unwrap());
        let coeffs = PiecewiseCoefficients::constant(2.0, 1.0).unwrap();
        let basis = HarmonicBasis::full(mesh.clone(), &coeffs).unwrap();
        let ones = DVector::from_element(basis.dim(), 1.0);
        assert!(basis.values(&ones).iter().all(|v| (v - 1.0).abs() < 1e-10));
        let mass = RegionQuadrature::whole(&mesh).mass_matrix(&mesh);
        let g = basis.gram(&mass);
        assert!((ones.dot(&(&g * &ones)) - 1.0).abs() < 1e-10);
        let flux = basis.flux_matrix(&basis.controls) * &ones;
        assert!(flux.amax() < 1e-10);
    }
}
