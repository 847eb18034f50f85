//! Families of homogeneous solutions used by the inequality checks: closed-form
//! modes when the interface is a horizontal line, plus solutions with random
//! boundary data.

use serde::{Deserialize, Serialize};

use super::basis::HarmonicBasis;
use super::sweep::random_solution;
use super::Result;
use crate::geometry::Interface;
use crate::rng::Rng;
use crate::solver::{DiscreteField, ExactFlatSolution};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyConfig {
    /// Wave numbers of the closed-form modes; used only for flat interfaces.
    pub oracle_modes: Vec<f64>,
    pub random_fields: usize,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self { oracle_modes: vec![1.0, 2.0, 3.0, 4.0, 5.0], random_fields: 50 }
    }
}

/// Builds the family, every member scaled to unit `L²(Ω)` norm. Oracle
/// modes are interpolated from the closed form with scalar `a±`.
pub fn solution_family(
    basis: &HarmonicBasis,
    interface: &Interface,
    a_plus: f64,
    a_minus: f64,
    cfg: &FamilyConfig,
    rng: &mut Rng,
) -> Result<Vec<DiscreteField>> {
    let mesh = basis.mesh().clone();
    let mut out = Vec::with_capacity(cfg.oracle_modes.len() + cfg.random_fields);
    if let Interface::Flat { y0 } = interface {
        for &k in &cfg.oracle_modes {
            let exact = ExactFlatSolution::new(a_plus, a_minus, k, *y0)?;
            let f = DiscreteField::interpolate(mesh.clone(), |p| exact.value(p), format!("oracle_k{k}"));
            let n = f.l2_norm();
            if n > 0.0 {
                out.push(f.scaled(1.0 / n));
            }
        }
    }
    for i in 0..cfg.random_fields {
        out.push(random_solution(basis, rng, &format!("random_{i}"))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::DomainSpec;
    use crate::rng::stream;
    use crate::solver::{build_mesh, PiecewiseCoefficients};

    #[test]
    fn family_sizes_and_norms() {
        let iface = Interface::Flat { y0: 0.5 };
        let spec = DomainSpec::unit_square(iface.clone(), 0.1).unwrap();
        let mesh = Arc::new(build_mesh(&spec, 0.1).unwrap());
        let coeffs = PiecewiseCoefficients::constant(2.0, 1.0).unwrap();
        let basis = HarmonicBasis::full(mesh, &coeffs).unwrap();
        let cfg = FamilyConfig { oracle_modes: vec![1.0, 2.0], random_fields: 3 };
        let fam = solution_family(&basis, &iface, 2.0, 1.0, &cfg, &mut stream(1, 0)).unwrap();
        assert_eq!(fam.len(), 5);
        assert!(fam.iter().all(|f| (f.l2_norm() - 1.0).abs() < 1e-9));
        let curved = Interface::Parabola { y0: 0.5, c: 0.3, xc: 0.5 };
        let fam = solution_family(&basis, &curved, 2.0, 1.0, &cfg, &mut stream(1, 0)).unwrap();
        assert_eq!(fam.len(), 3);
    }
}
