use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::HarmonicBasis;
use super::{ExperimentError, Result};
use crate::estimator::RegionQuadrature;
use crate::geometry::{Aabb, DomainSpec};
use crate::solver::{laplace_stiffness, DiscreteField};
use nalgebra::Point2;

/// `max uᵀ Q_obj u` subject to `uᵀ Q_norm u ≤ 1` and `uᵀ Q_small u ≤ η²`
/// over basis coefficients.
#[derive(Debug, Clone)]
pub struct PencilProblem {
    pub objective: DMatrix<f64>,
    pub normaliser: DMatrix<f64>,
    pub small: DMatrix<f64>,
}

/// One point of the extremal curve, in norms (square roots of the forms).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremalPoint {
    pub eta: f64,
    /// Objective of a feasible field: a lower bound for the sharp constant.
    pub objective: f64,
    /// `min_s √(λ_max(s)(1 + sη²))`, an upper bound by weak duality.
    pub dual_bound: f64,
    /// Multiplier of the small-set constraint at the primal point.
    pub s_primal: f64,
    pub normaliser_norm: f64,
    pub small_norm: f64,
    /// Coefficients of the extremising field.
    #[serde(skip)]
    pub coeffs: DVector<f64>,
}

/// Golden-section steps per refinement.
const REFINE_STEPS: usize = 24;

/// Multipliers `s = 0` and `s = 10^k / η²` for `k` on a grid in `[−3, 3]`.
pub fn multiplier_grid(eta: f64, per_decade: usize) -> Vec<f64> {
    let n = 6 * per_decade;
    std::iter::once(0.0).chain((0..=n).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / n as f64) / (eta * eta))).collect()
}

impl PencilProblem {
    pub fn new(objective: DMatrix<f64>, normaliser: DMatrix<f64>, small: DMatrix<f64>) -> Result<Self> {
        let n = objective.nrows();
        if [objective.ncols(), normaliser.nrows(), normaliser.ncols(), small.nrows(), small.ncols()]
            .iter()
            .any(|&d| d != n)
        {
            return Err(ExperimentError::InvalidConfig("pencil matrices must be square of equal size".into()));
        }
        Ok(Self { objective, normaliser, small })
    }

    pub fn dim(&self) -> usize {
        self.objective.nrows()
    }

    /// Largest `λ` and its vector for `Q_obj v = λ (Q_norm + s Q_small) v`.
    pub fn top_pair(&self, s: f64) -> Result<(f64, DVector<f64>)> {
        let p = &self.normaliser + &self.small * s;
        let jitter = 1e-14 * p.trace().abs().max(f64::MIN_POSITIVE);
        let chol = p.clone().cholesky().or_else(|| {
            let n = p.nrows();
            (p + DMatrix::identity(n, n) * jitter).cholesky()
        });
        let chol =
            chol.ok_or_else(|| ExperimentError::EigSolveFailure(format!("pencil at s = {s:e} is not definite")))?;
        let l = chol.l();
        let l_inv = l
            .solve_lower_triangular(&DMatrix::identity(self.dim(), self.dim()))
            .ok_or_else(|| ExperimentError::EigSolveFailure("singular pencil factor".into()))?;
        let c = &l_inv * &self.objective * l_inv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let eig = c.symmetric_eigen();
        let (k, lam) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, l)| (k, *l))
            .ok_or_else(|| ExperimentError::EigSolveFailure("empty pencil".into()))?;
        if !lam.is_finite() {
            return Err(ExperimentError::EigSolveFailure(format!("non-finite eigenvalue at s = {s:e}")));
        }
        let v = l_inv.transpose() * eig.eigenvectors.column(k);
        Ok((lam, v))
    }

    fn form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
        v.dot(&(m * v)).max(0.0)
    }

    /// `vᵀMv` plus a bound on its rounding error, which dominates when the
    /// form cancels.
    fn form_upper(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
        let abs = v.abs();
        let mag = abs.dot(&(m.abs() * &abs));
        v.dot(&(m * v)).max(0.0) + 2.0 * (v.len() as f64 + 2.0) * f64::EPSILON * mag
    }

    /// Dual value `√(λ(s)(1+sη²))` and the top vector scaled to feasibility.
    fn evaluate(&self, eta: f64, s: f64) -> Result<(f64, Option<ExtremalPoint>)> {
        let (lam, v) = self.top_pair(s)?;
        let dual = (lam.max(0.0) * (1.0 + s * eta * eta)).sqrt();
        let a = Self::form_upper(&self.normaliser, &v).sqrt();
        let b = Self::form_upper(&self.small, &v).sqrt();
        let scale = 1.0 / a.max(b / eta);
        if !scale.is_finite() {
            return Ok((dual, None));
        }
        let c = v * scale;
        let point = ExtremalPoint {
            eta,
            objective: Self::form(&self.objective, &c).sqrt(),
            dual_bound: 0.0,
            s_primal: s,
            normaliser_norm: Self::form(&self.normaliser, &c).sqrt(),
            small_norm: Self::form(&self.small, &c).sqrt(),
            coeffs: c,
        };
        Ok((dual, Some(point)))
    }

    /// Golden-section search of `score` over `log s ∈ [log lo, log hi]`,
    /// maximising; returns every evaluation made.
    fn refine(
        &self,
        eta: f64,
        lo: f64,
        hi: f64,
        score: impl Fn(&(f64, Option<ExtremalPoint>)) -> f64,
    ) -> Result<Vec<(f64, Option<ExtremalPoint>)>> {
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo.ln(), hi.ln());
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let mut f1 = self.evaluate(eta, x1.exp())?;
        let mut f2 = self.evaluate(eta, x2.exp())?;
        let mut seen = Vec::with_capacity(REFINE_STEPS + 2);
        for _ in 0..REFINE_STEPS {
            if score(&f1) >= score(&f2) {
                b = x2;
                x2 = x1;
                seen.push(std::mem::replace(&mut f2, f1.clone()));
                x1 = b - g * (b - a);
                f1 = self.evaluate(eta, x1.exp())?;
            } else {
                a = x1;
                x1 = x2;
                seen.push(std::mem::replace(&mut f1, f2.clone()));
                x2 = a + g * (b - a);
                f2 = self.evaluate(eta, x2.exp())?;
            }
        }
        seen.push(f1);
        seen.push(f2);
        Ok(seen)
    }

    /// Best feasible point and dual bound over the multiplier grid, with
    /// golden-section refinement around the best primal and dual multipliers.
    pub fn solve(&self, eta: f64, grid: &[f64]) -> Result<ExtremalPoint> {
        if !(eta > 0.0) {
            return Err(ExperimentError::InvalidConfig(format!("eta = {eta} must be positive")));
        }
        let mut grid = grid.to_vec();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut evals: Vec<(f64, Option<ExtremalPoint>)> =
            grid.par_iter().map(|&s| self.evaluate(eta, s)).collect::<Result<_>>()?;
        let primal = |e: &(f64, Option<ExtremalPoint>)| e.1.as_ref().map_or(f64::NEG_INFINITY, |p| p.objective);
        let dual = |e: &(f64, Option<ExtremalPoint>)| -e.0;
        let bracket = |i: usize| -> Option<(f64, f64)> {
            let lo = if i > 0 { grid[i - 1] } else { grid[i] };
            let hi = grid[(i + 1).min(grid.len() - 1)];
            (lo > 0.0 && hi > lo).then_some((lo, hi))
        };
        let argmax = |evals: &[(f64, Option<ExtremalPoint>)], f: &dyn Fn(&(f64, Option<ExtremalPoint>)) -> f64| {
            (0..grid.len()).max_by(|&a, &b| f(&evals[a]).total_cmp(&f(&evals[b]))).unwrap_or(0)
        };
        let ip = argmax(&evals, &primal);
        let id = argmax(&evals, &dual);
        let mut extra = Vec::new();
        if let Some((lo, hi)) = bracket(ip) {
            extra.extend(self.refine(eta, lo, hi, primal)?);
        }
        if let Some((lo, hi)) = bracket(id) {
            extra.extend(self.refine(eta, lo, hi, dual)?);
        }
        evals.extend(extra);
        let dual_bound = evals.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
        let mut best = evals
            .into_iter()
            .filter_map(|e| e.1)
            .reduce(|a, b| if b.objective > a.objective { b } else { a })
            .ok_or_else(|| ExperimentError::EigSolveFailure("no feasible pencil vector".into()))?;
        best.dual_bound = dual_bound.max(best.objective);
        Ok(best)
    }

    /// Extremal curve over `etas`, made monotone: a field feasible at a
    /// smaller `η` is feasible at every larger one.
    pub fn curve(&self, etas: &[f64], per_decade: usize) -> Result<Vec<ExtremalPoint>> {
        let mut order: Vec<usize> = (0..etas.len()).collect();
        order.sort_by(|&a, &b| etas[a].total_cmp(&etas[b]));
        let mut out: Vec<Option<ExtremalPoint>> = vec![None; etas.len()];
        let mut carry: Option<ExtremalPoint> = None;
        for i in order {
            let eta = etas[i];
            let mut p = self.solve(eta, &multiplier_grid(eta, per_decade))?;
            if let Some(prev) = &carry {
                if prev.objective > p.objective {
                    let dual = p.dual_bound.max(prev.objective);
                    p = ExtremalPoint { eta, dual_bound: dual, ..prev.clone() };
                }
            }
            carry = Some(p.clone());
            out[i] = Some(p);
        }
        Ok(out.into_iter().map(|p| p.expect("every eta solved")).collect())
    }
}

fn disc_box(c: Point2<f64>, r: f64) -> Aabb {
    Aabb::new(Point2::new(c.x - r, c.y - r), Point2::new(c.x + r, c.y + r))
}

/// Gram matrices of the standard sets over a harmonic basis.
pub struct SetGrams<'a> {
    pub basis: &'a HarmonicBasis,
}

impl SetGrams<'_> {
    pub fn omega(&self) -> DMatrix<f64> {
        let mesh = self.basis.mesh();
        self.basis.gram(&RegionQuadrature::whole(mesh).mass_matrix(mesh))
    }

    /// `‖u‖²_{H¹} = ‖u‖² + ‖∇u‖²`
    pub fn h1(&self) -> DMatrix<f64> {
        let mesh = self.basis.mesh();
        self.omega() + self.basis.gram(&laplace_stiffness(mesh))
    }

    pub fn region(&self, contains: &(dyn Fn(Point2<f64>) -> bool + Sync), bbox: Option<Aabb>) -> Result<DMatrix<f64>> {
        let mesh = self.basis.mesh();
        let q = RegionQuadrature::new(mesh, contains, bbox);
        if q.measure() <= 0.0 {
            return Err(ExperimentError::EmptySet("region does not meet the mesh".into()));
        }
        Ok(self.basis.gram(&q.mass_matrix(mesh)))
    }

    pub fn ball(&self, c: Point2<f64>, r: f64) -> Result<DMatrix<f64>> {
        self.region(&|p| (p - c).norm_squared() < r * r, Some(disc_box(c, r)))
    }

    pub fn subdomain(&self, spec: &DomainSpec) -> Result<DMatrix<f64>> {
        self.region(&|p| spec.in_d(p), Some(spec.d_bbox()))
    }
}

/// Pencil of the main theorem: maximise `‖u‖_D` with `‖u‖_Ω ≤ 1` and
/// `‖u‖_{B_r(x₀)} ≤ η`.
pub fn smallness_pencil(basis: &HarmonicBasis, spec: &DomainSpec, x0: Point2<f64>, r: f64) -> Result<PencilProblem> {
    let g = SetGrams { basis };
    PencilProblem::new(g.subdomain(spec)?, g.omega(), g.ball(x0, r)?)
}

/// Near-extremal field for the main theorem at one `η`.
pub fn smallness_extremizer(
    basis: &HarmonicBasis,
    spec: &DomainSpec,
    x0: Point2<f64>,
    r: f64,
    eta: f64,
) -> Result<(DiscreteField, ExtremalPoint)> {
    let pencil = smallness_pencil(basis, spec, x0, r)?;
    let p = pencil.solve(eta, &multiplier_grid(eta, 6))?;
    Ok((basis.field(&p.coeffs, &format!("extremizer eta={eta:e}")), p))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::estimator::{ball_l2_norm, region_l2_norm};
    use crate::geometry::Interface;
    use crate::solver::{build_mesh, PiecewiseCoefficients};

    fn setup() -> (DomainSpec, HarmonicBasis) {
        let spec = DomainSpec::unit_square(Interface::Flat { y0: 0.5 }, 0.1).unwrap();
        let mesh = Arc::new(build_mesh(&spec, 0.06).unwrap());
        let coeffs = PiecewiseCoefficients::constant(2.0, 1.0).unwrap();
        let basis = HarmonicBasis::full(mesh, &coeffs).unwrap();
        (spec, basis)
    }

    #[test]
    fn inactive_constraint_is_top_eigenvector() {
        let (spec, basis) = setup();
        let x0 = Point2::new(0.5, 0.3);
        let pencil = smallness_pencil(&basis, &spec, x0, 0.15).unwrap();
        let (lam, _) = pencil.top_pair(0.0).unwrap();
        let p = pencil.solve(1.0, &multiplier_grid(1.0, 4)).unwrap();
        assert!(p.objective <= 1.0 + 1e-9);
        assert!((p.objective - lam.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn curve_is_monotone_and_feasible() {
        let (spec, basis) = setup();
        let x0 = Point2::new(0.5, 0.3);
        let r = 0.15;
        let pencil = smallness_pencil(&basis, &spec, x0, r).unwrap();
        let etas = [1e-1, 1e-2, 1e-3, 1e-4];
        let curve = pencil.curve(&etas, 3).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12);
        }
        for p in &curve {
            assert!(p.objective <= p.dual_bound + 1e-12);
            assert!(p.normaliser_norm <= 1.0 + 1e-9 && p.small_norm <= p.eta * (1.0 + 1e-9));
            // coefficient forms agree with direct quadrature of the field
            let u = basis.field(&p.coeffs, "x");
            assert!((ball_l2_norm(&u, x0, r) - p.small_norm).abs() < 1e-8 * (1.0 + p.small_norm));
            let d = region_l2_norm(&u, &|q| spec.in_d(q), Some(spec.d_bbox()));
            assert!((d - p.objective).abs() < 1e-8);
        }
    }
}
