use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Point2};
use serde::{Deserialize, Serialize};

use super::basis::HarmonicBasis;
use super::boundary::BoundarySpace;
use super::modulus::{fit_exponential_growth, fit_power_law, ExpGrowthFit, PowerFit};
use super::{ExperimentError, Result};
use crate::estimator::RegionQuadrature;
use crate::geometry::Aabb;
use crate::solver::{DirichletSolver, DiscreteField, Mesh, PiecewiseCoefficients};

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn contains(&self, p: Point2<f64>) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::new(Point2::from(self.min), Point2::from(self.max))
    }

    /// Smallest gap between the boundaries when `self ⊂⊂ outer`.
    fn margin_in(&self, outer: &Aabb) -> f64 {
        (self.min[0] - outer.min.x)
            .min(self.min[1] - outer.min.y)
            .min(outer.max.x - self.max[0])
            .min(outer.max.y - self.max[1])
    }
}

/// Where the target comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RungeTarget {
    /// Global solution with a smooth trace supported in `Γ`: exactly reachable.
    Reachable,
    /// Discrete Green's function with its source at the mesh node nearest to
    /// `source`; it solves the equation in `D̃` when the source lies outside
    /// `D̃`, and only in `D` when it lies in `D̃ \ D`.
    PointSource { source: [f64; 2] },
}

/// Solution class of the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetClass {
    /// Restriction of a global solution controlled from `Γ`.
    Global,
    /// Solution in `D̃`.
    Enlarged,
    /// Solution in `D` only.
    Interior,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RungeConfig {
    pub d: Rect,
    pub d_tilde: Rect,
    pub gamma_markers: Vec<u32>,
    pub target: RungeTarget,
    /// Strictly decreasing relative accuracies in `(0, 1)`.
    pub eps_schedule: Vec<f64>,
}

impl Default for RungeConfig {
    fn default() -> Self {
        Self {
            d: Rect { min: [0.35, 0.35], max: [0.65, 0.65] },
            d_tilde: Rect { min: [0.2, 0.2], max: [0.8, 0.8] },
            gamma_markers: vec![crate::solver::MARKER_TOP, crate::solver::MARKER_LEFT, crate::solver::MARKER_RIGHT],
            target: RungeTarget::Reachable,
            eps_schedule: (0..6).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RungeRow {
    pub eps: f64,
    pub alpha: f64,
    /// `‖u_g − v‖_{L²(D)} / ‖v‖_{L²(D)}`
    pub error: f64,
    /// `‖g‖_{H^{1/2}(Γ)} / ‖v‖_{L²(D)}`
    pub control_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RungeOutcome {
    pub class: TargetClass,
    pub rows: Vec<RungeRow>,
    /// Relative error of the unregularised best approximation.
    pub floor_error: f64,
    /// Control norm of the reachable target's own trace, relative to `‖v‖_D`.
    pub reference_control: Option<f64>,
    /// Largest relative equation residual over nodes supported in the
    /// target's domain.
    pub residual: f64,
    /// Control norm against `1/ε`.
    pub power_fit: Option<PowerFit>,
    /// `log ‖g‖` against `ε^{−μ}`.
    pub exp_fit: Option<ExpGrowthFit>,
    /// Schedule steps where the control norm decreases as `ε` decreases.
    pub monotone_violations: usize,
}

/// Relative residual above which a target fails the audit.
pub const RESIDUAL_TOL: f64 = 1e-8;
const BISECTION_STEPS: usize = 60;
/// Search range of `α / λ_max`.
const ALPHA_RANGE: (f64, f64) = (1e-16, 1e4);
/// Discrepancy band `[lo, hi] · ε`.
pub const DISCREPANCY_BAND: (f64, f64) = (0.5, 1.5);

/// Max over nodes whose support lies in `inside` of `|(K v)_i| / (|K||v|)_i`.
pub fn equation_residual(solver: &DirichletSolver, v: &DiscreteField, inside: &dyn Fn(Point2<f64>) -> bool) -> f64 {
    let mesh = solver.mesh();
    let mut supported = vec![true; mesh.n_nodes()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !mesh.vertices(t).iter().all(|p| inside(*p)) {
            for &i in tri {
                supported[i] = false;
            }
        }
    }
    for &b in solver.boundary_nodes() {
        supported[b] = false;
    }
    let k = solver.stiffness();
    let kv = k.matvec(&v.values);
    let abs_v: Vec<f64> = v.values.iter().map(|x| x.abs()).collect();
    (0..mesh.n_nodes())
        .filter(|&i| supported[i])
        .map(|i| {
            let scale: f64 = k.row(i).map(|(j, a)| a.abs() * abs_v[j]).sum();
            if scale > 0.0 {
                kv[i].abs() / scale
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Quantitative Runge approximation: for each `ε`, the Tikhonov control on
/// `Γ` whose solution matches the target in `L²(D)` to relative accuracy
/// `ε`, by the discrepancy principle.
pub fn runge_experiment(mesh: Arc<Mesh>, coeffs: &PiecewiseCoefficients, cfg: &RungeConfig) -> Result<RungeOutcome> {
    let bb = mesh.bbox();
    let dt = cfg.d_tilde.aabb();
    if !(cfg.d.margin_in(&dt) > 0.0 && cfg.d_tilde.margin_in(&bb) > 0.0) {
        return Err(ExperimentError::InvalidConfig("need D ⊂⊂ D̃ ⊂⊂ Ω".into()));
    }
    if cfg.eps_schedule.is_empty()
        || cfg.eps_schedule.iter().any(|&e| !(e > 0.0 && e < 1.0))
        || cfg.eps_schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(ExperimentError::InvalidConfig("eps_schedule must decrease strictly within (0, 1)".into()));
    }
    let solver = DirichletSolver::new(mesh.clone(), coeffs)?;
    let gamma = BoundarySpace::new(&mesh, &mesh.boundary_nodes_with(&cfg.gamma_markers))?;
    let basis = HarmonicBasis::new(mesh.clone(), coeffs, &gamma.nodes)?;

    let (target, class, reference) = match &cfg.target {
        RungeTarget::Reachable => {
            let g = DVector::from_iterator(
                gamma.len(),
                gamma.nodes.iter().map(|&n| {
                    let p = mesh.nodes[n];
                    (2.0 * p.x + 0.5).cos() + 0.5 * (3.0 * p.y).sin()
                }),
            );
            let half = gamma.h_half_norm(&g);
            (basis.field(&g, "reachable target"), TargetClass::Global, Some(half))
        }
        RungeTarget::PointSource { source } => {
            let s = Point2::from(*source);
            if !bb.contains(s) || cfg.d.contains(s) {
                return Err(ExperimentError::InvalidConfig("point source must lie in Ω \\ D".into()));
            }
            let node = (0..mesh.n_nodes())
                .filter(|i| solver.boundary_nodes().binary_search(i).is_err())
                .min_by(|&a, &b| (mesh.nodes[a] - s).norm().total_cmp(&(mesh.nodes[b] - s).norm()))
                .ok_or_else(|| ExperimentError::InvalidConfig("mesh has no interior node".into()))?;
            let mut load = vec![0.0; mesh.n_nodes()];
            load[node] = 1.0;
            let zeros = vec![0.0; solver.boundary_nodes().len()];
            let u = solver.solve(&zeros, Some(&load))?;
            let class =
                if cfg.d_tilde.contains(mesh.nodes[node]) { TargetClass::Interior } else { TargetClass::Enlarged };
            (DiscreteField::new(mesh.clone(), u, "point source target"), class, None)
        }
    };
    let residual = match class {
        TargetClass::Global => equation_residual(&solver, &target, &|p| bb.contains(p)),
        TargetClass::Enlarged => equation_residual(&solver, &target, &|p| cfg.d_tilde.contains(p)),
        TargetClass::Interior => equation_residual(&solver, &target, &|p| cfg.d.contains(p)),
    };
    if residual > RESIDUAL_TOL {
        return Err(ExperimentError::TargetNotSolution(format!(
            "relative residual {residual:.2e} in the target domain"
        )));
    }

    let quad = RegionQuadrature::new(&mesh, &|p| cfg.d.contains(p), Some(cfg.d.aabb()));
    let v_norm = quad.l2_norm(&target);
    if !(v_norm > 0.0) {
        return Err(ExperimentError::TargetNotSolution("target vanishes on D".into()));
    }
    let mass = quad.mass_matrix(&mesh);
    let h_inv = gamma.half_factor_inverse();
    let b: DMatrix<f64> = h_inv.transpose() * basis.gram(&mass) * h_inv;
    let b = (&b + b.transpose()) * 0.5;
    let q = h_inv.transpose() * basis.cross(&mass, &target.values);
    let eig = b.symmetric_eigen();
    let beta = eig.eigenvectors.transpose() * &q;
    let lam: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let lam_max = lam.iter().copied().fold(0.0, f64::max);

    let solve = |alpha: f64| -> DVector<f64> {
        let w = DVector::from_iterator(
            lam.len(),
            lam.iter().zip(beta.iter()).map(|(l, b)| if l + alpha > 0.0 { b / (l + alpha) } else { 0.0 }),
        );
        &eig.eigenvectors * w
    };
    let rel_error = |z: &DVector<f64>| -> f64 {
        let u = basis.values(&(h_inv * z));
        let d: Vec<f64> = u.iter().zip(&target.values).map(|(a, b)| a - b).collect();
        quad.l2_norm(&DiscreteField::new(mesh.clone(), d, "residual")) / v_norm
    };
    let alpha_lo = ALPHA_RANGE.0 * lam_max;
    let floor_error = rel_error(&solve(alpha_lo));

    let mut rows = Vec::with_capacity(cfg.eps_schedule.len());
    for &eps in &cfg.eps_schedule {
        if floor_error > DISCREPANCY_BAND.1 * eps {
            return Err(ExperimentError::ScheduleInfeasible(format!(
                "eps = {eps:e} is below the discretisation floor {floor_error:.3e}"
            )));
        }
        // error is increasing in α; bisect on log α for error = ε
        let (mut lo, mut hi) = (alpha_lo.ln(), (ALPHA_RANGE.1 * lam_max).ln());
        let alpha = if floor_error >= eps {
            alpha_lo
        } else {
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if rel_error(&solve(mid.exp())) < eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo.exp()
        };
        let z = solve(alpha);
        rows.push(RungeRow { eps, alpha, error: rel_error(&z), control_norm: z.norm() / v_norm });
    }

    let growth: Vec<(f64, f64)> = rows.iter().map(|r| (1.0 / r.eps, r.control_norm)).collect();
    let power_fit = fit_power_law(&growth).ok();
    let exp_fit = fit_exponential_growth(&rows.iter().map(|r| (r.eps, r.control_norm)).collect::<Vec<_>>()).ok();
    let monotone_violations = rows.windows(2).filter(|w| w[1].control_norm < w[0].control_norm).count();
    Ok(RungeOutcome {
        class,
        rows,
        floor_error,
        reference_control: reference.map(|r| r / v_norm),
        residual,
        power_fit,
        exp_fit,
        monotone_violations,
    })
}
