use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Point2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::HarmonicBasis;
use super::boundary::BoundarySpace;
use super::modulus::{fit_log_modulus, fit_power_law, ModulusFit, PowerFit};
use super::{ExperimentError, Result};
use crate::estimator::RegionQuadrature;
use crate::geometry::Aabb;
use crate::rng::stream;
use crate::solver::{DirichletSolver, DiscreteField, Mesh, PiecewiseCoefficients};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CauchyConfig {
    /// Boundary markers whose edges form the accessible part `Γ`.
    pub gamma_markers: Vec<u32>,
    /// Noise levels; `0` gives the noiseless run.
    pub etas: Vec<f64>,
    /// Fixed Tikhonov weight; `None` selects it by the discrepancy principle.
    pub alpha: Option<f64>,
    /// Discrepancy target `τ (1 + ‖DtN‖) η` for the flux misfit, where the
    /// Dirichlet-to-Neumann norm on `Γ` accounts for the trace noise.
    pub morozov_tau: f64,
    /// Energy bound `E₀`; defaults to the `H¹` norm of the ground truth.
    pub energy: Option<f64>,
    /// Margins `h` of the interior sets `Ω_h`.
    pub h_schedule: Vec<f64>,
    pub seed: u64,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        Self {
            gamma_markers: vec![crate::solver::MARKER_BOTTOM, crate::solver::MARKER_RIGHT, crate::solver::MARKER_LEFT],
            etas: (0..8).map(|k| 10f64.powf(-5.0 + 4.0 * k as f64 / 7.0)).collect(),
            alpha: None,
            morozov_tau: 1.5,
            energy: None,
            h_schedule: vec![0.3, 0.2, 0.1],
            seed: 0,
        }
    }
}

/// One `(η, h)` cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CauchyRow {
    pub eta: f64,
    pub h: f64,
    /// `‖u_rec − u_true‖_{L²(Ω_h)}`
    pub error: f64,
    pub alpha: f64,
    /// `H^{−1/2}(Γ)` flux misfit of the reconstruction.
    pub misfit: f64,
    /// `H^{1/2}` norm of the reconstructed control on `∂Ω \ Γ`.
    pub control_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HolderFit {
    pub h: f64,
    pub fit: PowerFit,
    /// Adjacent `η` pairs where the error decreases as `η` grows.
    pub eta_violations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CauchyOutcome {
    pub rows: Vec<CauchyRow>,
    /// Forward discretisation error `‖u_h − u‖_{L²(Ω_h)}` per `h`, when an
    /// exact solution is supplied.
    pub fem_error: Vec<(f64, f64)>,
    pub holder: Vec<HolderFit>,
    /// `‖u_rec − u_true‖_Ω / (E₀+ε)` against `t = η / E₀`.
    pub modulus: Option<ModulusFit>,
    /// `(η, h)` cells where the error shrinks as `Ω_h` grows.
    pub h_violations: usize,
    pub energy: f64,
    /// `1 + ‖DtN‖`, bounding the flux-data error by this multiple of `η`.
    pub noise_factor: f64,
    pub gamma_nodes: usize,
    pub control_nodes: usize,
    /// Singular values of the whitened forward map, largest first.
    pub singular_values: Vec<f64>,
}

/// Relative size below which singular values make the unregularised
/// normal equations numerically singular.
const SINGULAR_RATIO: f64 = 1e-8;
const MOROZOV_STEPS: usize = 20;
/// Search range of `α / σ_max²` for the discrepancy principle.
const ALPHA_RANGE: (f64, f64) = (1e-14, 1e2);

struct Whitened {
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    v_t: DMatrix<f64>,
}

impl Whitened {
    fn coeffs(&self, b: &DVector<f64>) -> DVector<f64> {
        self.u.transpose() * b
    }

    fn misfit(&self, beta: &DVector<f64>, rest: f64, alpha: f64) -> f64 {
        let s: f64 = self
            .sigma
            .iter()
            .zip(beta.iter())
            .map(|(s, b)| {
                let f = alpha / (s * s + alpha);
                f * f * b * b
            })
            .sum();
        (s + rest * rest).sqrt()
    }

    fn solve(&self, beta: &DVector<f64>, alpha: f64) -> DVector<f64> {
        let w = DVector::from_iterator(
            self.sigma.len(),
            self.sigma.iter().zip(beta.iter()).map(|(s, b)| {
                let d = s * s + alpha;
                if d > 0.0 {
                    s * b / d
                } else {
                    0.0
                }
            }),
        );
        self.v_t.transpose() * w
    }
}

/// Data completion from noisy Cauchy data on `Γ`: the trace on `Γ` is
/// imposed, the trace on `∂Ω \ Γ` is recovered by Tikhonov least squares of
/// the conormal-flux misfit in `H^{−1/2}(Γ)` with an `H^{1/2}` penalty.
pub fn cauchy_experiment(
    mesh: Arc<Mesh>,
    coeffs: &PiecewiseCoefficients,
    cfg: &CauchyConfig,
    truth: &DiscreteField,
    exact: Option<&(dyn Fn(Point2<f64>) -> f64 + Sync)>,
) -> Result<CauchyOutcome> {
    if cfg.etas.iter().any(|&e| !(e >= 0.0)) || cfg.etas.is_empty() {
        return Err(ExperimentError::InvalidConfig("etas must be non-negative".into()));
    }
    if let Some(a) = cfg.alpha {
        if !(a >= 0.0) {
            return Err(ExperimentError::InvalidConfig(format!("alpha = {a} must be non-negative")));
        }
    }
    let solver = DirichletSolver::new(mesh.clone(), coeffs)?;
    let gamma = BoundarySpace::new(&mesh, &mesh.boundary_nodes_with(&cfg.gamma_markers))?;
    let rest: Vec<usize> =
        mesh.boundary_nodes().into_iter().filter(|n| gamma.nodes.binary_search(n).is_err()).collect();
    let ctrl = BoundarySpace::new(&mesh, &rest)?;
    let basis = HarmonicBasis::new(mesh.clone(), coeffs, &ctrl.nodes)?;

    let flux = basis.flux_matrix(&gamma.nodes);
    let a = gamma.minus_half_factor() * flux * ctrl.half_factor_inverse();
    let svd = a.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let wh = Whitened {
        u: DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]),
        sigma: DVector::from_iterator(order.len(), order.iter().map(|&i| svd.singular_values[i])),
        v_t: DMatrix::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]),
    };
    // trace noise on Γ reaches the flux data through the Dirichlet-to-Neumann map
    let gamma_basis = HarmonicBasis::new(mesh.clone(), coeffs, &gamma.nodes)?;
    let dtn = gamma.minus_half_factor() * gamma_basis.flux_matrix(&gamma.nodes) * gamma.half_factor_inverse();
    let noise_factor = 1.0 + dtn.singular_values().max();
    let s_max = wh.sigma.max();
    let s_min = wh.sigma.min();

    let boundary = solver.boundary_nodes();
    let slot = |n: usize| boundary.binary_search(&n).expect("boundary node");
    let true_flux = solver.boundary_flux(&truth.values, None);
    let true_trace = gamma.restrict(&truth.values);
    let true_gflux = DVector::from_iterator(gamma.len(), gamma.nodes.iter().map(|&n| true_flux[slot(n)]));

    let energy = cfg.energy.unwrap_or_else(|| truth.h1_norm());
    let bbox = mesh.bbox();
    let quads: Vec<(f64, RegionQuadrature)> = cfg
        .h_schedule
        .iter()
        .map(|&h| {
            let inner =
                Aabb::new(Point2::new(bbox.min.x + h, bbox.min.y + h), Point2::new(bbox.max.x - h, bbox.max.y - h));
            let omega_h = |p: Point2<f64>| {
                p.x - bbox.min.x > h && bbox.max.x - p.x > h && p.y - bbox.min.y > h && bbox.max.y - p.y > h
            };
            (h, RegionQuadrature::new(&mesh, &omega_h, Some(inner)))
        })
        .collect();
    if let Some((h, _)) = quads.iter().find(|(_, q)| q.measure() <= 0.0) {
        return Err(ExperimentError::EmptySet(format!("Ω_h is empty at h = {h}")));
    }
    let whole = RegionQuadrature::whole(&mesh);
    let measure = |q: &RegionQuadrature, u: &DiscreteField| match exact {
        Some(f) => q.l2_error(u, f),
        None => {
            let d = DiscreteField::new(
                mesh.clone(),
                u.values.iter().zip(&truth.values).map(|(a, b)| a - b).collect(),
                "diff",
            );
            q.l2_norm(&d)
        }
    };

    struct Run {
        eta: f64,
        alpha: f64,
        misfit: f64,
        control_norm: f64,
        errors: Vec<f64>,
        omega_error: f64,
    }
    let runs: Vec<Run> = cfg
        .etas
        .par_iter()
        .enumerate()
        .map(|(k, &eta)| -> Result<Run> {
            let mut rng = stream(cfg.seed, k as u64);
            let trace = &true_trace + gamma.trace_noise(&mut rng, eta);
            let phi = &true_gflux + gamma.flux_noise(&mut rng, eta);
            let mut g_full = vec![0.0; boundary.len()];
            for (i, &n) in gamma.nodes.iter().enumerate() {
                g_full[slot(n)] = trace[i];
            }
            let u_gamma = solver.solve(&g_full, None)?;
            let f_all = solver.boundary_flux(&u_gamma, None);
            let f0 = DVector::from_iterator(gamma.len(), gamma.nodes.iter().map(|&n| f_all[slot(n)]));
            let b = gamma.minus_half_factor() * (phi - f0);
            let beta = wh.coeffs(&b);
            let rest = (b.norm_squared() - beta.norm_squared()).max(0.0).sqrt();

            let alpha = match cfg.alpha {
                Some(0.0) => {
                    if s_min <= SINGULAR_RATIO * s_max {
                        return Err(ExperimentError::IllPosedFailure(format!(
                            "unregularised normal equations have condition {:.2e}",
                            (s_max / s_min).powi(2)
                        )));
                    }
                    0.0
                }
                Some(a) => a,
                None => {
                    let target = cfg.morozov_tau * noise_factor * eta;
                    let (mut lo, mut hi) = ((ALPHA_RANGE.0 * s_max * s_max).ln(), (ALPHA_RANGE.1 * s_max * s_max).ln());
                    if wh.misfit(&beta, rest, lo.exp()) >= target {
                        lo.exp()
                    } else if wh.misfit(&beta, rest, hi.exp()) <= target {
                        hi.exp()
                    } else {
                        for _ in 0..MOROZOV_STEPS {
                            let mid = 0.5 * (lo + hi);
                            if wh.misfit(&beta, rest, mid.exp()) < target {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        (0.5 * (lo + hi)).exp()
                    }
                }
            };
            let z = wh.solve(&beta, alpha);
            let c = ctrl.half_factor_inverse() * &z;
            let rec: Vec<f64> = basis.values(&c).iter().zip(&u_gamma).map(|(s, g)| s + g).collect();
            let rec = DiscreteField::new(mesh.clone(), rec, format!("reconstruction eta={eta:e}"));
            Ok(Run {
                eta,
                alpha,
                misfit: wh.misfit(&beta, rest, alpha),
                control_norm: z.norm(),
                errors: quads.iter().map(|(_, q)| measure(q, &rec)).collect(),
                omega_error: measure(&whole, &rec),
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(runs.len() * quads.len());
    for r in &runs {
        for ((h, _), e) in quads.iter().zip(&r.errors) {
            rows.push(CauchyRow {
                eta: r.eta,
                h: *h,
                error: *e,
                alpha: r.alpha,
                misfit: r.misfit,
                control_norm: r.control_norm,
            });
        }
    }
    let fem_error = match exact {
        Some(f) => quads.iter().map(|(h, q)| (*h, q.l2_error(truth, f))).collect(),
        None => Vec::new(),
    };

    let mut by_eta: Vec<&Run> = runs.iter().collect();
    by_eta.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let holder = quads
        .iter()
        .enumerate()
        .filter_map(|(j, (h, _))| {
            let pts: Vec<(f64, f64)> = by_eta.iter().filter(|r| r.eta > 0.0).map(|r| (r.eta, r.errors[j])).collect();
            let fit = fit_power_law(&pts).ok()?;
            let eta_violations = pts.windows(2).filter(|w| w[1].1 < w[0].1).count();
            Some(HolderFit { h: *h, fit, eta_violations })
        })
        .collect();
    let mut h_order: Vec<usize> = (0..quads.len()).collect();
    h_order.sort_by(|&i, &j| quads[j].0.total_cmp(&quads[i].0));
    let h_violations =
        runs.iter().map(|r| h_order.windows(2).filter(|w| r.errors[w[1]] < r.errors[w[0]]).count()).sum();
    let modulus_pts: Vec<(f64, f64)> =
        by_eta.iter().filter(|r| r.eta > 0.0).map(|r| (r.eta / energy, r.omega_error / energy)).collect();
    let modulus = fit_log_modulus(&modulus_pts).ok();

    Ok(CauchyOutcome {
        rows,
        fem_error,
        holder,
        modulus,
        h_violations,
        energy,
        noise_factor,
        gamma_nodes: gamma.len(),
        control_nodes: ctrl.len(),
        singular_values: wh.sigma.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, Interface};
    use crate::solver::{build_mesh, ExactFlatSolution};

    fn setup(size: f64) -> (Arc<Mesh>, PiecewiseCoefficients, DiscreteField, ExactFlatSolution) {
        let spec = DomainSpec::unit_square(Interface::Flat { y0: 0.5 }, 0.1).unwrap();
        let mesh = Arc::new(build_mesh(&spec, size).unwrap());
        let coeffs = PiecewiseCoefficients::constant(2.0, 1.0).unwrap();
        let exact = ExactFlatSolution::new(2.0, 1.0, 1.0, 0.5).unwrap();
        let solver = DirichletSolver::new(mesh.clone(), &coeffs).unwrap();
        let truth = solver.solve_trace(|p| exact.value(p), None).unwrap();
        (mesh, coeffs, truth, exact)
    }

    #[test]
    fn noiseless_reconstruction_reaches_fem_error() {
        let (mesh, coeffs, truth, exact) = setup(0.05);
        let cfg = CauchyConfig { etas: vec![0.0], gamma_markers: vec![1, 2, 4], ..Default::default() };
        let f = |p: Point2<f64>| exact.value(p);
        let out = cauchy_experiment(mesh, &coeffs, &cfg, &truth, Some(&f)).unwrap();
        for (row, (_, fem)) in out.rows.iter().zip(&out.fem_error) {
            assert!(row.error < 10.0 * fem, "{} vs {}", row.error, fem);
        }
    }

    #[test]
    fn zero_alpha_is_ill_posed() {
        let (mesh, coeffs, truth, _) = setup(0.08);
        let cfg = CauchyConfig { etas: vec![1e-3], alpha: Some(0.0), ..Default::default() };
        let e = cauchy_experiment(mesh, &coeffs, &cfg, &truth, None);
        assert!(matches!(e, Err(ExperimentError::IllPosedFailure(_))));
    }

    #[test]
    fn discrepancy_and_trends() {
        let (mesh, coeffs, truth, _) = setup(0.06);
        let cfg = CauchyConfig::default();
        let out = cauchy_experiment(mesh, &coeffs, &cfg, &truth, None).unwrap();
        assert_eq!(out.rows.len(), 8 * 3);
        for r in &out.rows {
            assert!(
                r.misfit <= cfg.morozov_tau * out.noise_factor * r.eta * (1.0 + 1e-3) || r.alpha <= ALPHA_RANGE.0 * 1e6
            );
        }
        for hf in &out.holder {
            assert!(hf.eta_violations <= 1, "h = {}: {} violations", hf.h, hf.eta_violations);
            assert!(hf.fit.exponent > 0.0);
        }
        assert!(out.modulus.is_some());
    }
}
