use nalgebra::Point2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_exponent, ExponentFit, InequalityReport, NormSample, PropagationBound};
use super::norms::{ball_l2_norm, region_l2_norm};
use super::surface::sigma_in_omega;
use super::three_ball::{ball_quadrature, BallRadii, ThreeBallProbe};
use super::{EstimatorError, Result};
use crate::geometry::{ball_chain, cube_cover, BallChain, DomainSpec, GeometryError};
use crate::solver::DiscreteField;

const BALL_BOUNDARY_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationOptions {
    /// Largest admissible step; `None` leaves `h` unrestricted.
    pub h0: Option<f64>,
    /// Exponent bounds `[δ_min, 1 − δ_min]` of the three-ball fit.
    pub delta_min: f64,
    /// Chains whose centers feed the three-ball fit.
    pub fit_chains: usize,
    /// Chains verified link by link.
    pub link_chains: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self { h0: None, delta_min: 0.01, fit_chains: 12, link_chains: 48 }
    }
}

/// Geometry of the chain argument, shared by every field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainGeometry {
    pub radii: BallRadii,
    /// Number of cubes `J` covering `D`.
    pub cubes: usize,
    /// `2|Ω| / (4r₁²)`
    pub cube_bound: f64,
    /// Longest chain `N_max`.
    pub max_steps: usize,
    /// `|Ω| / (ω₂ r₁²)`
    pub steps_bound: f64,
    /// Worst `|γ_{k+1} − γ_k| + r₁ − r₂` over all chains.
    pub nesting_excess: f64,
}

/// Certificate for one field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldCertificate {
    /// `N₁ = ‖u‖_{B_r(x₀)}`, `N₂ = ‖u‖_D`, `N₃ = ‖u‖_Ω` with the
    /// certificate constant `√J C_aug^{1/(1−τ)}` and exponent `τ^{N_max}`.
    pub report: InequalityReport,
    pub bound: f64,
    pub links_checked: usize,
    pub link_violations: usize,
    /// Least log-margin of `m_{k+1} ≤ C_aug (m_k+ε)^τ (‖u‖_Ω+ε)^{1−τ}`.
    pub worst_link_slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagationOutcome {
    pub geometry: ChainGeometry,
    /// Three-ball `(Ĉ, τ̂)` pooled over the family; `None` when every
    /// sampled ball norm vanishes.
    pub fit: Option<ExponentFit>,
    /// `max(Ĉ, 1)`
    pub c_raw: f64,
    /// `max(Ĉ, 1) + 1` when `ε > 0`, absorbing `ε` on the left of each link.
    pub c_aug: f64,
    pub fields: Vec<FieldCertificate>,
    /// Theorem-shaped constants implied by the certificate: `C₁ = √(2·225)
    /// C_aug^{1/(1−τ)}`, `C₂ = 1/(ω₂ (1/30)²)`, so that the shaped bound
    /// dominates the certificate for every admissible `J` and `N`.
    pub bound: Option<PropagationBound>,
    /// Direct fit over `(‖u‖_{B_r}, ‖u‖_D, ‖u‖_Ω)` across the family.
    pub empirical: Option<ExponentFit>,
}

fn infeasible(msg: String) -> EstimatorError {
    EstimatorError::Geometry(GeometryError::GeometryInfeasible(msg))
}

/// Evenly spaced indices into `0..n`, always including `must`.
fn spread(n: usize, k: usize, must: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = if k >= n { (0..n).collect() } else { (0..k).map(|i| i * n / k).collect() };
    if !idx.contains(&must) {
        idx.push(must);
    }
    idx
}

/// Propagation of smallness from `B_r(x₀)` to `D` along ball chains with
/// radii `(h/30, h/10, h/2)`, certified with constants fitted on the family.
pub fn propagation_check(
    fields: &[DiscreteField],
    spec: &DomainSpec,
    x0: Point2<f64>,
    r: f64,
    h: f64,
    eps: f64,
    opts: &PropagationOptions,
) -> Result<PropagationOutcome> {
    if fields.is_empty() {
        return Err(EstimatorError::InsufficientSamples { needed: 1, got: 0 });
    }
    if !(h > 0.0 && r > 0.0 && eps >= 0.0) {
        return Err(EstimatorError::InvalidParams(format!("need h, r > 0 and eps >= 0; got h={h}, r={r}, eps={eps}")));
    }
    if let Some(h0) = opts.h0 {
        if h >= h0 {
            return Err(infeasible(format!("h = {h} is not below h0 = {h0}")));
        }
    }
    if h >= r / 2.0 {
        return Err(infeasible(format!("h = {h} must be below r/2 = {}", r / 2.0)));
    }
    if h > spec.h {
        return Err(infeasible(format!("h = {h} exceeds the domain margin {}", spec.h)));
    }
    let on_circle = (0..BALL_BOUNDARY_SAMPLES).all(|i| {
        let t = std::f64::consts::TAU * i as f64 / BALL_BOUNDARY_SAMPLES as f64;
        spec.in_d(x0 + nalgebra::Vector2::new(t.cos(), t.sin()) * r)
    });
    if !spec.in_d(x0) || !on_circle {
        return Err(infeasible(format!("B_{r}(({:.4}, {:.4})) is not contained in D", x0.x, x0.y)));
    }

    let radii = BallRadii::for_step(h)?;
    let r1 = radii.r1;
    let omega_area = spec.omega.area();
    let cover = cube_cover(spec, r1)?;
    let chains: Vec<BallChain> =
        cover.cubes.par_iter().map(|c| ball_chain(spec, x0, c.center, r1)).collect::<std::result::Result<_, _>>()?;
    let (longest, max_steps) = chains
        .iter()
        .enumerate()
        .map(|(i, c)| (i, c.steps()))
        .max_by_key(|&(i, s)| (s, std::cmp::Reverse(i)))
        .unwrap_or((0, 0));
    let geometry = ChainGeometry {
        radii,
        cubes: cover.len(),
        cube_bound: cover.count_bound(omega_area),
        max_steps,
        steps_bound: omega_area / (crate::unit_ball_volume(crate::DIM) * r1 * r1),
        nesting_excess: chains.iter().map(|c| c.nesting_excess(radii.r2)).fold(f64::NEG_INFINITY, f64::max),
    };

    let mesh = &fields[0].mesh;
    let omega_norms: Vec<f64> = fields.iter().map(|f| f.l2_norm()).collect();

    // three-ball samples at every center of the fit chains
    let fit_idx = spread(chains.len(), opts.fit_chains, longest);
    let mut fit_centers: Vec<Point2<f64>> = fit_idx.iter().flat_map(|&i| chains[i].centers.iter().copied()).collect();
    fit_centers.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    fit_centers.dedup();
    let probes: Vec<ThreeBallProbe> =
        fit_centers.par_iter().map(|&c| ThreeBallProbe::new(mesh, &spec.omega, c, radii)).collect::<Result<_>>()?;
    let samples: Vec<NormSample> =
        probes.par_iter().flat_map_iter(|p| fields.iter().map(|f| p.sample(f, eps))).collect();
    let fit = match fit_exponent(&samples, opts.delta_min) {
        Ok(f) => Some(f),
        Err(EstimatorError::DegenerateSamples(_)) if samples.iter().all(|s| s.n2 == 0.0) => None,
        Err(e) => return Err(e),
    };
    let c_raw = fit.map_or(1.0, |f| f.c.max(1.0));
    let c_aug = if eps > 0.0 { c_raw + 1.0 } else { c_raw };

    // link-by-link verification on a subset of chains
    let link_idx = spread(chains.len(), opts.link_chains, longest);
    let link_norms: Vec<Vec<Vec<f64>>> = link_idx
        .par_iter()
        .map(|&i| {
            chains[i]
                .centers
                .iter()
                .map(|&c| {
                    let q = ball_quadrature(mesh, c, r1);
                    fields.iter().map(|f| q.l2_norm(f)).collect()
                })
                .collect()
        })
        .collect();

    let certs: Vec<FieldCertificate> = fields
        .par_iter()
        .enumerate()
        .map(|(fi, field)| {
            let n_omega = omega_norms[fi];
            let n_r = ball_l2_norm(field, x0, r);
            let n_d = region_l2_norm(field, &|p| spec.in_d(p), Some(spec.d_bbox()));
            let sample = NormSample::new(n_r, n_d, n_omega, eps);
            let Some(f) = fit else {
                let report = InequalityReport::with_constants(sample, 1.0, 0.5, None);
                return FieldCertificate {
                    report,
                    bound: 0.0,
                    links_checked: 0,
                    link_violations: 0,
                    worst_link_slack: 0.0,
                };
            };
            let tau = f.delta;
            let (mut checked, mut violations, mut worst) = (0, 0, f64::INFINITY);
            for chain in &link_norms {
                for w in chain.windows(2) {
                    let (m, next) = (w[0][fi], w[1][fi]);
                    checked += 1;
                    if next == 0.0 {
                        continue;
                    }
                    let s = c_aug.ln() + tau * (m + eps).ln() + (1.0 - tau) * (n_omega + eps).ln() - next.ln();
                    worst = worst.min(s);
                    if s < 0.0 {
                        violations += 1;
                    }
                }
            }
            let exponent = tau.powi(max_steps as i32);
            let log_c = 0.5 * (geometry.cubes as f64).ln() + c_aug.ln() / (1.0 - tau);
            let mut report = InequalityReport::with_constants(sample, log_c.exp(), exponent, None);
            let log_bound = log_c + exponent * (n_r + eps).ln() + (1.0 - exponent) * (n_omega + eps).ln();
            if n_d > 0.0 {
                report.slack = log_bound - n_d.ln();
            }
            FieldCertificate {
                report,
                bound: log_bound.exp(),
                links_checked: checked,
                link_violations: violations,
                worst_link_slack: if worst.is_finite() { worst } else { 0.0 },
            }
        })
        .collect();

    let bound = match fit {
        Some(f) => Some(PropagationBound::new(
            450f64.sqrt() * c_aug.powf(1.0 / (1.0 - f.delta)),
            900.0 / std::f64::consts::PI,
            f.delta,
            h,
            omega_area,
            sigma_in_omega(spec),
            crate::DIM,
        )?),
        None => None,
    };
    let empirical = if fields.len() >= 3 {
        let fam: Vec<NormSample> = certs.iter().map(|c| c.report.sample()).collect();
        fit_exponent(&fam, opts.delta_min).ok()
    } else {
        None
    };
    Ok(PropagationOutcome { geometry, fit, c_raw, c_aug, fields: certs, bound, empirical })
}
