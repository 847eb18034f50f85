use nalgebra::{DVector, Point2, Vector2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::basis::HarmonicBasis;
use super::extremal::{smallness_pencil, ExtremalPoint};
use super::{ExperimentError, Result};
use crate::estimator::{propagation_check, PropagationOptions};
use crate::geometry::DomainSpec;
use crate::rng::Rng;
use crate::solver::DiscreteField;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub x0: [f64; 2],
    pub r: f64,
    /// Chain step `h` of the propagation certificate.
    pub step: f64,
    pub eps: f64,
    pub etas: Vec<f64>,
    /// Random boundary-data solutions added to the fit family.
    pub random_fields: usize,
    pub multipliers_per_decade: usize,
    pub propagation: PropagationOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            x0: [0.5, 0.5],
            r: 0.32,
            step: 0.15,
            eps: 1e-8,
            etas: (0..8).map(|k| 10f64.powf(-6.0 + 5.0 * k as f64 / 7.0)).collect(),
            random_fields: 8,
            multipliers_per_decade: 6,
            propagation: PropagationOptions { fit_chains: 6, link_chains: 12, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    /// `‖u‖_D` of the extremising field.
    pub objective: f64,
    pub dual_bound: f64,
    /// `C (η+ε)^δ̂ (1+ε)^{1−δ̂}` with the certified constants.
    pub bound: f64,
    /// `ln bound − ln objective`
    pub slack: f64,
    pub holds: bool,
    pub dual_holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub violations: usize,
    /// `√J C_aug^{1/(1−τ)}`
    pub constant: f64,
    /// `τ^{N_max}`
    pub exponent: f64,
    pub tau: f64,
    pub c_aug: f64,
    pub cubes: usize,
    pub max_steps: usize,
    pub link_violations: usize,
    pub family_size: usize,
}

/// Solution with a random smooth trace, scaled to `‖u‖_Ω = 1`.
pub fn random_solution(basis: &HarmonicBasis, rng: &mut Rng, label: &str) -> Result<DiscreteField> {
    let waves: Vec<(Vector2<f64>, f64, f64)> = (0..4)
        .map(|_| {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let freq = rng.random_range(0.5..4.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp = rng.random_range(-1.0..1.0);
            (Vector2::new(angle.cos(), angle.sin()) * freq, phase, amp)
        })
        .collect();
    let mesh = basis.mesh();
    let g = DVector::from_iterator(
        basis.dim(),
        basis.controls.iter().map(|&n| {
            let p = mesh.nodes[n].coords;
            waves.iter().map(|(k, ph, a)| a * (k.dot(&p) + ph).sin()).sum::<f64>()
        }),
    );
    let u = basis.field(&g, label);
    let n = u.l2_norm();
    if !(n > 0.0) {
        return Err(ExperimentError::EigSolveFailure("random trace produced a zero solution".into()));
    }
    Ok(u.scaled(1.0 / n))
}

/// Extremal objective against the certified propagation curve over an `η`
/// schedule.
pub fn smallness_sweep(
    basis: &HarmonicBasis,
    spec: &DomainSpec,
    cfg: &SweepConfig,
    rng: &mut Rng,
) -> Result<(SweepOutcome, Vec<ExtremalPoint>)> {
    if cfg.etas.is_empty() || cfg.etas.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(ExperimentError::InvalidConfig("etas must be a non-empty list in (0, 1]".into()));
    }
    let x0 = Point2::new(cfg.x0[0], cfg.x0[1]);
    let pencil = smallness_pencil(basis, spec, x0, cfg.r)?;
    let curve = pencil.curve(&cfg.etas, cfg.multipliers_per_decade)?;

    let mut family: Vec<DiscreteField> =
        curve.iter().map(|p| basis.field(&p.coeffs, &format!("extremizer eta={:e}", p.eta))).collect();
    for k in 0..cfg.random_fields {
        family.push(random_solution(basis, rng, &format!("random {k}"))?);
    }
    let out = propagation_check(&family, spec, x0, cfg.r, cfg.step, cfg.eps, &cfg.propagation)?;
    let fit = out.fit.ok_or_else(|| ExperimentError::EigSolveFailure("family has vanishing ball norms".into()))?;
    let tau = fit.delta;
    let max_steps = out.geometry.max_steps;
    let exponent = tau.powi(max_steps as i32);
    let log_c = 0.5 * (out.geometry.cubes as f64).ln() + out.c_aug.ln() / (1.0 - tau);
    let eps = cfg.eps;
    let rows: Vec<SweepRow> = curve
        .iter()
        .map(|p| {
            let log_bound = log_c + exponent * (p.eta + eps).ln() + (1.0 - exponent) * (1.0 + eps).ln();
            let slack = if p.objective > 0.0 { log_bound - p.objective.ln() } else { f64::INFINITY };
            SweepRow {
                eta: p.eta,
                objective: p.objective,
                dual_bound: p.dual_bound,
                bound: log_bound.exp(),
                slack,
                holds: slack >= 0.0,
                dual_holds: p.dual_bound <= log_bound.exp(),
            }
        })
        .collect();
    let outcome = SweepOutcome {
        violations: rows.iter().filter(|r| !r.holds).count(),
        rows,
        constant: log_c.exp(),
        exponent,
        tau,
        c_aug: out.c_aug,
        cubes: out.geometry.cubes,
        max_steps,
        link_violations: out.fields.iter().map(|c| c.link_violations).sum(),
        family_size: family.len(),
    };
    Ok((outcome, curve))
}
