use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::basis::HarmonicBasis;
use super::extremal::{ExtremalPoint, PencilProblem, SetGrams};
use super::modulus::{fit_log_modulus, ModulusFit, MIN_MODULUS_POINTS};
use super::{ExperimentError, Result};
use crate::estimator::{ball_l2_norm, region_l2_norm};
use crate::geometry::DomainSpec;
use crate::solver::DiscreteField;

/// Norm bounded by the energy level `E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normaliser {
    L2,
    H1,
}

/// Set on which the propagated norm is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Omega,
    Interior,
}

impl Target {
    pub fn norm(self, u: &DiscreteField, spec: &DomainSpec) -> f64 {
        match self {
            Target::Omega => u.l2_norm(),
            Target::Interior => region_l2_norm(u, &|p| spec.in_d(p), Some(spec.d_bbox())),
        }
    }
}

pub(crate) fn normaliser_norm(kind: Normaliser, u: &DiscreteField) -> f64 {
    match kind {
        Normaliser::L2 => u.l2_norm(),
        Normaliser::H1 => u.h1_norm(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalConfig {
    pub x0: [f64; 2],
    pub r: f64,
    /// Energy level `E`.
    pub energy: f64,
    pub eps: f64,
    pub etas: Vec<f64>,
    pub normaliser: Normaliser,
    pub target: Target,
    pub multipliers_per_decade: usize,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            x0: [0.5, 0.5],
            r: 0.1,
            energy: 1.0,
            eps: 0.0,
            etas: (0..8).map(|k| 10f64.powf(-6.0 + 5.0 * k as f64 / 7.0)).collect(),
            normaliser: Normaliser::H1,
            target: Target::Omega,
            multipliers_per_decade: 6,
        }
    }
}

/// Extremal family: for each `η`, the field maximising the target norm
/// under `‖u‖ ≤ E` and `‖u‖_{B_r(x₀)} ≤ η`.
pub fn extremal_family(
    basis: &HarmonicBasis,
    spec: &DomainSpec,
    cfg: &GlobalConfig,
) -> Result<Vec<(DiscreteField, ExtremalPoint)>> {
    if !(cfg.energy > 0.0) {
        return Err(ExperimentError::InvalidConfig(format!("energy E = {} must be positive", cfg.energy)));
    }
    let g = SetGrams { basis };
    let x0 = Point2::new(cfg.x0[0], cfg.x0[1]);
    let objective = match cfg.target {
        Target::Omega => g.omega(),
        Target::Interior => g.subdomain(spec)?,
    };
    let norm = match cfg.normaliser {
        Normaliser::L2 => g.omega(),
        Normaliser::H1 => g.h1(),
    } / (cfg.energy * cfg.energy);
    // the pencil bounds the scaled normaliser by one and the ball by η
    let pencil = PencilProblem::new(objective, norm, g.ball(x0, cfg.r)?)?;
    let curve = pencil.curve(&cfg.etas, cfg.multipliers_per_decade)?;
    Ok(curve.into_iter().map(|p| (basis.field(&p.coeffs, &format!("extremal eta={:e}", p.eta)), p)).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalRow {
    pub eta: f64,
    pub t: f64,
    /// `‖u‖_target / (E + ε)`
    pub value: f64,
    pub energy_norm: f64,
    pub ball_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalOutcome {
    pub rows: Vec<GlobalRow>,
    pub fit: ModulusFit,
}

/// Log-modulus fit of `‖u‖/(E+ε)` against `t = (η+ε)/(E+ε)`. Each family
/// member must satisfy `‖u‖ ≤ E` and `‖u‖_{B_r(x₀)} ≤ η`; at each `η` the
/// largest value is kept.
pub fn global_propagation_experiment(
    spec: &DomainSpec,
    x0: Point2<f64>,
    r: f64,
    family: &[(f64, DiscreteField)],
    cfg: &GlobalConfig,
) -> Result<GlobalOutcome> {
    const TOL: f64 = 1e-8;
    let (e, eps) = (cfg.energy, cfg.eps);
    let mut rows: Vec<GlobalRow> = Vec::new();
    for (eta, u) in family {
        let energy_norm = normaliser_norm(cfg.normaliser, u);
        let ball_norm = ball_l2_norm(u, x0, r);
        if energy_norm > e * (1.0 + TOL) || ball_norm > eta * (1.0 + TOL) + 1e-300 {
            return Err(ExperimentError::InvalidConfig(format!(
                "field '{}' violates the constraints: energy {energy_norm:e} (E = {e:e}), ball {ball_norm:e} (eta = {eta:e})",
                u.label
            )));
        }
        let row = GlobalRow {
            eta: *eta,
            t: (eta + eps) / (e + eps),
            value: cfg.target.norm(u, spec) / (e + eps),
            energy_norm,
            ball_norm,
        };
        match rows.iter_mut().find(|q| q.eta == *eta) {
            Some(q) if q.value < row.value => *q = row,
            Some(_) => {}
            None => rows.push(row),
        }
    }
    rows.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let usable = rows.iter().filter(|q| q.t < 1.0).count();
    if usable < MIN_MODULUS_POINTS {
        return Err(ExperimentError::InsufficientPoints { needed: MIN_MODULUS_POINTS, got: usable });
    }
    let fit = fit_log_modulus(&rows.iter().map(|q| (q.t, q.value)).collect::<Vec<_>>())?;
    Ok(GlobalOutcome { rows, fit })
}
