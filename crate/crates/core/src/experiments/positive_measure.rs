use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::basis::HarmonicBasis;
use super::extremal::{ExtremalPoint, PencilProblem, SetGrams};
use super::modulus::{fit_log_modulus, ModulusFit};
use super::{ExperimentError, Result};
use crate::estimator::{propagation_check, PropagationOptions, RegionQuadrature};
use crate::geometry::{Aabb, DomainSpec, Side, Subdomain};

/// A measurable set built from discs and rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasurableSet {
    Disc { center: [f64; 2], radius: f64 },
    Rect { min: [f64; 2], max: [f64; 2] },
    Union { parts: Vec<MeasurableSet> },
}

impl MeasurableSet {
    pub fn contains(&self, p: Point2<f64>) -> bool {
        match self {
            Self::Disc { center, radius } => (p - Point2::from(*center)).norm() < *radius,
            Self::Rect { min, max } => p.x > min[0] && p.x < max[0] && p.y > min[1] && p.y < max[1],
            Self::Union { parts } => parts.iter().any(|s| s.contains(p)),
        }
    }

    pub fn bbox(&self) -> Aabb {
        match self {
            Self::Disc { center, radius } => Aabb::new(
                Point2::new(center[0] - radius, center[1] - radius),
                Point2::new(center[0] + radius, center[1] + radius),
            ),
            Self::Rect { min, max } => Aabb::new(Point2::from(*min), Point2::from(*max)),
            Self::Union { parts } => parts
                .iter()
                .map(Self::bbox)
                .reduce(|a, b| {
                    Aabb::new(
                        Point2::new(a.min.x.min(b.min.x), a.min.y.min(b.min.y)),
                        Point2::new(a.max.x.max(b.max.x), a.max.y.max(b.max.y)),
                    )
                })
                .unwrap_or_else(|| Aabb::new(Point2::origin(), Point2::origin())),
        }
    }

    /// Largest ball found inside a single disc or rectangle of the set.
    pub fn inscribed_ball(&self) -> Option<(Point2<f64>, f64)> {
        match self {
            Self::Disc { center, radius } => (*radius > 0.0).then(|| (Point2::from(*center), *radius)),
            Self::Rect { min, max } => {
                let r = 0.5 * (max[0] - min[0]).min(max[1] - min[1]);
                (r > 0.0).then(|| (Point2::new(0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])), r))
            }
            Self::Union { parts } => parts.iter().filter_map(Self::inscribed_ball).max_by(|a, b| a.1.total_cmp(&b.1)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PositiveMeasureConfig {
    pub set: MeasurableSet,
    /// Interior margin: the norm is measured on `Ω_h`, and the set must lie
    /// in `(Ω₊)_h`.
    pub h: f64,
    pub etas: Vec<f64>,
    pub eps: f64,
    /// Chain step; capped at `min(h, 0.49 r)` for the reduced ball radius `r`.
    pub step: f64,
    pub multipliers_per_decade: usize,
    pub propagation: PropagationOptions,
}

impl Default for PositiveMeasureConfig {
    fn default() -> Self {
        Self {
            set: MeasurableSet::Disc { center: [0.5, 0.675], radius: 0.17 },
            h: 0.15,
            etas: (0..8).map(|k| 10f64.powf(-6.0 + 5.0 * k as f64 / 7.0)).collect(),
            eps: 1e-8,
            step: 0.15,
            multipliers_per_decade: 6,
            propagation: PropagationOptions { fit_chains: 6, link_chains: 12, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositiveMeasureRow {
    pub eta: f64,
    /// `‖u‖_{Ω_h}` of the extremal field.
    pub objective: f64,
    pub dual_bound: f64,
    pub set_norm: f64,
    pub ball_norm: f64,
    /// Propagation certificate from the reduced ball to `Ω_h`.
    pub certified_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositiveMeasureOutcome {
    /// Measure of the set on the mesh.
    pub measure: f64,
    pub ball_center: [f64; 2],
    pub ball_radius: f64,
    pub step: f64,
    pub rows: Vec<PositiveMeasureRow>,
    /// `‖u‖_{Ω_h} ≤ C |log η|^{−μ}`
    pub fit: ModulusFit,
    pub certificate_violations: usize,
}

const MAX_ENERGY_TOL: f64 = 1e-9;

/// Propagation from a set of positive measure to `Ω_h`, over extremal fields
/// with `‖u‖_Ω ≤ 1` and `‖u‖_E ≤ η`.
pub fn positive_measure_experiment(
    basis: &HarmonicBasis,
    spec: &DomainSpec,
    cfg: &PositiveMeasureConfig,
) -> Result<(PositiveMeasureOutcome, Vec<ExtremalPoint>)> {
    let mesh = basis.mesh();
    let set = &cfg.set;
    let quad = RegionQuadrature::new(mesh, &|p| set.contains(p), Some(set.bbox()));
    let resolution = mesh.max_diameter();
    if quad.measure() < 0.5 * resolution * resolution {
        return Err(ExperimentError::EmptySet(format!(
            "|E| = {:e} is below the mesh resolution {resolution:e}",
            quad.measure()
        )));
    }
    let interior =
        DomainSpec::new(spec.omega.clone(), (*spec.interface).clone(), Subdomain::Inset { h: cfg.h }, cfg.h)?;
    // E must sit in the plus side at distance h from ∂Ω
    let bb = set.bbox();
    let n = 64;
    for i in 0..=n {
        for j in 0..=n {
            let p =
                Point2::new(bb.min.x + bb.width() * i as f64 / n as f64, bb.min.y + bb.height() * j as f64 / n as f64);
            if set.contains(p) && (spec.side(p) != Side::Plus || !interior.in_d(p)) {
                return Err(ExperimentError::InvalidConfig(format!(
                    "set point ({:.4}, {:.4}) is outside the plus side at margin h = {}",
                    p.x, p.y, cfg.h
                )));
            }
        }
    }
    let (x0, r) = set.inscribed_ball().ok_or_else(|| ExperimentError::EmptySet("set contains no ball".into()))?;
    let step = cfg.step.min(cfg.h).min(0.49 * r);

    let g = SetGrams { basis };
    let pencil = PencilProblem::new(g.subdomain(&interior)?, g.omega(), basis.gram(&quad.mass_matrix(mesh)))?;
    let curve = pencil.curve(&cfg.etas, cfg.multipliers_per_decade)?;
    let fields: Vec<_> = curve.iter().map(|p| basis.field(&p.coeffs, &format!("extremal eta={:e}", p.eta))).collect();
    let cert = propagation_check(&fields, &interior, x0, r, step, cfg.eps, &cfg.propagation)?;

    let rows: Vec<PositiveMeasureRow> = curve
        .iter()
        .zip(&cert.fields)
        .map(|(p, c)| PositiveMeasureRow {
            eta: p.eta,
            objective: p.objective,
            dual_bound: p.dual_bound,
            set_norm: p.small_norm,
            ball_norm: c.report.n1,
            certified_bound: c.bound,
        })
        .collect();
    debug_assert!(rows.iter().all(|r| r.set_norm <= r.eta * (1.0 + MAX_ENERGY_TOL)));
    let fit = fit_log_modulus(&rows.iter().map(|r| (r.eta, r.objective)).collect::<Vec<_>>())?;
    let outcome = PositiveMeasureOutcome {
        measure: quad.measure(),
        ball_center: [x0.x, x0.y],
        ball_radius: r,
        step,
        certificate_violations: cert.fields.iter().filter(|c| !c.report.holds()).count(),
        rows,
        fit,
    };
    Ok((outcome, curve))
}
