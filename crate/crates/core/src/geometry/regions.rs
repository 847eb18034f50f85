use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::{GeometryError, InterfaceChart, Result};

/// Carleman constants and radii defining the three regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeRegionParams {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta: f64,
    pub delta: f64,
    /// Cap on `delta`.
    pub delta0: f64,
    pub tau0: f64,
    #[serde(rename = "C")]
    pub carleman_c: f64,
    #[serde(rename = "R_cap")]
    pub r_cap: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    pub theta: f64,
}

impl Default for ThreeRegionParams {
    fn default() -> Self {
        Self {
            alpha_plus: 1.0,
            alpha_minus: 1.0,
            beta: 1.0,
            delta: 0.5,
            delta0: 1.0,
            tau0: 1.0,
            carleman_c: 1.0,
            r_cap: 1.0,
            r1: 0.4,
            r2: 0.1,
            theta: 1.0,
        }
    }
}

impl ThreeRegionParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_plus", self.alpha_plus),
            ("alpha_minus", self.alpha_minus),
            ("beta", self.beta),
            ("delta", self.delta),
            ("delta0", self.delta0),
            ("tau0", self.tau0),
            ("C", self.carleman_c),
            ("R_cap", self.r_cap),
            ("R1", self.r1),
            ("R2", self.r2),
            ("theta", self.theta),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(GeometryError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.delta >= self.delta0 {
            return Err(GeometryError::InvalidParams(format!(
                "delta = {} must be below delta0 = {}",
                self.delta, self.delta0
            )));
        }
        if self.r1 > self.r_cap || self.r2 > self.r_cap {
            return Err(GeometryError::InvalidParams(format!(
                "R1 = {}, R2 = {} must not exceed R = {}",
                self.r1, self.r2, self.r_cap
            )));
        }
        if self.theta > 1.0 {
            return Err(GeometryError::InvalidParams(format!("theta = {} must be in (0,1]", self.theta)));
        }
        Ok(())
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    /// `a = α₊ / δ`
    pub fn a(&self) -> f64 {
        self.alpha_plus / self.delta
    }

    /// Interpolation exponent `R₂ / (2R₁ + 3R₂)`.
    pub fn xi(&self) -> f64 {
        self.r2 / (2.0 * self.r1 + 3.0 * self.r2)
    }

    /// Complementary exponent `(2R₁ + 2R₂) / (2R₁ + 3R₂)`.
    pub fn xi_complement(&self) -> f64 {
        (2.0 * self.r1 + 2.0 * self.r2) / (2.0 * self.r1 + 3.0 * self.r2)
    }

    pub fn rho1(&self) -> f64 {
        self.alpha_minus * self.delta / (self.delta + self.beta)
    }

    /// Largest `r` with `2ζr + ζ²r² < 1/2`; infinite when `ζ = 0`.
    pub fn rho2(&self, zeta_norm: f64) -> f64 {
        if zeta_norm <= 0.0 {
            f64::INFINITY
        } else {
            (1.5f64.sqrt() - 1.0) / zeta_norm
        }
    }

    pub fn rho3(&self) -> f64 {
        2.0 * self.alpha_minus * self.delta / self.beta
    }

    /// `α₋² − 8βR₂`
    pub fn u3_radicand(&self) -> f64 {
        self.alpha_minus * self.alpha_minus - 8.0 * self.beta * self.r2
    }

    /// Lowest height of the component of `{z ≥ −4R₂}` containing the origin,
    /// i.e. the upper root of `z(0, y) = −4R₂`. Falls back to the vertex of
    /// `y ↦ z(0, y)` when that level is not attained.
    pub fn y_floor(&self) -> f64 {
        let disc = self.u3_radicand();
        if disc >= 0.0 {
            -8.0 * self.delta * self.r2 / (self.alpha_minus + disc.sqrt())
        } else {
            -self.alpha_minus * self.delta / self.beta
        }
    }

    /// `R₀² = 2α₋R₁/a + βR₁²/(a²δ) + 8δR₂`
    pub fn r0_squared(&self) -> f64 {
        let a = self.a();
        2.0 * self.alpha_minus * self.r1 / a
            + self.beta * self.r1 * self.r1 / (a * a * self.delta)
            + 8.0 * self.delta * self.r2
    }
}

/// `z(x, y) = α₋y/δ + βy²/(2δ²) − |x|²/(2δ)` in flattened coordinates.
pub fn eval_z(params: &ThreeRegionParams, p: Point2<f64>) -> f64 {
    let d = params.delta;
    params.alpha_minus * p.y / d + params.beta * p.y * p.y / (2.0 * d * d) - p.x * p.x / (2.0 * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    U1,
    U2,
    U3,
}

impl RegionKind {
    /// Membership of an unscaled flattened point in the region.
    pub fn contains_flat(self, params: &ThreeRegionParams, q: Point2<f64>) -> bool {
        if q.y < params.y_floor() {
            return false;
        }
        let a = params.a();
        let z = eval_z(params, q);
        match self {
            RegionKind::U1 => z >= -4.0 * params.r2 && q.y > params.r1 / (8.0 * a) && q.y < params.r1 / a,
            RegionKind::U2 => z >= -params.r2 && z <= params.r1 / (2.0 * a) && q.y < params.r1 / (8.0 * a),
            RegionKind::U3 => z >= -4.0 * params.r2 && q.y < params.r1 / a,
        }
    }
}

/// One of the three regions, placed at a chart of Σ and scaled by `θ`.
#[derive(Debug, Clone)]
pub struct Region {
    pub kind: RegionKind,
    pub params: ThreeRegionParams,
    pub chart: InterfaceChart,
}

impl Region {
    pub fn new(kind: RegionKind, params: ThreeRegionParams, chart: InterfaceChart) -> Result<Self> {
        params.validate()?;
        Ok(Self { kind, params, chart })
    }

    /// Whether the global point lies in `Ψ_P⁻¹(θ U)`.
    pub fn contains(&self, p: Point2<f64>) -> Result<bool> {
        let q = self.chart.flatten(p)?;
        Ok(self.contains_flattened(q))
    }

    /// Membership for a point already in flattened chart coordinates.
    pub fn contains_flattened(&self, q: Point2<f64>) -> bool {
        let s = 1.0 / self.params.theta;
        self.kind.contains_flat(&self.params, Point2::new(q.x * s, q.y * s))
    }

    /// Axis-aligned box in flattened coordinates containing `θ U`.
    pub fn flattened_bounds(&self) -> ([f64; 2], [f64; 2]) {
        let p = &self.params;
        let a = p.a();
        let y_lo = p.y_floor();
        let y_hi = match self.kind {
            RegionKind::U2 => p.r1 / (8.0 * a),
            _ => p.r1 / a,
        };
        let z_lo = match self.kind {
            RegionKind::U2 => -p.r2,
            _ => -4.0 * p.r2,
        };
        // |x|² ≤ 2δ (z(0,y) − z_lo), maximised at the top of the band
        let z_top = eval_z(p, Point2::new(0.0, y_hi));
        let x_hi = (2.0 * p.delta * (z_top - z_lo)).max(0.0).sqrt();
        let t = p.theta;
        ([-x_hi * t, x_hi * t], [y_lo * t, y_hi * t])
    }
}

/// Radius `r` such that `Ψ_P(B(P, r)) ⊂ θ U₂`.
pub fn safe_ball_radius_u2(params: &ThreeRegionParams, chart: &InterfaceChart) -> Result<f64> {
    params.validate()?;
    let a = params.a();
    let am = params.alpha_minus;
    let d = params.delta;
    let t = params.theta;
    let terms = [
        d * params.r1 / (6.0 * a * am),
        2.0 * d * params.r2 / (3.0 * am),
        params.r1 / (12.0 * a),
        chart.r0() / t,
        params.rho1(),
        params.rho2(chart.zeta_norm()),
        params.rho3(),
    ];
    if let Some(bad) = terms.iter().find(|v| !(**v > 0.0)) {
        return Err(GeometryError::InvalidParams(format!("non-positive threshold {bad}")));
    }
    Ok(t * terms.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Radius of a ball about the chart center containing `Ψ_P⁻¹(θ U₃)`.
/// The closed form bounds `|ψ(x)|` by `ζ|x|²` and `|x|⁴ ≤ |x|²`, so it is
/// valid for charts with `r0 ≤ 1`.
pub fn bounding_radius_u3(params: &ThreeRegionParams, chart: &InterfaceChart) -> Result<f64> {
    params.validate()?;
    let disc = params.u3_radicand();
    if disc < 0.0 {
        return Err(GeometryError::InvalidParams(format!("alpha_minus² − 8·beta·R2 = {disc} is negative")));
    }
    let a = params.a();
    let d = params.delta;
    let z2 = chart.zeta_norm() * chart.zeta_norm();
    let g = 1.0 + 2.0 * z2;
    let root = params.alpha_minus + disc.sqrt();
    let sq = g * (2.0 * params.alpha_minus * params.r1 / a + 8.0 * d * params.r2)
        + (2.0 + g * params.beta / d) * params.r1 * params.r1 / (a * a)
        + 128.0 * d * d * params.r2 * params.r2 / (root * root);
    Ok(params.theta * sq.sqrt())
}

/// Lower bound `θR₁/(16a)` on the distance from `Ψ_P⁻¹(θ U₁)` to Σ.
pub fn u1_clearance(params: &ThreeRegionParams, chart: &InterfaceChart) -> Result<f64> {
    params.validate()?;
    let k = chart.k0() * chart.k0() * params.r0_squared();
    if k >= 1.0 {
        return Err(GeometryError::InvalidParams(format!("K0² R0² = {k} must be below 1")));
    }
    Ok(params.theta * params.r1 / (16.0 * params.a()))
}

/// Scales of the propagation argument across Σ at step size `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationScales {
    /// U₃ bounding radius at `θ = 1`.
    pub d: f64,
    /// `θ = h / (2d)`
    pub theta: f64,
    /// `B_{5νh}(P) ⊂ Ψ_P⁻¹(θU₂)`
    pub nu: f64,
    /// `dist(Ψ_P⁻¹(θU₁), Σ) > μh`
    pub mu: f64,
    /// Whether `ν` was reduced to stay below `μ`.
    pub nu_reduced: bool,
}

pub fn propagation_scales(params: &ThreeRegionParams, chart: &InterfaceChart, h: f64) -> Result<PropagationScales> {
    if !(h > 0.0) {
        return Err(GeometryError::InvalidParams(format!("h = {h} must be positive")));
    }
    let unit = params.with_theta(1.0);
    let d = bounding_radius_u3(&unit, chart)?;
    let theta = h / (2.0 * d);
    if theta > 1.0 {
        return Err(GeometryError::GeometryInfeasible(format!(
            "h = {h} needs theta = {theta:.4} > 1; reduce h below {:.4}",
            2.0 * d
        )));
    }
    let scaled = params.with_theta(theta);
    let nu_raw = safe_ball_radius_u2(&scaled, chart)? / (5.0 * h);
    let mu = params.r1 / (32.0 * params.a() * d);
    let (nu, nu_reduced) = if nu_raw < mu { (nu_raw, false) } else { (0.5 * mu, true) };
    Ok(PropagationScales { d, theta, nu, mu, nu_reduced })
}
