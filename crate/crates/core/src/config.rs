//! The JSON configuration document read by every CLI command.
//!
//! Every key is optional. A minimal document is `{}`, which describes the unit
//! square cut by the line `y = 0.5` with `a₊ = 2`, `a₋ = 1`.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "omega": { "polygon": [[0,0],[1,0],[1,1],[0,1]] },
//!   "interface": { "kind": "parabola", "params": { "y0": 0.45, "c": 0.3, "xc": 0.5 } },
//!   "h": 0.15,
//!   "mesh_size": 0.04,
//!   "coefficients": { "a_plus": 10.0, "a_minus": 1.0 },
//!   "r0": 0.45, "K0": 1.0,
//!   "three_region": { "alpha_plus": 1, "alpha_minus": 1, "beta": 1, "delta": 0.5,
//!                     "R1": 0.4, "R2": 0.1, "theta": 0.2, "tau0": 1, "C": 1, "R_cap": 1 },
//!   "sweep": { "etas": [1e-6, 1e-3, 1e-1] }
//! }
//! ```

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use crate::estimator::{BallRadii, PropagationOptions};
use crate::experiments::{CauchyConfig, FamilyConfig, GlobalConfig, PositiveMeasureConfig, RungeConfig, SweepConfig};
use crate::geometry::{
    CubicSpline, DomainSpec, GeometryError, Interface, InterfaceChart, Polygon, Subdomain, ThreeRegionParams,
};
use crate::solver::{PiecewiseCoefficients, SolverError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("unsupported schema_version {0}; this build reads version {SCHEMA_VERSION}")]
    Schema(u32),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub schema_version: u32,
    pub omega: OmegaConfig,
    pub interface: InterfaceConfig,
    /// Margin of `Ω_h`; also the inset of the default subdomain.
    pub h: f64,
    /// Polygonal subdomain `D`; `Ω_h` when absent.
    pub subdomain: Option<Vec<[f64; 2]>>,
    pub mesh_size: f64,
    pub coefficients: CoefficientConfig,
    pub r0: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    /// Abscissa of the chart center on Σ; the middle of `Ω` when absent.
    pub chart_x: Option<f64>,
    pub three_region: ThreeRegionParams,
    /// Used when `--seed` is not given.
    pub seed: u64,
    pub solve: SolveSection,
    pub regions: RegionsSection,
    pub cover: CoverSection,
    pub chain: ChainSection,
    pub three_balls: ThreeBallsSection,
    pub region_check: RegionCheckSection,
    pub propagate: PropagateSection,
    pub sweep: SweepConfig,
    pub cauchy: CauchyConfig,
    pub runge: RungeConfig,
    pub positive_measure: PositiveMeasureConfig,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            omega: OmegaConfig::default(),
            interface: InterfaceConfig::default(),
            h: 0.15,
            subdomain: None,
            mesh_size: 0.04,
            coefficients: CoefficientConfig::default(),
            r0: 0.45,
            k0: 1.0,
            chart_x: None,
            three_region: ThreeRegionParams { theta: 0.2, ..ThreeRegionParams::default() },
            seed: 0,
            solve: SolveSection::default(),
            regions: RegionsSection::default(),
            cover: CoverSection::default(),
            chain: ChainSection::default(),
            three_balls: ThreeBallsSection::default(),
            region_check: RegionCheckSection::default(),
            propagate: PropagateSection::default(),
            sweep: SweepConfig::default(),
            cauchy: CauchyConfig::default(),
            runge: RungeConfig::default(),
            positive_measure: PositiveMeasureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    pub polygon: Vec<[f64; 2]>,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self { polygon: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] }
    }
}

/// Σ as a graph over the horizontal axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum InterfaceConfig {
    Flat {
        y0: f64,
    },
    /// `y = y0 + c (x − xc)²`
    Parabola {
        y0: f64,
        c: f64,
        xc: f64,
    },
    /// Natural cubic spline through `(xs[i], ys[i])`.
    Spline {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

impl Default for InterfaceConfig {
    fn default() -> Self {
        InterfaceConfig::Flat { y0: 0.5 }
    }
}

impl InterfaceConfig {
    pub fn build(&self) -> Result<Interface> {
        Ok(match self {
            InterfaceConfig::Flat { y0 } => Interface::Flat { y0: *y0 },
            InterfaceConfig::Parabola { y0, c, xc } => Interface::Parabola { y0: *y0, c: *c, xc: *xc },
            InterfaceConfig::Spline { xs, ys } => Interface::Spline(CubicSpline::natural(xs.clone(), ys.clone())?),
        })
    }
}

/// Scalar coefficients `a = a₊ I` above Σ and `a = a₋ I` below.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientConfig {
    pub a_plus: f64,
    pub a_minus: f64,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        Self { a_plus: 2.0, a_minus: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    /// Wave number of the closed-form mode used as boundary data.
    pub k: f64,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self { k: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionsSection {
    /// Draws per lemma and parameter set.
    pub samples: usize,
    /// Seeded random admissible sets audited after the configured one; every
    /// second one uses a parabolic chart.
    pub random_sets: usize,
}

impl Default for RegionsSection {
    fn default() -> Self {
        Self { samples: 100_000, random_sets: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverSection {
    /// Step `h` of the cover.
    pub step: f64,
    /// Ball radius factor; taken from the propagation scales when absent.
    pub nu: Option<f64>,
}

impl Default for CoverSection {
    fn default() -> Self {
        Self { step: 0.05, nu: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub x0: [f64; 2],
    pub y: [f64; 2],
    pub r1: f64,
}

impl Default for ChainSection {
    fn default() -> Self {
        Self { x0: [0.3, 0.3], y: [0.7, 0.7], r1: 0.01 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeBallsSection {
    pub center: [f64; 2],
    pub radii: BallRadii,
    pub eps: f64,
    pub delta_min: f64,
    /// Regime classification threshold; the regime column is empty without it.
    pub h0: Option<f64>,
    pub family: FamilyConfig,
}

impl Default for ThreeBallsSection {
    fn default() -> Self {
        Self {
            center: [0.5, 0.5],
            radii: BallRadii { r1: 0.05, r2: 0.15, r3: 0.4 },
            eps: 0.0,
            delta_min: 0.01,
            h0: None,
            family: FamilyConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionCheckSection {
    pub eps: f64,
    /// Cap on the constant; the report flags samples needing more.
    pub c_max: Option<f64>,
    pub family: FamilyConfig,
}

impl Default for RegionCheckSection {
    fn default() -> Self {
        Self { eps: 0.0, c_max: None, family: FamilyConfig { random_fields: 20, ..FamilyConfig::default() } }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagateSection {
    pub x0: [f64; 2],
    pub r: f64,
    pub step: f64,
    pub eps: f64,
    pub options: PropagationOptions,
    pub family: FamilyConfig,
    /// Also fit the global modulus over an extremal family when present.
    pub modulus: Option<GlobalConfig>,
}

impl Default for PropagateSection {
    fn default() -> Self {
        Self {
            x0: [0.5, 0.5],
            r: 0.32,
            step: 0.1,
            eps: 1e-8,
            options: PropagationOptions { fit_chains: 6, link_chains: 12, ..PropagationOptions::default() },
            family: FamilyConfig { random_fields: 12, ..FamilyConfig::default() },
            modulus: None,
        }
    }
}

impl LabConfig {
    /// Parses and checks the schema version. Unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: LabConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(cfg.schema_version));
        }
        if !(cfg.mesh_size > 0.0 && cfg.mesh_size.is_finite()) {
            return Err(ConfigError::Parse(format!("mesh_size = {} must be positive", cfg.mesh_size)));
        }
        Ok(cfg)
    }

    pub fn interface(&self) -> Result<Interface> {
        self.interface.build()
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let omega = Polygon::new(points(&self.omega.polygon))?;
        let subdomain = match &self.subdomain {
            Some(d) => Subdomain::Polygon(Polygon::new(points(d))?),
            None => Subdomain::Inset { h: self.h },
        };
        Ok(DomainSpec::new(omega, self.interface()?, subdomain, self.h)?)
    }

    pub fn coefficients(&self) -> Result<PiecewiseCoefficients> {
        Ok(PiecewiseCoefficients::constant(self.coefficients.a_plus, self.coefficients.a_minus)?)
    }

    /// Chart of Σ at `chart_x` (default: horizontal middle of `Ω`).
    pub fn chart(&self, spec: &DomainSpec) -> Result<InterfaceChart> {
        let bb = spec.omega.bbox();
        let x = self.chart_x.unwrap_or(0.5 * (bb.min.x + bb.max.x));
        Ok(InterfaceChart::at(&spec.interface, x, self.r0, self.k0)?)
    }

    pub fn params(&self) -> Result<ThreeRegionParams> {
        self.three_region.validate()?;
        Ok(self.three_region)
    }
}

fn points(v: &[[f64; 2]]) -> Vec<Point2<f64>> {
    v.iter().map(|p| Point2::new(p[0], p[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_defaults() {
        let cfg = LabConfig::from_json("{}").unwrap();
        assert_eq!(cfg.schema_version, SCHEMA_VERSION);
        let spec = cfg.domain().unwrap();
        assert!((spec.omega.area() - 1.0).abs() < 1e-15);
        assert!(cfg.chart(&spec).unwrap().is_flat());
    }

    #[test]
    fn documented_keys_parse() {
        let text = r#"{
            "omega": {"polygon": [[0,0],[2,0],[2,1],[0,1]]},
            "interface": {"kind": "parabola", "params": {"y0": 0.45, "c": 0.3, "xc": 1.0}},
            "r0": 0.25, "K0": 1.5,
            "three_region": {"alpha_plus": 2, "alpha_minus": 1, "beta": 1, "delta": 0.5,
                             "R1": 0.3, "R2": 0.05, "theta": 0.5, "tau0": 1, "C": 3, "R_cap": 1},
            "sweep": {"etas": [1e-3, 1e-2]}
        }"#;
        let cfg = LabConfig::from_json(text).unwrap();
        assert_eq!(cfg.k0, 1.5);
        assert_eq!(cfg.three_region.carleman_c, 3.0);
        assert_eq!(cfg.three_region.r2, 0.05);
        assert_eq!(cfg.sweep.etas, vec![1e-3, 1e-2]);
        assert_eq!(cfg.sweep.r, SweepConfig::default().r);
        let spec = cfg.domain().unwrap();
        assert!(matches!(*spec.interface, Interface::Parabola { .. }));
        assert!(!cfg.chart(&spec).unwrap().is_flat());
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(LabConfig::from_json("{"), Err(ConfigError::Parse(_))));
        assert!(matches!(LabConfig::from_json(r#"{"unknown": 1}"#), Err(ConfigError::Parse(_))));
        assert!(matches!(LabConfig::from_json(r#"{"schema_version": 7}"#), Err(ConfigError::Schema(7))));
        let cfg = LabConfig::from_json(r#"{"interface": {"kind": "flat", "params": {"y0": 2.0}}}"#).unwrap();
        assert!(cfg.domain().is_err());
    }
}
