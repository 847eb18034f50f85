//! Monte Carlo audit of the three region lemmas: the safe ball inside `θU₂`,
//! the bounding ball around `θU₃` and the clearance of `θU₁` from Σ.

use nalgebra::{Point2, Vector2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    bounding_radius_u3, safe_ball_radius_u2, u1_clearance, InterfaceChart, LocalGraph, Region, RegionKind, Result,
    ThreeRegionParams,
};
use crate::rng::Rng;

/// Relative slack granted to each comparison for rounding.
const ROUND_TOL: f64 = 1e-12;

/// Counts for one lemma: how many draws landed in the tested set, how many
/// broke the bound, and how many fell outside the chart cylinder.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub bound: f64,
    pub draws: usize,
    pub tested: usize,
    pub violations: usize,
    pub out_of_chart: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaAudit {
    pub safe_ball_u2: LemmaCheck,
    pub bounding_ball_u3: LemmaCheck,
    pub clearance_u1: LemmaCheck,
}

impl LemmaAudit {
    pub fn violations(&self) -> usize {
        self.safe_ball_u2.violations + self.bounding_ball_u3.violations + self.clearance_u1.violations
    }
}

/// Draws `samples` points per lemma and checks each conclusion.
pub fn audit_lemmas(
    params: &ThreeRegionParams,
    chart: &InterfaceChart,
    samples: usize,
    rng: &mut Rng,
) -> Result<LemmaAudit> {
    let u1 = Region::new(RegionKind::U1, *params, chart.clone())?;
    let u2 = Region::new(RegionKind::U2, *params, chart.clone())?;
    let u3 = Region::new(RegionKind::U3, *params, chart.clone())?;

    let r_safe = safe_ball_radius_u2(params, chart)?;
    let mut safe = LemmaCheck { bound: r_safe, draws: samples, ..Default::default() };
    for _ in 0..samples {
        let p = chart.center() + disc_sample(rng, r_safe);
        safe.tested += 1;
        match chart.flatten(p) {
            Ok(q) => safe.violations += usize::from(!u2.contains_flattened(q)),
            Err(_) => {
                safe.out_of_chart += 1;
                safe.violations += 1;
            }
        }
    }

    let d = bounding_radius_u3(params, chart)?;
    let mut bounding = LemmaCheck { bound: d, draws: samples, ..Default::default() };
    let (bx, by) = u3.flattened_bounds();
    for _ in 0..samples {
        let q = Point2::new(rng.random_range(bx[0]..=bx[1]), rng.random_range(by[0]..=by[1]));
        if !u3.contains_flattened(q) {
            continue;
        }
        bounding.tested += 1;
        match chart.unflatten(q) {
            Ok(p) => bounding.violations += usize::from((p - chart.center()).norm() > d * (1.0 + ROUND_TOL)),
            Err(_) => bounding.out_of_chart += 1,
        }
    }

    let clear = u1_clearance(params, chart)?;
    let mut clearance = LemmaCheck { bound: clear, draws: samples, ..Default::default() };
    let (bx, by) = u1.flattened_bounds();
    for _ in 0..samples {
        let q = Point2::new(rng.random_range(bx[0]..=bx[1]), rng.random_range(by[0]..=by[1]));
        if !u1.contains_flattened(q) {
            continue;
        }
        clearance.tested += 1;
        match chart.unflatten(q) {
            Ok(p) => {
                let dist = distance_to_graph(chart, chart.to_local(p));
                clearance.violations += usize::from(dist < clear * (1.0 - ROUND_TOL));
            }
            Err(_) => clearance.out_of_chart += 1,
        }
    }

    Ok(LemmaAudit { safe_ball_u2: safe, bounding_ball_u3: bounding, clearance_u1: clearance })
}

fn disc_sample(rng: &mut Rng, radius: f64) -> Vector2<f64> {
    let r = radius * rng.random::<f64>().sqrt();
    let (s, c) = (std::f64::consts::TAU * rng.random::<f64>()).sin_cos();
    Vector2::new(r * c, r * s)
}

/// Distance from a local point to the charted piece of Σ, `{(s, ψ(s)) : |s| < r0}`.
/// A coarse scan brackets the nearest abscissa, then golden section refines it.
pub fn distance_to_graph(chart: &InterfaceChart, l: Point2<f64>) -> f64 {
    if chart.is_flat() {
        // the nearest point of a horizontal segment
        let s = l.x.clamp(-chart.r0(), chart.r0());
        return ((l.x - s).powi(2) + l.y * l.y).sqrt();
    }
    let r0 = chart.r0();
    let sq = |s: f64| (l.x - s).powi(2) + (l.y - chart.psi(s)).powi(2);
    const SCAN: usize = 64;
    let h = 2.0 * r0 / SCAN as f64;
    let best = (0..=SCAN).map(|i| -r0 + i as f64 * h).min_by(|a, b| sq(*a).total_cmp(&sq(*b))).unwrap_or(0.0);
    let (mut a, mut b) = ((best - h).max(-r0), (best + h).min(r0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..60 {
        if sq(c) < sq(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    sq(0.5 * (a + b)).min(sq(best)).sqrt()
}

/// Seeded admissible parameter set with a flat (`curved = false`) or
/// parabolic rotated chart. Ranges keep `α₋² ≥ 8βR₂` and `K0²R₀² < 1`.
pub fn random_admissible(rng: &mut Rng, curved: bool) -> (ThreeRegionParams, InterfaceChart) {
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let alpha_minus = u(0.5, 2.0);
    let beta = u(0.5, 2.0);
    let r2_max = (alpha_minus * alpha_minus / (8.0 * beta)).min(1.0);
    let params = ThreeRegionParams {
        alpha_plus: u(0.5, 2.0),
        alpha_minus,
        beta,
        delta: u(0.2, 0.8),
        delta0: 1.0,
        tau0: 1.0,
        carleman_c: 1.0,
        r_cap: 1.0,
        r1: u(0.1, 0.6),
        r2: r2_max * u(0.05, 0.9),
        theta: u(0.2, 1.0),
    };
    let k0 = u(0.5, 0.95) / params.r0_squared().sqrt();
    let center = Point2::new(u(-1.0, 1.0), u(-1.0, 1.0));
    let angle = u(-std::f64::consts::PI, std::f64::consts::PI);
    let graph = if curved {
        // |ψ''| = 2|c| is the binding C² term on r0 = 1
        let c = u(0.1, 0.5) * k0 * if u(0.0, 1.0) < 0.5 { -1.0 } else { 1.0 };
        LocalGraph::Parabola { c }
    } else {
        LocalGraph::Flat
    };
    let chart = InterfaceChart::new(center, angle, graph, 1.0, k0).expect("generated chart satisfies its C² bound");
    (params, chart)
}
