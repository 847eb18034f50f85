//! The dilation `u^θ(x) = θ⁻² u(θx)` and exact-slice integration over the
//! scaled regions `θU` in flattened coordinates.

use nalgebra::Point2;

use super::{eval_z, RegionKind, ThreeRegionParams};
use crate::quadrature::gauss_legendre;

/// `x ↦ θ⁻² u(θx)`
pub fn rescale<F>(u: F, theta: f64) -> impl Fn(Point2<f64>) -> f64
where
    F: Fn(Point2<f64>) -> f64,
{
    move |p| u(Point2::new(theta * p.x, theta * p.y)) / (theta * theta)
}

/// Height `y ≥ y_floor` with `z(x, y) = level`, if any.
pub fn level_height(params: &ThreeRegionParams, level: f64, x: f64) -> Option<f64> {
    let (am, b, d) = (params.alpha_minus, params.beta, params.delta);
    // β y² / (2δ²) + α₋ y / δ − (level + x²/(2δ)) = 0
    let rhs = level + x * x / (2.0 * d);
    let disc = am * am + 2.0 * b * rhs;
    if disc < 0.0 {
        return None;
    }
    // stable form of δ(−α₋ + √disc)/β
    let y = 2.0 * d * rhs / (am + disc.sqrt());
    (y >= params.y_floor() - 1e-15).then_some(y)
}

/// `|x|` at which the level set `z = level` crosses height `y`.
fn level_abscissa(params: &ThreeRegionParams, level: f64, y: f64) -> Option<f64> {
    let s = 2.0 * params.delta * (eval_z(params, Point2::new(0.0, y)) - level);
    (s >= 0.0).then(|| s.sqrt())
}

/// Vertical slice `[y_lo, y_hi]` of the unscaled region at abscissa `x`.
pub fn region_slice(params: &ThreeRegionParams, kind: RegionKind, x: f64) -> Option<(f64, f64)> {
    let a = params.a();
    let floor = params.y_floor();
    let (lo, hi) = match kind {
        RegionKind::U1 => {
            let base = level_height(params, -4.0 * params.r2, x).unwrap_or(floor).max(floor);
            (base.max(params.r1 / (8.0 * a)), params.r1 / a)
        }
        RegionKind::U2 => {
            let lo = level_height(params, -params.r2, x).unwrap_or(floor).max(floor);
            let top = level_height(params, params.r1 / (2.0 * a), x)?;
            (lo, top.min(params.r1 / (8.0 * a)))
        }
        RegionKind::U3 => {
            let lo = level_height(params, -4.0 * params.r2, x).unwrap_or(floor).max(floor);
            (lo, params.r1 / a)
        }
    };
    (hi > lo).then_some((lo, hi))
}

/// Abscissae where the slice bounds of the unscaled region switch branch or
/// vanish, sorted, symmetric about 0 and including the outer extent.
fn breakpoints(params: &ThreeRegionParams, kind: RegionKind) -> Vec<f64> {
    let a = params.a();
    let mut xs = Vec::new();
    let mut push = |v: Option<f64>| {
        if let Some(v) = v.filter(|v| *v > 0.0) {
            xs.push(v);
        }
    };
    match kind {
        RegionKind::U1 => {
            push(level_abscissa(params, -4.0 * params.r2, params.r1 / (8.0 * a)));
            push(level_abscissa(params, -4.0 * params.r2, params.r1 / a));
        }
        RegionKind::U2 => {
            push(level_abscissa(params, params.r1 / (2.0 * a), params.r1 / (8.0 * a)));
            push(level_abscissa(params, -params.r2, params.r1 / (8.0 * a)));
            push(level_abscissa(params, -params.r2, params.y_floor()));
            push(level_abscissa(params, params.r1 / (2.0 * a), params.y_floor()));
        }
        RegionKind::U3 => {
            push(level_abscissa(params, -4.0 * params.r2, params.r1 / a));
            push(level_abscissa(params, -4.0 * params.r2, params.y_floor()));
        }
    }
    xs.sort_by(f64::total_cmp);
    let outer = *xs.last().unwrap_or(&0.0);
    let mut all: Vec<f64> = xs.iter().rev().map(|v| -v).chain(std::iter::once(0.0)).chain(xs.iter().copied()).collect();
    all.retain(|v| v.abs() <= outer);
    all.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    all
}

/// `∫_{θU} f` in flattened coordinates, by exact slicing: Gauss–Legendre in
/// `y` on each slice and composite Gauss–Legendre in `x` between branch
/// points of the slice bounds.
pub fn integrate_flat_region<F>(params: &ThreeRegionParams, kind: RegionKind, f: F) -> f64
where
    F: Fn(Point2<f64>) -> f64,
{
    const ORDER: usize = 12;
    const PANELS: usize = 48;
    let (gx, gw) = gauss_legendre(ORDER);
    let theta = params.theta;
    let bps = breakpoints(params, kind);
    let slice_integral = |x: f64| -> f64 {
        let Some((lo, hi)) = region_slice(params, kind, x) else { return 0.0 };
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let s: f64 = gx.iter().zip(&gw).map(|(t, w)| w * f(Point2::new(theta * x, theta * (c + h * t)))).sum();
        s * h * theta
    };
    let mut total = 0.0;
    for seg in bps.windows(2) {
        let (p, q) = (seg[0], seg[1]);
        let width = (q - p) / PANELS as f64;
        for k in 0..PANELS {
            let c = p + (k as f64 + 0.5) * width;
            let s: f64 = gx.iter().zip(&gw).map(|(t, w)| w * slice_integral(c + 0.5 * width * t)).sum();
            total += s * 0.5 * width;
        }
    }
    total * theta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ThreeRegionParams {
        ThreeRegionParams { r1: 0.4, r2: 0.1, delta: 0.5, ..Default::default() }
    }

    #[test]
    fn slices_agree_with_membership() {
        let p = params();
        for kind in [RegionKind::U1, RegionKind::U2, RegionKind::U3] {
            for i in 0..200 {
                let x = -1.2 + 2.4 * i as f64 / 199.0;
                for j in 0..200 {
                    let y = -0.5 + 0.8 * j as f64 / 199.0;
                    let inside = kind.contains_flat(&p, Point2::new(x, y));
                    let sliced = region_slice(&p, kind, x).is_some_and(|(lo, hi)| y >= lo && y < hi);
                    let near_edge = region_slice(&p, kind, x)
                        .is_some_and(|(lo, hi)| (y - lo).abs() < 1e-9 || (y - hi).abs() < 1e-9);
                    assert!(inside == sliced || near_edge, "{kind:?} at ({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn area_matches_monte_carlo_grid() {
        let p = params();
        for kind in [RegionKind::U1, RegionKind::U2, RegionKind::U3] {
            let area = integrate_flat_region(&p, kind, |_| 1.0);
            let n = 1500;
            let mut count = 0usize;
            for i in 0..n {
                for j in 0..n {
                    let q =
                        Point2::new(-1.2 + 2.4 * (i as f64 + 0.5) / n as f64, -0.5 + 0.8 * (j as f64 + 0.5) / n as f64);
                    if kind.contains_flat(&p, q) {
                        count += 1;
                    }
                }
            }
            // grid rows straddling the flat top and bottom edges dominate the error
            let grid = count as f64 * 2.4 * 0.8 / (n * n) as f64;
            assert!((area - grid).abs() < 5e-3 * area.max(1e-3), "{kind:?}: {area} vs {grid}");
        }
    }

    #[test]
    fn rescaling_identity() {
        let u = |p: Point2<f64>| 1.0 + p.x * p.y - 3.0 * p.y * p.y + p.x.powi(3);
        for theta in [0.25, 0.5, 1.0] {
            let pt = params().with_theta(theta);
            let lhs = integrate_flat_region(&pt, RegionKind::U3, |q| u(q).powi(2));
            let ut = rescale(u, theta);
            let rhs = integrate_flat_region(&params(), RegionKind::U3, |q| ut(q).powi(2));
            let scaled = theta.powi(6) * rhs;
            assert!((lhs - scaled).abs() <= 1e-10 * lhs.abs());
        }
    }
}
