use nalgebra::Point2;

use crate::geometry::{DomainSpec, Interface};
use crate::quadrature::integrate;

const PANELS: usize = 64;
const ORDER: usize = 8;
const BALL_SAMPLES: usize = 400;

/// Arc length `∫ √(1 + ψ'²) dx` of the graph over the parameter intervals.
pub fn surface_measure(interface: &Interface, runs: &[(f64, f64)]) -> f64 {
    runs.iter().map(|&(a, b)| integrate(|x| interface.metric(x).sqrt(), a, b, PANELS, ORDER)).sum()
}

/// `|Σ ∩ Ω|`
pub fn sigma_in_omega(spec: &DomainSpec) -> f64 {
    surface_measure(&spec.interface, &spec.interface_runs(|p| spec.in_omega(p)))
}

/// `|Σ ∩ D|`
pub fn sigma_in_d(spec: &DomainSpec) -> f64 {
    surface_measure(&spec.interface, &spec.interface_runs_in_d())
}

/// Parameter intervals on which the graph lies inside the open disc
/// `B_r(center)`.
pub fn ball_runs(interface: &Interface, center: Point2<f64>, r: f64) -> Vec<(f64, f64)> {
    let inside = |x: f64| (interface.point(x) - center).norm() < r;
    let (x0, x1) = (center.x - r, center.x + r);
    let at = |i: usize| x0 + (x1 - x0) * i as f64 / BALL_SAMPLES as f64;
    let refine = |mut a: f64, mut b: f64, a_in: bool| {
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if inside(m) == a_in {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let mut runs = Vec::new();
    let mut start = None;
    let mut prev = false;
    for i in 0..=BALL_SAMPLES {
        let x = at(i);
        let cur = inside(x);
        if cur != prev {
            let edge = if i == 0 { x } else { refine(at(i - 1), x, prev) };
            if cur {
                start = Some(edge);
            } else if let Some(s) = start.take() {
                runs.push((s, edge));
            }
        }
        prev = cur;
    }
    if let Some(s) = start {
        runs.push((s, x1));
    }
    runs
}

/// `|Σ ∩ B_r(center)|`
pub fn ball_surface_measure(interface: &Interface, center: Point2<f64>, r: f64) -> f64 {
    surface_measure(interface, &ball_runs(interface, center, r))
}

/// Density constant `κ = 2 sup √(1 + ψ'²)` over `[x0, x1]`, bounding
/// `|Σ ∩ B_ρ| ≤ κ ρ` for discs centred anywhere.
pub fn kappa(interface: &Interface, x0: f64, x1: f64) -> f64 {
    let n = 2000;
    let sup = (0..=n).map(|i| interface.metric(x0 + (x1 - x0) * i as f64 / n as f64).sqrt()).fold(0.0, f64::max);
    2.0 * sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CubicSpline;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn flat_and_diagonal() {
        let flat = Interface::Flat { y0: 0.5 };
        assert!((surface_measure(&flat, &[(0.0, 1.0)]) - 1.0).abs() < 1e-14);
        let line = Interface::Spline(CubicSpline::natural(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0]).unwrap());
        assert!((surface_measure(&line, &[(0.0, 1.0)]) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn parabola_arc_length() {
        // ∫₀¹ √(1 + 4x²) dx = √5/2 + asinh(2)/4
        let p = Interface::Parabola { y0: 0.0, c: 1.0, xc: 0.0 };
        let exact = 5f64.sqrt() / 2.0 + 2f64.asinh() / 4.0;
        assert!((surface_measure(&p, &[(0.0, 1.0)]) - exact).abs() < 1e-12);
    }

    #[test]
    fn kappa_audit() {
        let s = Interface::Spline(
            CubicSpline::natural(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![0.5, 0.55, 0.45, 0.52, 0.5]).unwrap(),
        );
        let k = kappa(&s, 0.0, 1.0);
        let mut r = rng::stream(7, 0);
        let mut violations = 0;
        for _ in 0..50 {
            let x = r.random_range(0.1..0.9);
            let rad = r.random_range(0.01..0.2);
            let c = Point2::new(x + r.random_range(-0.05..0.05), s.height(x) + r.random_range(-0.05..0.05));
            if ball_surface_measure(&s, c, rad) > k * rad {
                violations += 1;
            }
        }
        assert_eq!(violations, 0);
    }
}
