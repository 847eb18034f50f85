//! Quadrature rules on intervals and triangles.

use nalgebra::Point2;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (xs, ws) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let mut s = 0.0;
        for (x, w) in xs.iter().zip(&ws) {
            s += w * f(mid + 0.5 * width * x);
        }
        total += 0.5 * width * s;
    }
    total
}

/// A rule on the reference triangle, given in barycentric coordinates with
/// weights summing to one (multiply by the triangle area).
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

/// Mid-edge rule, exact for quadratics.
pub const MID_EDGE: TriangleRule = TriangleRule {
    points: &[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

const A7: f64 = 0.797_426_985_353_087_3;
const B7: f64 = 0.101_286_507_323_456_3;
const C7: f64 = 0.059_715_871_789_769_8;
const D7: f64 = 0.470_142_064_105_115_1;
const W7A: f64 = 0.125_939_180_544_827_1;
const W7B: f64 = 0.132_394_152_788_506_2;

/// Seven-point Dunavant rule, exact for quintics.
pub const DEGREE5: TriangleRule = TriangleRule {
    points: &[
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [A7, B7, B7],
        [B7, A7, B7],
        [B7, B7, A7],
        [C7, D7, D7],
        [D7, C7, D7],
        [D7, D7, C7],
    ],
    weights: &[0.225, W7A, W7A, W7A, W7B, W7B, W7B],
};

pub fn barycentric_point(vertices: &[Point2<f64>; 3], bary: &[f64; 3]) -> Point2<f64> {
    Point2::new(
        bary[0] * vertices[0].x + bary[1] * vertices[1].x + bary[2] * vertices[2].x,
        bary[0] * vertices[0].y + bary[1] * vertices[1].y + bary[2] * vertices[2].y,
    )
}

pub fn triangle_area(v: &[Point2<f64>; 3]) -> f64 {
    0.5 * ((v[1].x - v[0].x) * (v[2].y - v[0].y) - (v[2].x - v[0].x) * (v[1].y - v[0].y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn degree5_rule_is_exact_on_monomials() {
        let tri = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let area = triangle_area(&tri);
        // ∫_T x^a y^b = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).product::<u32>().max(1) as f64;
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let s: f64 = DEGREE5
                    .points
                    .iter()
                    .zip(DEGREE5.weights)
                    .map(|(p, w)| {
                        let q = barycentric_point(&tri, p);
                        w * q.x.powi(a as i32) * q.y.powi(b as i32)
                    })
                    .sum::<f64>()
                    * area;
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((s - exact).abs() < 1e-14, "a={a} b={b}");
            }
        }
    }
}
