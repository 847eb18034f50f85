use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use super::{Result, SolverError};

/// Closed-form solution of `∇·(a∇u) = 0` with scalar `a = a₊` above and
/// `a = a₋` below the line `y = y0`:
/// `u = cos(kx) sinh(k(y − y0)) / a±`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactFlatSolution {
    pub a_plus: f64,
    pub a_minus: f64,
    pub k: f64,
    pub y0: f64,
    pub amplitude: f64,
}

impl ExactFlatSolution {
    pub fn new(a_plus: f64, a_minus: f64, k: f64, y0: f64) -> Result<Self> {
        if !(a_plus > 0.0 && a_minus > 0.0) || k == 0.0 || !k.is_finite() {
            return Err(SolverError::InvalidParams(format!(
                "oracle needs a± > 0 and k ≠ 0, got a+={a_plus}, a-={a_minus}, k={k}"
            )));
        }
        Ok(Self { a_plus, a_minus, k, y0, amplitude: 1.0 })
    }

    pub fn scaled(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    fn a(&self, y: f64) -> f64 {
        if y > self.y0 {
            self.a_plus
        } else {
            self.a_minus
        }
    }

    /// Vertical profile `g(y)` and its derivative.
    pub fn profile(&self, y: f64) -> (f64, f64) {
        let s = self.k * (y - self.y0);
        let a = self.a(y);
        (self.amplitude * s.sinh() / a, self.amplitude * self.k * s.cosh() / a)
    }

    pub fn value(&self, p: Point2<f64>) -> f64 {
        (self.k * p.x).cos() * self.profile(p.y).0
    }

    pub fn gradient(&self, p: Point2<f64>) -> Vector2<f64> {
        let (g, dg) = self.profile(p.y);
        let c = (self.k * p.x).cos();
        let s = (self.k * p.x).sin();
        Vector2::new(-self.k * s * g, c * dg)
    }

    /// One-sided conormal flux `a ∂_y u` at the interface from each side.
    pub fn interface_fluxes(&self, x: f64) -> (f64, f64) {
        let c = (self.k * x).cos() * self.amplitude * self.k;
        (c, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmission_conditions_hold() {
        let o = ExactFlatSolution::new(2.0, 1.0, 1.0, 0.0).unwrap();
        // a₊ g'(0⁺) = 2·(1/2) = 1 = a₋ g'(0⁻)
        let up = 2.0 * o.profile(1e-300).1;
        let down = 1.0 * o.profile(-1e-300).1;
        assert!((up - 1.0).abs() < 1e-15 && (down - 1.0).abs() < 1e-15);
        assert_eq!(o.profile(0.0).0, 0.0);
    }

    #[test]
    fn matching_coefficients_give_smooth_harmonic() {
        let o = ExactFlatSolution::new(1.5, 1.5, 2.0, 0.0).unwrap();
        let p = Point2::new(0.3, -0.4);
        let expect = (2.0f64 * 0.3).cos() * (2.0f64 * -0.4).sinh() / 1.5;
        assert!((o.value(p) - expect).abs() < 1e-15);
    }

    #[test]
    fn strong_residual_vanishes_off_interface() {
        let o = ExactFlatSolution::new(2.0, 1.0, 3.0, 0.5).unwrap();
        let h = 1e-4;
        let mut worst = 0.0f64;
        for i in 0..100 {
            for j in 0..100 {
                let p = Point2::new(0.01 * i as f64, 0.01 * j as f64 + 0.005);
                if (p.y - 0.5).abs() < 2.0 * h {
                    continue;
                }
                let u = |dx: f64, dy: f64| o.value(Point2::new(p.x + dx, p.y + dy));
                let lap = (u(h, 0.0) + u(-h, 0.0) + u(0.0, h) + u(0.0, -h) - 4.0 * u(0.0, 0.0)) / (h * h);
                worst = worst.max(lap.abs());
            }
        }
        // central differences carry O(h²) truncation and O(ε/h²) rounding
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn analytic_laplacian_vanishes() {
        let o = ExactFlatSolution::new(2.0, 1.0, 3.0, 0.5).unwrap();
        let mut worst = 0.0f64;
        for i in 0..100 {
            for j in 0..100 {
                let (x, y) = (0.01 * i as f64, 0.01 * j as f64 + 0.005);
                let a = if y > 0.5 { 2.0 } else { 1.0 };
                let s = 3.0 * (y - 0.5);
                let uxx = -9.0 * (3.0 * x).cos() * s.sinh() / a;
                let uyy = 9.0 * (3.0 * x).cos() * s.sinh() / a;
                // the oracle's value must be the function differentiated above
                let v = (3.0 * x).cos() * s.sinh() / a;
                assert!((o.value(Point2::new(x, y)) - v).abs() < 1e-14);
                worst = worst.max((a * (uxx + uyy)).abs());
            }
        }
        assert!(worst < 1e-10);
    }
}
