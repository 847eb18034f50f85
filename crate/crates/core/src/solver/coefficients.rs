use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Point2, Vector2};
use serde::{Deserialize, Serialize};

use super::{Result, SolverError};
use crate::geometry::{Aabb, Interface, Side};

pub type MatrixField = Arc<dyn Fn(Point2<f64>) -> Matrix2<f64> + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point2<f64>) -> Vector2<f64> + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(Point2<f64>) -> f64 + Send + Sync>;

/// Ellipticity and regularity bounds of a coefficient set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    /// Ellipticity `λ`.
    pub lambda: f64,
    /// Lipschitz constant `M` of `a±`.
    pub m: f64,
    /// `‖q‖_∞ ≤ K₁`
    pub k1: f64,
    /// `‖b‖_∞ ≤ K₂`
    pub k2: f64,
}

impl CoefficientBounds {
    /// Bounds for the coefficients of `u^θ`: `(λ, θM, θ²K₁, θK₂)`.
    pub fn rescaled(&self, theta: f64) -> Self {
        Self { lambda: self.lambda, m: theta * self.m, k1: theta * theta * self.k1, k2: theta * self.k2 }
    }
}

/// Coefficients `a±`, `b`, `q` of `L u = ∇·(a∇u) + b·∇u + q u`, with `a`
/// switching between `a₊` and `a₋` across the interface.
#[derive(Clone)]
pub struct PiecewiseCoefficients {
    pub a_plus: MatrixField,
    pub a_minus: MatrixField,
    pub b: Option<VectorField>,
    pub q: Option<ScalarField>,
    pub bounds: CoefficientBounds,
}

impl fmt::Debug for PiecewiseCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseCoefficients")
            .field("has_b", &self.b.is_some())
            .field("has_q", &self.q.is_some())
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl PiecewiseCoefficients {
    /// Scalar piecewise-constant conductivities, `b ≡ 0`, `q ≡ 0`.
    pub fn constant(a_plus: f64, a_minus: f64) -> Result<Self> {
        if !(a_plus > 0.0 && a_minus > 0.0) {
            return Err(SolverError::InvalidCoefficients(format!(
                "conductivities must be positive, got a+={a_plus}, a-={a_minus}"
            )));
        }
        let lambda = a_plus.min(a_minus).min(1.0 / a_plus.max(a_minus));
        Ok(Self {
            a_plus: Arc::new(move |_| Matrix2::identity() * a_plus),
            a_minus: Arc::new(move |_| Matrix2::identity() * a_minus),
            b: None,
            q: None,
            bounds: CoefficientBounds { lambda, m: 0.0, k1: 0.0, k2: 0.0 },
        })
    }

    pub fn with_q(mut self, q: ScalarField, k1: f64) -> Self {
        self.q = Some(q);
        self.bounds.k1 = k1;
        self
    }

    pub fn with_b(mut self, b: VectorField, k2: f64) -> Self {
        self.b = Some(b);
        self.bounds.k2 = k2;
        self
    }

    pub fn a(&self, side: Side, p: Point2<f64>) -> Matrix2<f64> {
        match side {
            Side::Plus => (self.a_plus)(p),
            Side::Minus => (self.a_minus)(p),
        }
    }

    pub fn is_symmetric_problem(&self) -> bool {
        self.b.is_none()
    }

    /// Audits the declared bounds on an `n × n` sample grid of `bbox`.
    pub fn validate(&self, bbox: Aabb, interface: &Interface, n: usize) -> Result<()> {
        let b = &self.bounds;
        if !(b.lambda > 0.0 && b.lambda <= 1.0) {
            return Err(SolverError::InvalidCoefficients(format!("lambda = {} must lie in (0, 1]", b.lambda)));
        }
        let n = n.max(2);
        let pt = |i: usize, j: usize| {
            Point2::new(
                bbox.min.x + bbox.width() * i as f64 / (n - 1) as f64,
                bbox.min.y + bbox.height() * j as f64 / (n - 1) as f64,
            )
        };
        let tol = 1e-12;
        for j in 0..n {
            for i in 0..n {
                let p = pt(i, j);
                let side = interface.side(p);
                let a = self.a(side, p);
                if (a - a.transpose()).norm() > tol * a.norm().max(1.0) {
                    return Err(SolverError::InvalidCoefficients(format!(
                        "a is not symmetric at ({:.4}, {:.4})",
                        p.x, p.y
                    )));
                }
                let eig = a.symmetric_eigenvalues();
                let (lo, hi) = (eig.min(), eig.max());
                if lo < b.lambda * (1.0 - tol) || hi > (1.0 + tol) / b.lambda {
                    return Err(SolverError::InvalidCoefficients(format!(
                        "ellipticity violated at ({:.4}, {:.4}): eigenvalues {lo:.4}, {hi:.4} vs lambda {}",
                        p.x, p.y, b.lambda
                    )));
                }
                if let Some(q) = &self.q {
                    let v = q(p);
                    if v.abs() > b.k1 * (1.0 + tol) {
                        return Err(SolverError::InvalidCoefficients(format!("|q| = {v:.4} exceeds K1 = {}", b.k1)));
                    }
                }
                if let Some(bf) = &self.b {
                    let v = bf(p).norm();
                    if v > b.k2 * (1.0 + tol) {
                        return Err(SolverError::InvalidCoefficients(format!("|b| = {v:.4} exceeds K2 = {}", b.k2)));
                    }
                }
                for (di, dj) in [(1, 0), (0, 1)] {
                    if i + di >= n || j + dj >= n {
                        continue;
                    }
                    let r = pt(i + di, j + dj);
                    if interface.side(r) != side {
                        continue;
                    }
                    let quotient = spectral_norm(&(self.a(side, r) - a)) / (r - p).norm();
                    if quotient > b.m * (1.0 + 1e-9) + tol {
                        return Err(SolverError::InvalidCoefficients(format!(
                            "Lipschitz quotient {quotient:.4} exceeds M = {}",
                            b.m
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn spectral_norm(m: &Matrix2<f64>) -> f64 {
    m.singular_values().max()
}
