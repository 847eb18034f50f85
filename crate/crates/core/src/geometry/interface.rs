use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::CubicSpline;

/// Which side of the interface a point or element lies on. `Plus` is above
/// the graph `y = ψ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn tag(self) -> char {
        match self {
            Side::Plus => '+',
            Side::Minus => '-',
        }
    }

    pub fn from_tag(c: char) -> Option<Self> {
        match c {
            '+' => Some(Side::Plus),
            '-' => Some(Side::Minus),
            _ => None,
        }
    }
}

/// The global interface Σ as a graph `y = ψ(x)` over the horizontal axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Interface {
    Flat {
        y0: f64,
    },
    /// `y = y0 + c (x - xc)²`
    Parabola {
        y0: f64,
        c: f64,
        xc: f64,
    },
    Spline(CubicSpline),
}

impl Interface {
    /// `(ψ, ψ', ψ'')` at `x`.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Interface::Flat { y0 } => (*y0, 0.0, 0.0),
            Interface::Parabola { y0, c, xc } => {
                let d = x - xc;
                (y0 + c * d * d, 2.0 * c * d, 2.0 * c)
            }
            Interface::Spline(s) => s.eval3(x),
        }
    }

    pub fn height(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.eval3(x).1
    }

    /// Signed vertical offset of `p` from the graph.
    pub fn gap(&self, p: Point2<f64>) -> f64 {
        p.y - self.height(p.x)
    }

    pub fn side(&self, p: Point2<f64>) -> Side {
        if self.gap(p) > 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    pub fn point(&self, x: f64) -> Point2<f64> {
        Point2::new(x, self.height(x))
    }

    /// Induced metric `g^Σ = 1 + ψ'²` of the graph parameterisation.
    pub fn metric(&self, x: f64) -> f64 {
        let s = self.slope(x);
        1.0 + s * s
    }

    pub fn is_flat(&self) -> bool {
        matches!(self, Interface::Flat { .. })
    }
}
