use std::sync::Arc;

use nalgebra::{Point2, Vector2};

use super::{GeometryError, Interface, Result};

/// Local graph `y = ψ(x)` of Σ in the coordinates of a chart, with
/// `ψ(0) = 0` and `ψ'(0) = 0`.
#[derive(Debug, Clone)]
pub enum LocalGraph {
    Flat,
    /// `ψ(x) = c x²`
    Parabola {
        c: f64,
    },
    /// The global interface seen from a rotated frame at `(x_p, ψ_glob(x_p))`.
    /// Evaluated by solving the rotated graph equation for each abscissa.
    Regraphed {
        interface: Arc<Interface>,
        x_p: f64,
        y_p: f64,
        cos: f64,
        sin: f64,
    },
}

const REGRAPH_TOL: f64 = 1e-12;

impl LocalGraph {
    /// `(ψ, ψ', ψ'')` at local abscissa `s`.
    pub fn eval3(&self, s: f64) -> (f64, f64, f64) {
        match self {
            LocalGraph::Flat => (0.0, 0.0, 0.0),
            LocalGraph::Parabola { c } => (c * s * s, 2.0 * c * s, 2.0 * c),
            LocalGraph::Regraphed { interface, x_p, y_p, cos, sin } => {
                let x = regraph_abscissa(interface, *x_p, *y_p, *cos, *sin, s);
                let (g, dg, ddg) = interface.eval3(x);
                let ds = cos + sin * dg;
                let t = -sin * (x - x_p) + cos * (g - y_p);
                let dt = (-sin + cos * dg) / ds;
                let ddt = ddg / (ds * ds * ds);
                (t, dt, ddt)
            }
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            LocalGraph::Flat => 0.0,
            LocalGraph::Parabola { c } => c * s * s,
            _ => self.eval3(s).0,
        }
    }
}

/// Solves `cos (x - x_p) + sin (ψ(x) - y_p) = s` for the global abscissa.
fn regraph_abscissa(interface: &Interface, x_p: f64, y_p: f64, cos: f64, sin: f64, s: f64) -> f64 {
    if s == 0.0 {
        return x_p;
    }
    let residual = |x: f64| cos * (x - x_p) + sin * (interface.height(x) - y_p) - s;
    let mut x = x_p + s * cos;
    for _ in 0..60 {
        let (g, dg, _) = interface.eval3(x);
        let r = cos * (x - x_p) + sin * (g - y_p) - s;
        let d = cos + sin * dg;
        if d.abs() < 1e-3 {
            break;
        }
        let step = r / d;
        x -= step;
        if step.abs() <= REGRAPH_TOL * (1.0 + x.abs()) * 1e-2 {
            return x;
        }
    }
    // Newton stalled: bracket and bisect.
    let mut lo = x_p;
    let mut hi = x_p + s.signum() * s.abs().max(1e-6);
    let mut grow = 0;
    while residual(lo).signum() == residual(hi).signum() && grow < 60 {
        hi = x_p + (hi - x_p) * 2.0;
        grow += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid).signum() == residual(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < REGRAPH_TOL * 1e-2 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Local chart of Σ at a point `P`: a rigid motion taking `P` to the origin
/// and the tangent at `P` to the horizontal axis, followed by the graph
/// representation `y = ψ(x)` on the cylinder `|x| < r0, |y| ≤ K0 r0² / 2`.
#[derive(Debug, Clone)]
pub struct InterfaceChart {
    center: Point2<f64>,
    cos: f64,
    sin: f64,
    graph: LocalGraph,
    r0: f64,
    k0: f64,
    zeta_norm: f64,
    c2_norm: f64,
}

const AUDIT_SAMPLES: usize = 2001;

impl InterfaceChart {
    /// Builds a chart with an explicit rotation angle (radians, tangent
    /// direction) and validates the C² constants.
    pub fn new(center: Point2<f64>, angle: f64, graph: LocalGraph, r0: f64, k0: f64) -> Result<Self> {
        if !(r0 > 0.0 && k0 > 0.0 && r0.is_finite() && k0.is_finite()) {
            return Err(GeometryError::InvalidChart(format!("r0 and K0 must be positive, got r0={r0}, K0={k0}")));
        }
        let (sin, cos) = angle.sin_cos();
        let mut chart = Self { center, cos, sin, graph, r0, k0, zeta_norm: 0.0, c2_norm: 0.0 };
        let (v0, d0, dd0) = chart.graph.eval3(0.0);
        if v0.abs() > 1e-12 || d0.abs() > 1e-10 {
            return Err(GeometryError::InvalidChart(format!("graph must satisfy ψ(0)=0, ψ'(0)=0; got {v0:e}, {d0:e}")));
        }
        let mut c2: f64 = 0.0;
        let mut zeta = 0.5 * dd0.abs();
        let mut best_s = 0.0;
        for i in 0..AUDIT_SAMPLES {
            let s = r0 * (2.0 * i as f64 / (AUDIT_SAMPLES - 1) as f64 - 1.0) * (1.0 - 1e-9);
            let (v, d, dd) = chart.graph.eval3(s);
            c2 = c2.max(v.abs()).max(d.abs()).max(dd.abs());
            if s != 0.0 {
                let z = (v / (s * s)).abs();
                if z > zeta {
                    zeta = z;
                    best_s = s;
                }
            }
        }
        if best_s != 0.0 {
            zeta = zeta.max(refine_zeta(&chart.graph, best_s, 2.0 * r0 / (AUDIT_SAMPLES - 1) as f64, r0));
        }
        if c2 > k0 * (1.0 + 1e-12) {
            return Err(GeometryError::InvalidChart(format!("C² norm of ψ is {c2:.6} > K0 = {k0}")));
        }
        chart.zeta_norm = if matches!(chart.graph, LocalGraph::Flat) { 0.0 } else { zeta };
        chart.c2_norm = c2;
        Ok(chart)
    }

    /// Flat chart centred at `center` with axis-aligned frame.
    pub fn flat(center: Point2<f64>, r0: f64, k0: f64) -> Result<Self> {
        Self::new(center, 0.0, LocalGraph::Flat, r0, k0)
    }

    /// Parabolic chart `ψ(x) = c x²` with axis-aligned frame.
    pub fn parabola(center: Point2<f64>, c: f64, r0: f64, k0: f64) -> Result<Self> {
        Self::new(center, 0.0, LocalGraph::Parabola { c }, r0, k0)
    }

    /// Chart of the global interface at `P = (x_p, ψ(x_p))`: rotate so the
    /// tangent at `P` is horizontal, then re-graph locally.
    pub fn at(interface: &Arc<Interface>, x_p: f64, r0: f64, k0: f64) -> Result<Self> {
        let (y_p, slope, _) = interface.eval3(x_p);
        let center = Point2::new(x_p, y_p);
        match interface.as_ref() {
            Interface::Flat { .. } => Self::new(center, 0.0, LocalGraph::Flat, r0, k0),
            Interface::Parabola { c, xc, .. } if (x_p - xc).abs() < 1e-15 => {
                Self::new(center, 0.0, LocalGraph::Parabola { c: *c }, r0, k0)
            }
            _ => {
                let angle = slope.atan();
                let (sin, cos) = angle.sin_cos();
                let graph = LocalGraph::Regraphed { interface: interface.clone(), x_p, y_p, cos, sin };
                Self::new(center, angle, graph, r0, k0)
            }
        }
    }

    pub fn center(&self) -> Point2<f64> {
        self.center
    }

    pub fn graph(&self) -> &LocalGraph {
        &self.graph
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// `sup |ψ(x)| / |x|²` over the chart.
    pub fn zeta_norm(&self) -> f64 {
        self.zeta_norm
    }

    /// Sampled `max(sup|ψ|, sup|ψ'|, sup|ψ''|)`.
    pub fn c2_norm(&self) -> f64 {
        self.c2_norm
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.graph, LocalGraph::Flat)
    }

    pub fn psi(&self, s: f64) -> f64 {
        self.graph.value(s)
    }

    /// Half-height of the chart cylinder, `K0 r0² / 2`.
    pub fn cylinder_height(&self) -> f64 {
        0.5 * self.k0 * self.r0 * self.r0
    }

    pub fn to_local(&self, p: Point2<f64>) -> Point2<f64> {
        let d = p - self.center;
        Point2::new(self.cos * d.x + self.sin * d.y, -self.sin * d.x + self.cos * d.y)
    }

    pub fn to_global(&self, l: Point2<f64>) -> Point2<f64> {
        self.center + Vector2::new(self.cos * l.x - self.sin * l.y, self.sin * l.x + self.cos * l.y)
    }

    pub fn in_cylinder(&self, l: Point2<f64>) -> bool {
        l.x.abs() < self.r0 && l.y.abs() <= self.cylinder_height()
    }

    /// `Ψ_P`: global point to flattened coordinates `(x, y - ψ(x))`.
    pub fn flatten(&self, p: Point2<f64>) -> Result<Point2<f64>> {
        let l = self.to_local(p);
        if !self.in_cylinder(l) {
            return Err(GeometryError::OutOfChart { x: p.x, y: p.y });
        }
        Ok(Point2::new(l.x, l.y - self.psi(l.x)))
    }

    /// `Ψ_P⁻¹`: flattened coordinates back to a global point.
    pub fn unflatten(&self, q: Point2<f64>) -> Result<Point2<f64>> {
        if q.x.abs() >= self.r0 {
            return Err(GeometryError::OutOfChart { x: q.x, y: q.y });
        }
        let l = Point2::new(q.x, q.y + self.psi(q.x));
        if !self.in_cylinder(l) {
            return Err(GeometryError::OutOfChart { x: q.x, y: q.y });
        }
        Ok(self.to_global(l))
    }

    /// Point of Σ at local abscissa `s`, in global coordinates.
    pub fn surface_point(&self, s: f64) -> Point2<f64> {
        self.to_global(Point2::new(s, self.psi(s)))
    }
}

fn refine_zeta(graph: &LocalGraph, s0: f64, step: f64, r0: f64) -> f64 {
    let f = |s: f64| {
        if s == 0.0 {
            0.5 * graph.eval3(0.0).2.abs()
        } else {
            (graph.value(s) / (s * s)).abs()
        }
    };
    let lim = r0 * (1.0 - 1e-9);
    let (mut a, mut b) = ((s0 - step).max(-lim), (s0 + step).min(lim));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    f(0.5 * (a + b)).max(f(s0))
}
