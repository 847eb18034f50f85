use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Interface, Result, Side};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point2<f64>,
    pub max: Point2<f64>,
}

impl Aabb {
    pub fn new(min: Point2<f64>, max: Point2<f64>) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point2<f64>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x && other.min.x <= self.max.x && self.min.y <= other.max.y && other.min.y <= self.max.y
    }
}

/// Simple polygon given by its vertices in order (either orientation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point2<f64>>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2<f64>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidDomain("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(GeometryError::InvalidDomain("polygon vertex is not finite".into()));
        }
        let poly = Self { vertices };
        if poly.area() <= 0.0 {
            return Err(GeometryError::InvalidDomain("polygon has zero area".into()));
        }
        Ok(poly)
    }

    pub fn rectangle(min: Point2<f64>, max: Point2<f64>) -> Result<Self> {
        Self::new(vec![min, Point2::new(max.x, min.y), max, Point2::new(min.x, max.y)])
    }

    pub fn unit_square() -> Self {
        Self::rectangle(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).expect("unit square")
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2<f64>, Point2<f64>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn bbox(&self) -> Aabb {
        let mut min = self.vertices[0];
        let mut max = self.vertices[0];
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        Aabb::new(min, max)
    }

    /// Even-odd rule; boundary points may go either way.
    pub fn contains(&self, p: Point2<f64>) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Point2<f64>) -> f64 {
        self.edges().map(|(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// The bounding box when the polygon is an axis-aligned rectangle.
    pub fn as_rectangle(&self) -> Option<Aabb> {
        let bb = self.bbox();
        let corner = |v: &Point2<f64>| (v.x == bb.min.x || v.x == bb.max.x) && (v.y == bb.min.y || v.y == bb.max.y);
        let rel = 1e-12 * bb.area().max(1e-300);
        if self.vertices.len() == 4 && self.vertices.iter().all(corner) && (self.area() - bb.area()).abs() <= rel {
            Some(bb)
        } else {
            None
        }
    }
}

pub fn segment_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// The interior subdomain `D ⊂⊂ Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Subdomain {
    /// `{x ∈ Ω : dist(x, ∂Ω) > h}`
    Inset {
        h: f64,
    },
    Polygon(Polygon),
}

/// Global domain `Ω` cut by the interface graph, with an interior subdomain.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub omega: Polygon,
    pub interface: Arc<Interface>,
    pub subdomain: Subdomain,
    pub h: f64,
}

const COMPONENT_GRID: usize = 160;
const RUN_SAMPLES: usize = 4000;

impl DomainSpec {
    pub fn new(omega: Polygon, interface: Interface, subdomain: Subdomain, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(GeometryError::InvalidDomain(format!("margin h = {h} must be positive")));
        }
        let spec = Self { omega, interface: Arc::new(interface), subdomain, h };
        match &spec.subdomain {
            Subdomain::Inset { h: inset } => {
                if *inset < h {
                    return Err(GeometryError::InvalidDomain(format!(
                        "inset {inset} is smaller than the margin h = {h}"
                    )));
                }
            }
            Subdomain::Polygon(d) => {
                let n = 64;
                for (a, b) in d.edges() {
                    for i in 0..n {
                        let p = a + (b - a) * (i as f64 / n as f64);
                        if !spec.omega.contains(p) || spec.omega.boundary_distance(p) < h {
                            return Err(GeometryError::InvalidDomain(format!(
                                "subdomain point ({:.4}, {:.4}) is closer than h = {h} to ∂Ω",
                                p.x, p.y
                            )));
                        }
                    }
                }
            }
        }
        let comps = spec.count_components(COMPONENT_GRID);
        if comps != 2 {
            return Err(GeometryError::InvalidDomain(format!("Ω \\ Σ must have two components, found {comps}")));
        }
        Ok(spec)
    }

    /// Unit square split by the given interface, with `D = Ω_h`.
    pub fn unit_square(interface: Interface, h: f64) -> Result<Self> {
        Self::new(Polygon::unit_square(), interface, Subdomain::Inset { h }, h)
    }

    pub fn in_omega(&self, p: Point2<f64>) -> bool {
        self.omega.contains(p)
    }

    pub fn side(&self, p: Point2<f64>) -> Side {
        self.interface.side(p)
    }

    pub fn in_d(&self, p: Point2<f64>) -> bool {
        match &self.subdomain {
            Subdomain::Inset { h } => self.omega.contains(p) && self.omega.boundary_distance(p) > *h,
            Subdomain::Polygon(d) => d.contains(p),
        }
    }

    /// Lower bound on `dist(p, D)`; exact for convex `Ω`.
    pub fn dist_to_d(&self, p: Point2<f64>) -> f64 {
        match &self.subdomain {
            Subdomain::Inset { h } => {
                if self.omega.contains(p) {
                    (h - self.omega.boundary_distance(p)).max(0.0)
                } else {
                    h + self.omega.boundary_distance(p)
                }
            }
            Subdomain::Polygon(d) => {
                if d.contains(p) {
                    0.0
                } else {
                    d.boundary_distance(p)
                }
            }
        }
    }

    /// Membership in `D̃ = {dist(·, D) < r}`.
    pub fn in_enlarged(&self, p: Point2<f64>, r: f64) -> bool {
        self.in_d(p) || (self.dist_to_d(p) < r && self.in_omega(p))
    }

    pub fn d_bbox(&self) -> Aabb {
        match &self.subdomain {
            Subdomain::Inset { h } => {
                let b = self.omega.bbox();
                Aabb::new(Point2::new(b.min.x + h, b.min.y + h), Point2::new(b.max.x - h, b.max.y - h))
            }
            Subdomain::Polygon(d) => d.bbox(),
        }
    }

    /// Parameter intervals `[x₀, x₁]` on which the interface point `(x, ψ(x))`
    /// satisfies `inside`, with endpoints refined by bisection.
    pub fn interface_runs(&self, inside: impl Fn(Point2<f64>) -> bool) -> Vec<(f64, f64)> {
        let bb = self.omega.bbox();
        let (x0, x1) = (bb.min.x, bb.max.x);
        let n = RUN_SAMPLES;
        let at = |i: usize| x0 + (x1 - x0) * i as f64 / n as f64;
        let test = |x: f64| inside(self.interface.point(x));
        let refine = |mut a: f64, mut b: f64, a_in: bool| {
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if test(m) == a_in {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let mut runs = Vec::new();
        let mut start: Option<f64> = if test(at(0)) { Some(at(0)) } else { None };
        let mut prev = start.is_some();
        for i in 1..=n {
            let x = at(i);
            let cur = test(x);
            if cur != prev {
                let edge = refine(at(i - 1), x, prev);
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

    /// `Σ ∩ D` as parameter intervals.
    pub fn interface_runs_in_d(&self) -> Vec<(f64, f64)> {
        self.interface_runs(|p| self.in_d(p))
    }

    /// Components of `Ω \ Σ` counted by flood fill on a cell grid.
    pub fn count_components(&self, n: usize) -> usize {
        let bb = self.omega.bbox();
        let (dx, dy) = (bb.width() / n as f64, bb.height() / n as f64);
        let cell = |i: usize, j: usize| Point2::new(bb.min.x + (i as f64 + 0.5) * dx, bb.min.y + (j as f64 + 0.5) * dy);
        let mut label: Vec<Option<(Side, bool)>> = vec![None; n * n];
        for j in 0..n {
            for i in 0..n {
                let p = cell(i, j);
                if self.omega.contains(p) {
                    label[j * n + i] = Some((self.interface.side(p), false));
                }
            }
        }
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..n * n {
            let Some((side, false)) = label[start] else { continue };
            count += 1;
            label[start] = Some((side, true));
            queue.push_back(start);
            while let Some(k) = queue.pop_front() {
                let (i, j) = (k % n, k / n);
                let nbrs = [
                    (i > 0).then(|| k - 1),
                    (i + 1 < n).then(|| k + 1),
                    (j > 0).then(|| k - n),
                    (j + 1 < n).then(|| k + n),
                ];
                for m in nbrs.into_iter().flatten() {
                    if label[m] == Some((side, false)) {
                        label[m] = Some((side, true));
                        queue.push_back(m);
                    }
                }
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_basics() {
        let sq = Polygon::unit_square();
        assert!((sq.area() - 1.0).abs() < 1e-15);
        assert!(sq.contains(Point2::new(0.5, 0.5)));
        assert!(!sq.contains(Point2::new(1.5, 0.5)));
        assert!((sq.boundary_distance(Point2::new(0.3, 0.5)) - 0.3).abs() < 1e-15);
        assert!(sq.as_rectangle().is_some());
        let tri = Polygon::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]).unwrap();
        assert!(tri.as_rectangle().is_none());
        assert!((tri.area() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_components_required() {
        assert!(DomainSpec::unit_square(Interface::Flat { y0: 0.5 }, 0.1).is_ok());
        // interface above the domain: only one component
        assert!(DomainSpec::unit_square(Interface::Flat { y0: 2.0 }, 0.1).is_err());
    }

    #[test]
    fn interface_runs_in_inset() {
        let spec = DomainSpec::unit_square(Interface::Flat { y0: 0.5 }, 0.1).unwrap();
        let runs = spec.interface_runs_in_d();
        assert_eq!(runs.len(), 1);
        assert!((runs[0].0 - 0.1).abs() < 1e-12 && (runs[0].1 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn enlarged_set() {
        let spec = DomainSpec::unit_square(Interface::Flat { y0: 0.5 }, 0.2).unwrap();
        let p = Point2::new(0.15, 0.5);
        assert!(!spec.in_d(p));
        assert!(spec.in_enlarged(p, 0.1));
        assert!(!spec.in_enlarged(p, 0.04));
    }
}
