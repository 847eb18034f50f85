use std::collections::HashMap;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::{Result, SolverError};
use crate::geometry::{Aabb, DomainSpec, Side};
use crate::quadrature::triangle_area;

pub const MARKER_BOTTOM: u32 = 1;
pub const MARKER_RIGHT: u32 = 2;
pub const MARKER_TOP: u32 = 3;
pub const MARKER_LEFT: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub marker: u32,
}

/// Conforming triangulation with per-element side tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<Point2<f64>>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub sides: Vec<Side>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub interface_edges: Vec<[usize; 2]>,
}

impl Mesh {
    /// Assembles a mesh from raw nodes and triangles, orienting elements
    /// counter-clockwise, dropping degenerate ones and detecting the boundary.
    pub fn from_parts(nodes: Vec<Point2<f64>>, triangles: Vec<[usize; 3]>, sides: Vec<Side>) -> Result<Self> {
        if triangles.len() != sides.len() {
            return Err(SolverError::DimensionMismatch { expected: triangles.len(), got: sides.len() });
        }
        let mut tris = Vec::with_capacity(triangles.len());
        let mut tags = Vec::with_capacity(sides.len());
        for (t, s) in triangles.into_iter().zip(sides) {
            if t.iter().any(|&i| i >= nodes.len()) {
                return Err(SolverError::MeshFailure(format!("triangle {t:?} references a missing node")));
            }
            let v = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
            let area = triangle_area(&v);
            let scale = (v[1] - v[0]).norm_squared().max((v[2] - v[0]).norm_squared());
            if area.abs() <= 1e-14 * scale {
                continue;
            }
            tris.push(if area > 0.0 { t } else { [t[0], t[2], t[1]] });
            tags.push(s);
        }
        let mut mesh =
            Self { nodes, triangles: tris, sides: tags, boundary_edges: Vec::new(), interface_edges: Vec::new() };
        mesh.boundary_edges = mesh.free_edges().into_iter().map(|e| BoundaryEdge { nodes: e, marker: 0 }).collect();
        mesh.interface_edges = mesh.tag_interface_edges();
        Ok(mesh)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [Point2<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        triangle_area(&self.vertices(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point2<f64> {
        let v = self.vertices(t);
        Point2::from((v[0].coords + v[1].coords + v[2].coords) / 3.0)
    }

    pub fn bbox(&self) -> Aabb {
        let mut b = Aabb::new(self.nodes[0], self.nodes[0]);
        for p in &self.nodes {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        b
    }

    /// Gradients of the three barycentric hat functions on element `t`.
    pub fn hat_gradients(&self, t: usize) -> [nalgebra::Vector2<f64>; 3] {
        let v = self.vertices(t);
        let two_a = 2.0 * triangle_area(&v);
        let g = |i: usize| {
            let (p, q) = (v[(i + 1) % 3], v[(i + 2) % 3]);
            nalgebra::Vector2::new(p.y - q.y, q.x - p.x) / two_a
        };
        [g(0), g(1), g(2)]
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let v = self.vertices(t);
        (v[0] - v[1]).norm().max((v[1] - v[2]).norm()).max((v[2] - v[0]).norm())
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    /// Smallest interior angle over all elements, in degrees.
    pub fn min_angle(&self) -> f64 {
        let mut best = 180.0f64;
        for t in 0..self.n_triangles() {
            let v = self.vertices(t);
            for i in 0..3 {
                let a = v[(i + 1) % 3] - v[i];
                let b = v[(i + 2) % 3] - v[i];
                let ang = (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees();
                best = best.min(ang);
            }
        }
        best
    }

    fn edge_map(&self) -> HashMap<[usize; 2], Vec<usize>> {
        let mut map: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                map.entry([a.min(b), a.max(b)]).or_default().push(t);
            }
        }
        map
    }

    /// Edges belonging to exactly one element, sorted.
    fn free_edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> =
            self.edge_map().into_iter().filter(|(_, ts)| ts.len() == 1).map(|(e, _)| e).collect();
        edges.sort_unstable();
        edges
    }

    /// Interior edges shared by a `Plus` and a `Minus` element, sorted.
    fn tag_interface_edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .edge_map()
            .into_iter()
            .filter(|(_, ts)| ts.len() == 2 && self.sides[ts[0]] != self.sides[ts[1]])
            .map(|(e, _)| e)
            .collect();
        edges.sort_unstable();
        edges
    }

    /// The two elements sharing each interior edge.
    pub fn edge_neighbours(&self) -> HashMap<[usize; 2], Vec<usize>> {
        self.edge_map()
    }

    /// Sorted, deduplicated boundary node indices.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_edges.iter().flat_map(|e| e.nodes).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn boundary_nodes_with(&self, markers: &[u32]) -> Vec<usize> {
        let mut v: Vec<usize> =
            self.boundary_edges.iter().filter(|e| markers.contains(&e.marker)).flat_map(|e| e.nodes).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Elements whose three vertices or centroid fall on the wrong side of
    /// the interface gap function, allowing `tol` for nodes on Σ.
    pub fn straddling(&self, gap: impl Fn(Point2<f64>) -> f64, tol: f64) -> usize {
        (0..self.n_triangles())
            .filter(|&t| {
                let s = match self.sides[t] {
                    Side::Plus => 1.0,
                    Side::Minus => -1.0,
                };
                let v = self.vertices(t);
                v.iter().chain(std::iter::once(&self.centroid(t))).any(|p| s * gap(*p) < -tol)
            })
            .count()
    }
}

/// Interface-fitted mesh of an axis-aligned rectangular domain cut by a
/// graph interface, with max element diameter at most `target`.
pub fn build_mesh(spec: &DomainSpec, target: f64) -> Result<Mesh> {
    let Some(bb) = spec.omega.as_rectangle() else {
        return Err(SolverError::MeshFailure("meshing supports axis-aligned rectangular domains only".into()));
    };
    if !(target > 0.0 && target.is_finite()) {
        return Err(SolverError::InvalidParams(format!("mesh size {target} must be positive")));
    }
    let iface = &spec.interface;
    let mut cell = target / std::f64::consts::SQRT_2;
    for _ in 0..40 {
        let nx = (bb.width() / cell).ceil().max(1.0) as usize;
        let xs: Vec<f64> = (0..=nx).map(|i| bb.min.x + bb.width() * i as f64 / nx as f64).collect();
        let heights: Vec<f64> = xs.iter().map(|&x| iface.height(x)).collect();
        let gap_lo = heights.iter().map(|h| h - bb.min.y).fold(f64::INFINITY, f64::min);
        let gap_hi = heights.iter().map(|h| bb.max.y - h).fold(f64::INFINITY, f64::min);
        if !(gap_lo > 0.0 && gap_hi > 0.0) {
            return Err(SolverError::MeshFailure("interface must cross the rectangle strictly inside".into()));
        }
        let thick_lo = heights.iter().map(|h| h - bb.min.y).fold(0.0, f64::max);
        let thick_hi = heights.iter().map(|h| bb.max.y - h).fold(0.0, f64::max);
        let ny_lo = (thick_lo / cell).ceil().max(1.0) as usize;
        let ny_hi = (thick_hi / cell).ceil().max(1.0) as usize;
        let mesh = column_mesh(&xs, &heights, bb.min.y, bb.max.y, ny_lo, ny_hi)?;
        if mesh.max_diameter() <= target {
            let angle = mesh.min_angle();
            if angle < 20.0 {
                return Err(SolverError::MeshFailure(format!(
                    "minimum angle {angle:.1}° is below 20°; the interface is too steep or too close to ∂Ω"
                )));
            }
            return Ok(mesh);
        }
        cell *= 0.9;
    }
    Err(SolverError::MeshFailure(format!("could not reach element diameter {target}")))
}

fn column_mesh(xs: &[f64], heights: &[f64], y0: f64, y1: f64, ny_lo: usize, ny_hi: usize) -> Result<Mesh> {
    let nx = xs.len() - 1;
    let ny = ny_lo + ny_hi;
    let id = |i: usize, j: usize| i * (ny + 1) + j;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for (i, &x) in xs.iter().enumerate() {
        let h = heights[i];
        for j in 0..=ny {
            let y = if j <= ny_lo {
                y0 + (h - y0) * j as f64 / ny_lo as f64
            } else {
                h + (y1 - h) * (j - ny_lo) as f64 / ny_hi as f64
            };
            // pin the exact interface height and the box edges
            let y = if j == ny_lo {
                h
            } else if j == ny {
                y1
            } else {
                y
            };
            nodes.push(Point2::new(x, y));
        }
    }
    let mut tris = Vec::with_capacity(2 * nx * ny);
    let mut sides = Vec::with_capacity(2 * nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let side = if j < ny_lo { Side::Minus } else { Side::Plus };
            if (nodes[a] - nodes[c]).norm() <= (nodes[b] - nodes[d]).norm() {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
            sides.push(side);
            sides.push(side);
        }
    }
    let mut mesh = Mesh::from_parts(nodes, tris, sides)?;
    let (x0, x1) = (xs[0], xs[nx]);
    for e in &mut mesh.boundary_edges {
        let (p, q) = (mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]]);
        e.marker = if p.y == y0 && q.y == y0 {
            MARKER_BOTTOM
        } else if p.y == y1 && q.y == y1 {
            MARKER_TOP
        } else if p.x == x1 && q.x == x1 {
            MARKER_RIGHT
        } else if p.x == x0 && q.x == x0 {
            MARKER_LEFT
        } else {
            0
        };
    }
    Ok(mesh)
}

/// Triangulates a region star-shaped about `center`, whose boundary lies at
/// distance `radius(φ)` in direction `φ`. Rings are scaled copies of the
/// boundary; every ring carries nodes at `φ = 0` and `φ = π`, and the upper
/// and lower halves are triangulated separately so the horizontal line
/// through `center` is made of mesh edges. Nodes are mapped through `map`
/// and elements tagged by `side` evaluated at the unmapped centroid.
pub fn star_mesh(
    center: Point2<f64>,
    radius: impl Fn(f64) -> f64,
    spacing: f64,
    map: impl Fn(Point2<f64>) -> Point2<f64>,
    side: impl Fn(Point2<f64>) -> Side,
) -> Result<Mesh> {
    use std::f64::consts::PI;
    if !(spacing > 0.0) {
        return Err(SolverError::InvalidParams(format!("spacing {spacing} must be positive")));
    }
    let probe: Vec<f64> = (0..720).map(|i| radius(2.0 * PI * i as f64 / 720.0)).collect();
    let r_max = probe.iter().copied().fold(0.0, f64::max);
    if !(r_max > 0.0) || probe.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(SolverError::MeshFailure("star-shaped region needs a positive boundary radius".into()));
    }
    let n = (r_max / spacing).ceil().max(2.0) as usize;
    let mut local = vec![center];
    // per ring: upper chain (φ from 0 to π) and lower chain (φ from π to 2π)
    let mut upper: Vec<Vec<usize>> = vec![vec![0]];
    let mut lower: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..=n {
        let frac = k as f64 / n as f64;
        let half = ((PI * frac * r_max / spacing).ceil() as usize).max(2);
        let base = local.len();
        for j in 0..2 * half {
            let phi = PI * j as f64 / half as f64;
            let r = frac * radius(phi);
            // exact axis directions keep the split line straight
            let (sin, cos) = if j == half { (0.0, -1.0) } else { phi.sin_cos() };
            local.push(center + nalgebra::Vector2::new(r * cos, r * sin));
        }
        upper.push((0..=half).map(|j| base + j).collect());
        lower.push((half..=2 * half).map(|j| base + j % (2 * half)).collect());
    }
    let mut tris = Vec::new();
    let mut sides = Vec::new();
    for chains in [&upper, &lower] {
        for w in chains.windows(2) {
            zipper(&local, &w[0], &w[1], &mut tris);
        }
    }
    for t in &tris {
        let c = Point2::from((local[t[0]].coords + local[t[1]].coords + local[t[2]].coords) / 3.0);
        sides.push(side(c));
    }
    let nodes = local.into_iter().map(map).collect();
    Mesh::from_parts(nodes, tris, sides)
}

/// Triangulates `{(x, y) : y_lo ≤ y ≤ y_hi, x_lo(y) ≤ x ≤ x_hi(y)}` by
/// rows. Each level in `pins` is a row, so horizontal interfaces there are
/// made of mesh edges; rows of vanishing width collapse to a single node.
/// Nodes are mapped through `map` and elements tagged by `side` evaluated
/// at the unmapped centroid.
pub fn slab_mesh(
    y_lo: f64,
    y_hi: f64,
    width: impl Fn(f64) -> (f64, f64),
    pins: &[f64],
    spacing: f64,
    map: impl Fn(Point2<f64>) -> Point2<f64>,
    side: impl Fn(Point2<f64>) -> Side,
) -> Result<Mesh> {
    if !(spacing > 0.0 && y_hi > y_lo) {
        return Err(SolverError::InvalidParams(format!(
            "slab needs spacing > 0 and y_hi > y_lo; got {spacing}, [{y_lo}, {y_hi}]"
        )));
    }
    let mut cuts = vec![y_lo];
    cuts.extend(pins.iter().copied().filter(|&p| p > y_lo && p < y_hi));
    cuts.push(y_hi);
    cuts.sort_by(f64::total_cmp);
    let row_step = spacing * 3f64.sqrt() / 2.0;
    let mut levels = vec![y_lo];
    for w in cuts.windows(2) {
        let n = ((w[1] - w[0]) / row_step).ceil().max(1.0) as usize;
        levels.extend((1..=n).map(|k| if k == n { w[1] } else { w[0] + (w[1] - w[0]) * k as f64 / n as f64 }));
    }
    let mut local = Vec::new();
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(levels.len());
    for &y in &levels {
        let (a, b) = width(y);
        if !(a.is_finite() && b.is_finite() && b >= a) {
            return Err(SolverError::MeshFailure(format!("invalid slab row [{a}, {b}] at y = {y}")));
        }
        let m = ((b - a) / spacing).ceil() as usize;
        let base = local.len();
        if m == 0 {
            local.push(Point2::new(0.5 * (a + b), y));
            rows.push(vec![base]);
        } else {
            local.extend((0..=m).map(|j| Point2::new(if j == m { b } else { a + (b - a) * j as f64 / m as f64 }, y)));
            rows.push((base..=base + m).collect());
        }
    }
    let mut tris = Vec::new();
    for w in rows.windows(2) {
        zipper(&local, &w[0], &w[1], &mut tris);
    }
    let sides = tris
        .iter()
        .map(|t| side(Point2::from((local[t[0]].coords + local[t[1]].coords + local[t[2]].coords) / 3.0)))
        .collect();
    let nodes = local.into_iter().map(map).collect();
    Mesh::from_parts(nodes, tris, sides)
}

/// Triangulates the strip between two chains with aligned end points,
/// always closing the shorter diagonal.
fn zipper(pts: &[Point2<f64>], lo: &[usize], hi: &[usize], out: &mut Vec<[usize; 3]>) {
    let (mut i, mut j) = (0, 0);
    while i + 1 < lo.len() || j + 1 < hi.len() {
        let advance_lo = if i + 1 >= lo.len() {
            false
        } else if j + 1 >= hi.len() {
            true
        } else {
            (pts[lo[i + 1]] - pts[hi[j]]).norm() <= (pts[hi[j + 1]] - pts[lo[i]]).norm()
        };
        if advance_lo {
            i += 1;
            out.push([lo[i - 1], lo[i], hi[j]]);
        } else {
            j += 1;
            out.push([lo[i], hi[j], hi[j - 1]]);
        }
    }
}
