use std::collections::VecDeque;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::{Aabb, DomainSpec, GeometryError, Result};
use crate::quadrature;

/// Greedy cover of `Σ ∩ D` by balls centered on the interface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VitaliCover {
    pub centers: Vec<Point2<f64>>,
    /// Radius `νh` of the pairwise disjoint balls.
    pub radius: f64,
    /// `|Σ ∩ D|`
    pub sigma_length: f64,
    /// Number of connected pieces of `Σ ∩ D`.
    pub runs: usize,
    /// Observed `N h^{n-1} / |Σ ∩ D|`.
    pub count_constant: f64,
}

impl VitaliCover {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Radius `5νh` of the covering balls.
    pub fn coverage_radius(&self) -> f64 {
        5.0 * self.radius
    }

    /// Packing bound on `N`: disjoint `νh`-balls centered on a curve each
    /// capture at least `νh` of its length.
    pub fn count_bound(&self) -> f64 {
        self.sigma_length / self.radius + self.runs as f64
    }

    /// Smallest distance between two distinct centers.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.centers.iter().enumerate() {
            for b in &self.centers[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }
}

/// Points of `Σ ∩ D` with arclength spacing at most `spacing`, and `|Σ ∩ D|`.
pub fn sample_interface_in_d(spec: &DomainSpec, spacing: f64) -> Result<(Vec<Point2<f64>>, f64, usize)> {
    let runs = spec.interface_runs_in_d();
    let mut pts = Vec::new();
    let mut length = 0.0;
    let iface = &spec.interface;
    for &(a, b) in &runs {
        let speed = |x: f64| iface.metric(x).sqrt();
        let len = quadrature::integrate(speed, a, b, 64, 8);
        length += len;
        let max_speed = (0..=256).map(|i| speed(a + (b - a) * i as f64 / 256.0)).fold(1.0, f64::max);
        let dx = spacing / (max_speed * 1.01);
        let n = ((b - a) / dx).ceil().max(1.0) as usize;
        if pts.len() + n > MAX_SAMPLES {
            return Err(GeometryError::CoverFailure(format!(
                "interface sampling needs more than {MAX_SAMPLES} points at spacing {spacing:e}"
            )));
        }
        pts.extend((0..=n).map(|i| iface.point(a + (b - a) * i as f64 / n as f64)));
    }
    Ok((pts, length, runs.len()))
}

const MAX_SAMPLES: usize = 4_000_000;

/// Greedy farthest-point cover of `Σ ∩ D` with disjoint `νh`-balls.
pub fn vitali_cover(spec: &DomainSpec, nu: f64, h: f64) -> Result<VitaliCover> {
    if !(nu > 0.0 && nu < 1.0 && h > 0.0) {
        return Err(GeometryError::InvalidParams(format!("need 0 < nu < 1 and h > 0, got nu={nu}, h={h}")));
    }
    let r = nu * h;
    let (samples, sigma_length, runs) = sample_interface_in_d(spec, r / 10.0)?;
    let mut centers = Vec::new();
    if samples.is_empty() {
        return Ok(VitaliCover { centers, radius: r, sigma_length, runs, count_constant: 0.0 });
    }
    let cap = (2.0 * sigma_length / r) as usize + 2 * runs + 16;
    let first = (0..samples.len()).min_by(|&i, &j| samples[i].x.total_cmp(&samples[j].x)).expect("non-empty");
    let mut dist = vec![f64::INFINITY; samples.len()];
    let mut next = first;
    loop {
        let c = samples[next];
        centers.push(c);
        if centers.len() > cap {
            return Err(GeometryError::CoverFailure(format!("greedy cover exceeded {cap} centers")));
        }
        let mut far = (0, -1.0);
        for (i, p) in samples.iter().enumerate() {
            let d = (p - c).norm();
            if d < dist[i] {
                dist[i] = d;
            }
            if dist[i] > far.1 {
                far = (i, dist[i]);
            }
        }
        if far.1 < 2.0 * r {
            break;
        }
        next = far.0;
    }
    let count_constant = if sigma_length > 0.0 { centers.len() as f64 * h / sigma_length } else { 0.0 };
    Ok(VitaliCover { centers, radius: r, sigma_length, runs, count_constant })
}

/// Chain of centers along a path, consecutive centers `2r₁` apart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallChain {
    pub centers: Vec<Point2<f64>>,
    /// The polyline the centers were placed on.
    pub path: Vec<Point2<f64>>,
    pub r1: f64,
}

impl BallChain {
    /// Number of steps `N` (centers minus one).
    pub fn steps(&self) -> usize {
        self.centers.len().saturating_sub(1)
    }

    /// `max_k (|γ_{k+1} − γ_k| + r₁) − r₂`; non-positive (up to rounding)
    /// when every `B_{r₁}(γ_{k+1}) ⊂ B_{r₂}(γ_k)`.
    pub fn nesting_excess(&self, r2: f64) -> f64 {
        self.centers.windows(2).map(|w| (w[1] - w[0]).norm() + self.r1 - r2).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest distance between centers that must carry disjoint balls
    /// (all pairs except the final one).
    pub fn min_separation(&self) -> f64 {
        let n = self.centers.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                if i + 2 == n && j + 1 == n {
                    continue;
                }
                best = best.min((self.centers[i] - self.centers[j]).norm());
            }
        }
        best
    }
}

/// Chain of balls from `x0` to `y` inside `D̃ = {dist(·, D) < r₁}`.
pub fn ball_chain(spec: &DomainSpec, x0: Point2<f64>, y: Point2<f64>, r1: f64) -> Result<BallChain> {
    let bb = spec.omega.bbox();
    ball_chain_in(|p| spec.in_enlarged(p, r1), bb, x0, y, r1)
}

/// Chain of balls inside an arbitrary open set given by `inside`, searched
/// within `bbox`.
pub fn ball_chain_in(
    inside: impl Fn(Point2<f64>) -> bool,
    bbox: Aabb,
    x0: Point2<f64>,
    y: Point2<f64>,
    r1: f64,
) -> Result<BallChain> {
    if !(r1 > 0.0) {
        return Err(GeometryError::InvalidParams(format!("r1 = {r1} must be positive")));
    }
    if !inside(x0) || !inside(y) {
        return Err(GeometryError::PathNotFound { from: x0, to: y });
    }
    let path = find_path(&inside, bbox, x0, y, r1)?;
    let centers = place_centers(&path, r1);
    Ok(BallChain { centers, path, r1 })
}

fn visible(inside: &impl Fn(Point2<f64>) -> bool, a: Point2<f64>, b: Point2<f64>, step: f64) -> bool {
    let n = ((b - a).norm() / step).ceil() as usize;
    (1..n).all(|i| inside(a + (b - a) * (i as f64 / n as f64)))
}

fn find_path(
    inside: &impl Fn(Point2<f64>) -> bool,
    bbox: Aabb,
    x0: Point2<f64>,
    y: Point2<f64>,
    r1: f64,
) -> Result<Vec<Point2<f64>>> {
    let step = r1 / 20.0;
    if visible(inside, x0, y, step) {
        return Ok(vec![x0, y]);
    }
    let cell = r1 / 4.0;
    let i_lo = ((bbox.min.x - x0.x) / cell).floor() as i64;
    let i_hi = ((bbox.max.x - x0.x) / cell).ceil() as i64;
    let j_lo = ((bbox.min.y - x0.y) / cell).floor() as i64;
    let j_hi = ((bbox.max.y - x0.y) / cell).ceil() as i64;
    let nx = (i_hi - i_lo + 1) as usize;
    let ny = (j_hi - j_lo + 1) as usize;
    if nx.saturating_mul(ny) > 16_000_000 {
        return Err(GeometryError::InvalidParams(format!("path grid of {nx}x{ny} cells is too large")));
    }
    let node = |k: usize| {
        let (i, j) = ((k % nx) as i64 + i_lo, (k / nx) as i64 + j_lo);
        Point2::new(x0.x + i as f64 * cell, x0.y + j as f64 * cell)
    };
    let open: Vec<bool> = (0..nx * ny).map(|k| inside(node(k))).collect();
    let start = ((-j_lo) as usize) * nx + (-i_lo) as usize;
    let mut parent = vec![usize::MAX; nx * ny];
    parent[start] = start;
    let mut queue = VecDeque::from([start]);
    let mut goal = None;
    while let Some(k) = queue.pop_front() {
        let p = node(k);
        if (p - y).norm() <= 2.0 * cell && visible(inside, p, y, step) {
            goal = Some(k);
            break;
        }
        let (i, j) = ((k % nx) as i64, (k / nx) as i64);
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                continue;
            }
            let m = b as usize * nx + a as usize;
            if parent[m] != usize::MAX || !open[m] {
                continue;
            }
            let mid = Point2::from((p.coords + node(m).coords) * 0.5);
            if !inside(mid) {
                continue;
            }
            parent[m] = k;
            queue.push_back(m);
        }
    }
    let Some(goal) = goal else {
        return Err(GeometryError::PathNotFound { from: x0, to: y });
    };
    let mut rev = vec![y];
    let mut k = goal;
    while k != start {
        rev.push(node(k));
        k = parent[k];
    }
    rev.push(x0);
    rev.reverse();
    // line-of-sight shortcutting
    let mut path = vec![rev[0]];
    let mut i = 0;
    while i + 1 < rev.len() {
        let mut j = rev.len() - 1;
        while j > i + 1 && !visible(inside, rev[i], rev[j], step) {
            j -= 1;
        }
        path.push(rev[j]);
        i = j;
    }
    Ok(path)
}

/// Centers `γ(t_k)` with `t_{k+1} = max{t : |γ(t) − γ(t_k)| = 2r₁}`.
fn place_centers(path: &[Point2<f64>], r1: f64) -> Vec<Point2<f64>> {
    let target = *path.last().expect("path has endpoints");
    let step = 2.0 * r1;
    let mut centers = vec![path[0]];
    let mut c = path[0];
    loop {
        if (target - c).norm() <= step * (1.0 + 1e-12) {
            if (target - c).norm() > 0.0 || centers.len() == 1 {
                centers.push(target);
            }
            return centers;
        }
        // last crossing of the sphere |p − c| = 2r₁ along the whole path
        let mut found = None;
        for s in (0..path.len() - 1).rev() {
            let (a, b) = (path[s], path[s + 1]);
            let d = b - a;
            let f = a - c;
            let qa = d.norm_squared();
            if qa == 0.0 {
                continue;
            }
            let qb = 2.0 * f.dot(&d);
            let qc = f.norm_squared() - step * step;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                continue;
            }
            let sq = disc.sqrt();
            let t = (-qb + sq) / (2.0 * qa);
            if (0.0..=1.0).contains(&t) {
                found = Some(a + d * t);
                break;
            }
            let t = (-qb - sq) / (2.0 * qa);
            if (0.0..=1.0).contains(&t) {
                found = Some(a + d * t);
                break;
            }
        }
        let next = found.expect("path leaves the 2r1 sphere since its end lies outside");
        // place exactly on the sphere to keep the spacing identity sharp
        let dir = next - c;
        c += dir * (step / dir.norm());
        centers.push(c);
    }
}

/// Axis-aligned square of the cube cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Point2<f64>,
    pub side: f64,
}

impl Cube {
    pub fn contains(&self, p: Point2<f64>) -> bool {
        let h = 0.5 * self.side;
        (p.x - self.center.x).abs() <= h && (p.y - self.center.y).abs() <= h
    }

    pub fn circumradius(&self) -> f64 {
        self.side * std::f64::consts::SQRT_2 * 0.5
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeCover {
    pub cubes: Vec<Cube>,
    pub r1: f64,
}

impl CubeCover {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `n^{n/2} |Ω| / (2ⁿ r₁ⁿ)` for `n = 2`.
    pub fn count_bound(&self, omega_area: f64) -> f64 {
        2.0 * omega_area / (4.0 * self.r1 * self.r1)
    }
}

/// Squares of side `2r₁/√2` on a grid anchored at the origin that meet `D`.
pub fn cube_cover(spec: &DomainSpec, r1: f64) -> Result<CubeCover> {
    if !(r1 > 0.0) {
        return Err(GeometryError::InvalidParams(format!("r1 = {r1} must be positive")));
    }
    let side = 2.0 * r1 / std::f64::consts::SQRT_2;
    let db = spec.d_bbox();
    let exact_box = matches!(spec.subdomain, super::Subdomain::Inset { .. }) && spec.omega.as_rectangle().is_some();
    let (i0, i1) = ((db.min.x / side).floor() as i64, (db.max.x / side).ceil() as i64);
    let (j0, j1) = ((db.min.y / side).floor() as i64, (db.max.y / side).ceil() as i64);
    let mut cubes = Vec::new();
    for j in j0..j1 {
        for i in i0..i1 {
            let lo = Point2::new(i as f64 * side, j as f64 * side);
            let cube = Cube { center: lo + nalgebra::Vector2::new(0.5 * side, 0.5 * side), side };
            let meets = if exact_box {
                lo.x < db.max.x && lo.x + side > db.min.x && lo.y < db.max.y && lo.y + side > db.min.y
            } else {
                let m = 8;
                (0..=m).any(|a| {
                    (0..=m).any(|b| spec.in_d(lo + nalgebra::Vector2::new(a as f64, b as f64) * (side / m as f64)))
                })
            };
            if meets {
                cubes.push(cube);
            }
        }
    }
    Ok(CubeCover { cubes, r1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Interface, Polygon, Subdomain};

    fn square_spec() -> DomainSpec {
        DomainSpec::unit_square(Interface::Flat { y0: 0.5 }, 0.01).unwrap()
    }

    #[test]
    fn straight_chain_example() {
        let spec = square_spec();
        let chain = ball_chain(&spec, Point2::new(0.1, 0.5), Point2::new(0.9, 0.5), 0.1).unwrap();
        assert_eq!(chain.steps(), 4);
        for (k, c) in chain.centers.iter().enumerate() {
            assert!((c.x - (0.1 + 0.2 * k as f64)).abs() < 1e-12);
        }
        assert!(chain.nesting_excess(0.3) <= 1e-12);
    }

    #[test]
    fn short_chain_terminates() {
        let chain = ball_chain(&square_spec(), Point2::new(0.4, 0.5), Point2::new(0.5, 0.5), 0.1).unwrap();
        assert_eq!(chain.steps(), 1);
    }

    #[test]
    fn chain_goes_around_obstacle() {
        // L-shaped domain: the straight segment leaves the set
        let omega = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.6, 1.0),
            Point2::new(0.6, 0.4),
            Point2::new(0.0, 0.4),
        ])
        .unwrap();
        let spec = DomainSpec::new(omega, Interface::Flat { y0: 0.2 }, Subdomain::Inset { h: 0.02 }, 0.02).unwrap();
        let chain = ball_chain(&spec, Point2::new(0.1, 0.3), Point2::new(0.8, 0.9), 0.03).unwrap();
        assert!(chain.path.len() > 2);
        assert!(chain.nesting_excess(0.09) <= 1e-12);
        assert!(chain.min_separation() >= 0.06 - 1e-12);
        for c in &chain.centers {
            assert!(spec.in_enlarged(*c, 0.03));
        }
    }

    #[test]
    fn disconnected_endpoints_fail() {
        let spec = square_spec();
        let r = ball_chain_in(
            |p| spec.in_d(p) && (p.x - 0.5).abs() > 0.1,
            spec.omega.bbox(),
            Point2::new(0.2, 0.5),
            Point2::new(0.8, 0.5),
            0.02,
        );
        assert!(matches!(r, Err(GeometryError::PathNotFound { .. })));
    }

    #[test]
    fn cube_circumradius_and_bound() {
        let spec = square_spec();
        let coarse = cube_cover(&spec, 0.1).unwrap();
        assert!((coarse.cubes[0].circumradius() - 0.1).abs() < 1e-15);
        // cubes meeting D stay inside Ω once the side is below the margin
        let cover = cube_cover(&spec, 0.005).unwrap();
        assert!(cover.len() as f64 <= cover.count_bound(1.0));
        for i in 0..50 {
            for j in 0..50 {
                let p = Point2::new(0.011 + 0.0199 * i as f64, 0.011 + 0.0199 * j as f64);
                assert!(cover.cubes.iter().any(|c| c.contains(p)));
            }
        }
    }

    #[test]
    fn vitali_on_flat_segment() {
        let spec = DomainSpec::new(
            Polygon::rectangle(Point2::new(-0.2, 0.0), Point2::new(1.2, 1.0)).unwrap(),
            Interface::Flat { y0: 0.5 },
            Subdomain::Inset { h: 0.2 },
            0.2,
        )
        .unwrap();
        let cover = vitali_cover(&spec, 0.5, 0.2).unwrap();
        assert!((cover.sigma_length - 1.0).abs() < 1e-9);
        assert!(cover.min_separation() >= 0.2 - 1e-12);
        assert!((cover.len() as f64) <= cover.count_bound());
        for i in 0..=1000 {
            let p = Point2::new(i as f64 / 1000.0, 0.5);
            assert!(cover.centers.iter().any(|c| (c - p).norm() < cover.coverage_radius()));
        }
    }
}
