//! Planar geometry and continuous collision predicates for disc robots that
//! translate along straight segments.
//!
//! All predicates here are exact in the sense that they compare raw distances
//! against raw radii. Callers that want a conservative answer (the planner)
//! inflate the radius by a slack before calling; the verifier does not.
//!
//! Contact conventions: a disc touching an obstacle or the workspace boundary
//! counts as a collision, two robot discs touching each other do not.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default clearance slack added to every radius on the planner side.
pub const DEFAULT_SLACK: f64 = 1e-7;

/// A point (or vector) in the plane. Serialized as `[x, y]`.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Linear interpolation; `t = 0` gives `self`, `t = 1` gives `o`.
    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertex {0} is not finite")]
    NonFinite(usize),
    #[error("polygon vertices {0} and {1} coincide")]
    RepeatedVertex(usize, usize),
    #[error("polygon has zero area")]
    Degenerate,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("obstacle {0} is not inside the workspace boundary")]
    ObstacleOutsideBoundary(usize),
    #[error("obstacles {0} and {1} overlap")]
    ObstaclesOverlap(usize, usize),
}

/// A simple polygon with counterclockwise vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Validates the ring and normalizes it to counterclockwise order.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeometryError::RepeatedVertex(i, (i + 1) % n));
            }
        }
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(GeometryError::Degenerate);
        }
        // Non-adjacent edges must not touch; adjacent edges may only share
        // their common vertex.
        for i in 0..n {
            let (a1, b1) = (vertices[i], vertices[(i + 1) % n]);
            for j in i + 1..n {
                let (a2, b2) = (vertices[j], vertices[(j + 1) % n]);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Edges (p, s) and (s, q) share s; they fold back if the
                    // far end of either lies on the other.
                    let (p, q) = if j == i + 1 { (a1, b2) } else { (b1, a2) };
                    if dist_point_segment(q, a1, b1) == 0.0 || dist_point_segment(p, a2, b2) == 0.0 {
                        return Err(GeometryError::SelfIntersecting(i, j));
                    }
                } else if dist_segment_segment(a1, b1, a2, b2) == 0.0 {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Polygon { vertices })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Polygon::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Edges as `(start, end)` pairs, closing the ring.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices[1..] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Even-odd ray casting along +x. The half-open crossing rule treats a
    /// vertex on the ray as lying infinitesimally above it, which settles
    /// ray-through-vertex cases consistently. Points exactly on the boundary
    /// may land on either side; every caller also checks edge distance.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let vi = self.vertices[i];
            let vj = self.vertices[j];
            if (vi.y > p.y) != (vj.y > p.y) {
                let x_cross = vi.x + (p.y - vi.y) * (vj.x - vi.x) / (vj.y - vi.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Minimum distance from `p` to the polygon's boundary ring.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b)| dist_point_segment(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum::<f64>() * 0.5
}

/// The region robots move in: inside `boundary`, outside every obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    boundary: Polygon,
    obstacles: Vec<Polygon>,
}

impl Workspace {
    pub fn new(boundary: Polygon, obstacles: Vec<Polygon>) -> Result<Self, GeometryError> {
        for (i, obs) in obstacles.iter().enumerate() {
            let inside = obs.vertices().iter().all(|&v| boundary.contains(v))
                && obs.edges().all(|(a, b)| {
                    boundary
                        .edges()
                        .all(|(c, d)| dist_segment_segment(a, b, c, d) > 0.0)
                });
            if !inside {
                return Err(GeometryError::ObstacleOutsideBoundary(i));
            }
        }
        for i in 0..obstacles.len() {
            for j in i + 1..obstacles.len() {
                let (p, q) = (&obstacles[i], &obstacles[j]);
                let touching = p
                    .edges()
                    .any(|(a, b)| q.edges().any(|(c, d)| dist_segment_segment(a, b, c, d) == 0.0));
                let nested = q.contains(p.vertices()[0]) || p.contains(q.vertices()[0]);
                if touching || nested {
                    return Err(GeometryError::ObstaclesOverlap(i, j));
                }
            }
        }
        Ok(Workspace { boundary, obstacles })
    }

    /// A workspace with no obstacles.
    pub fn open(boundary: Polygon) -> Self {
        Workspace {
            boundary,
            obstacles: Vec::new(),
        }
    }

    pub fn boundary(&self) -> &Polygon {
        &self.boundary
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    /// Every edge of the boundary and of every obstacle.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.boundary
            .edges()
            .chain(self.obstacles.iter().flat_map(|o| o.edges()))
    }
}

/// Straight-line motion of a disc center over normalized time `θ ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMotion {
    pub from: Point,
    pub to: Point,
}

impl LinearMotion {
    pub fn new(from: Point, to: Point) -> Self {
        LinearMotion { from, to }
    }

    pub fn stationary(at: Point) -> Self {
        LinearMotion { from: at, to: at }
    }

    pub fn at(&self, theta: f64) -> Point {
        self.from.lerp(self.to, theta)
    }

    pub fn length(&self) -> f64 {
        self.from.dist(self.to)
    }

    pub fn reversed(&self) -> Self {
        LinearMotion {
            from: self.to,
            to: self.from,
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.from == self.to
    }
}

/// Distance from `p` to the closed segment `ab`.
pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    // Canonical endpoint order keeps the result bit-identical under a <-> b.
    let (a, b) = if (b.x, b.y) < (a.x, a.y) { (b, a) } else { (a, b) };
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let u = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * u)
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// True iff the closed segments `a1b1` and `a2b2` share a point.
pub fn segments_intersect(a1: Point, b1: Point, a2: Point, b2: Point) -> bool {
    let d1 = orient(a2, b2, a1);
    let d2 = orient(a2, b2, b1);
    let d3 = orient(a1, b1, a2);
    let d4 = orient(a1, b1, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a1, a2, b2))
        || (d2 == 0.0 && on_segment(b1, a2, b2))
        || (d3 == 0.0 && on_segment(a2, a1, b1))
        || (d4 == 0.0 && on_segment(b2, a1, b1))
}

/// Minimum distance between two closed segments; zero iff they intersect.
pub fn dist_segment_segment(a1: Point, b1: Point, a2: Point, b2: Point) -> f64 {
    if segments_intersect(a1, b1, a2, b2) {
        return 0.0;
    }
    dist_point_segment(a1, a2, b2)
        .min(dist_point_segment(b1, a2, b2))
        .min(dist_point_segment(a2, a1, b1))
        .min(dist_point_segment(b2, a1, b1))
}

/// Clearance of a disc center from all workspace walls: positive distance to
/// the nearest edge when the point is in the free region, zero otherwise.
pub fn point_clearance(c: Point, w: &Workspace) -> f64 {
    if !w.boundary.contains(c) || w.obstacles.iter().any(|o| o.contains(c)) {
        return 0.0;
    }
    w.edges()
        .map(|(a, b)| dist_point_segment(c, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// True iff the closed disc of radius `r` at `c` is inside the boundary and
/// meets no obstacle. Tangency counts as a collision.
pub fn disc_free(c: Point, r: f64, w: &Workspace) -> bool {
    if !c.is_finite() {
        return false;
    }
    if !w.boundary.contains(c) {
        return false;
    }
    if w.boundary.edges().any(|(a, b)| dist_point_segment(c, a, b) <= r) {
        return false;
    }
    for o in &w.obstacles {
        if o.contains(c) || o.edges().any(|(a, b)| dist_point_segment(c, a, b) <= r) {
            return false;
        }
    }
    true
}

/// True iff a disc of radius `r` moving along `m` stays free for every θ.
///
/// Capsule test: both endpoint discs are free and the swept segment keeps
/// distance greater than `r` from every wall edge. A wall vertex or a whole
/// obstacle inside the capsule is caught by the edge distance, and the
/// segment cannot leave the free region without crossing an edge.
pub fn sweep_free(m: &LinearMotion, r: f64, w: &Workspace) -> bool {
    if !disc_free(m.from, r, w) || !disc_free(m.to, r, w) {
        return false;
    }
    if m.is_stationary() {
        return true;
    }
    w.edges()
        .all(|(a, b)| dist_segment_segment(m.from, m.to, a, b) > r)
}

/// Minimum over θ ∈ [0, 1] of `|a(θ) − b(θ)|`.
///
/// The relative position `d(θ) = d0 + θ (d1 − d0)` is linear, so `|d|²` is a
/// quadratic in θ whose minimizer is clamped to the unit interval.
pub fn min_dist_linear_motions(a: &LinearMotion, b: &LinearMotion) -> f64 {
    let d0 = a.from - b.from;
    let dv = (a.to - a.from) - (b.to - b.from);
    let vv = dv.norm_sq();
    let theta = if vv == 0.0 {
        0.0
    } else {
        (-d0.dot(dv) / vv).clamp(0.0, 1.0)
    };
    (d0 + dv * theta).norm()
}

/// The θ at which [`min_dist_linear_motions`] attains its minimum.
pub fn closest_approach_time(a: &LinearMotion, b: &LinearMotion) -> f64 {
    let d0 = a.from - b.from;
    let dv = (a.to - a.from) - (b.to - b.from);
    let vv = dv.norm_sq();
    if vv == 0.0 {
        0.0
    } else {
        (-d0.dot(dv) / vv).clamp(0.0, 1.0)
    }
}
