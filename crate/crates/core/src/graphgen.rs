//! Pumped configurations and their pebble graphs.
//!
//! A pumped configuration holds `n_i ≥ m_i` single-robot positions per color,
//! spaced so that any choice of `m_i` positions per color is a collision-free
//! placement of every robot. Its pebble graph joins two same-color positions
//! when a robot can slide straight between them while every other position,
//! of any color, could be occupied.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::geom::{disc_free, dist_point_segment, sweep_free, LinearMotion, Point, Workspace};
use crate::pebble::{Components, Graph, Signature};

/// Default number of rejection-sampling draws per composite sample.
pub const DEFAULT_MAX_TRIES: usize = 100_000;

/// One group of interchangeable disc robots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorSpec {
    pub radius: f64,
    pub robot_count: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphgenError {
    #[error("sampling exhausted: color {color} got {found} of {required} required positions")]
    SamplingExhausted {
        color: usize,
        found: usize,
        required: usize,
    },
    #[error("invalid sampling parameters: {0}")]
    InvalidParameters(String),
}

/// Positions for one color.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpedConfiguration {
    pub color: usize,
    pub radius: f64,
    pub robot_count: usize,
    pub points: Vec<Point>,
}

/// One pumped configuration per color, with cross-color spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositePumpedConfiguration {
    per_color: Vec<PumpedConfiguration>,
}

impl CompositePumpedConfiguration {
    /// Wraps per-color point lists without checking spacing; see
    /// [`is_valid`](Self::is_valid).
    pub fn new(colors: &[ColorSpec], points: Vec<Vec<Point>>) -> Self {
        assert_eq!(colors.len(), points.len(), "one point list per color");
        let per_color = colors
            .iter()
            .zip(points)
            .enumerate()
            .map(|(color, (spec, points))| PumpedConfiguration {
                color,
                radius: spec.radius,
                robot_count: spec.robot_count,
                points,
            })
            .collect();
        CompositePumpedConfiguration { per_color }
    }

    pub fn color_count(&self) -> usize {
        self.per_color.len()
    }

    pub fn per_color(&self) -> &[PumpedConfiguration] {
        &self.per_color
    }

    pub fn points(&self, color: usize) -> &[Point] {
        &self.per_color[color].points
    }

    pub fn radius(&self, color: usize) -> f64 {
        self.per_color[color].radius
    }

    pub fn robot_count(&self, color: usize) -> usize {
        self.per_color[color].robot_count
    }

    pub fn point(&self, color: usize, v: usize) -> Point {
        self.per_color[color].points[v]
    }

    pub fn total_points(&self) -> usize {
        self.per_color.iter().map(|c| c.points.len()).sum()
    }

    /// All points of all colors as `(color, index, radius, point)`.
    pub fn all_points(&self) -> impl Iterator<Item = (usize, usize, f64, Point)> + '_ {
        self.per_color.iter().flat_map(|c| {
            c.points
                .iter()
                .enumerate()
                .map(move |(v, &p)| (c.color, v, c.radius, p))
        })
    }

    /// Every point is a free disc with `slack` to spare and every two points
    /// (any colors) keep at least the sum of their radii plus `slack` apart.
    pub fn is_valid(&self, w: &Workspace, slack: f64) -> bool {
        let all: Vec<_> = self.all_points().collect();
        all.iter().all(|&(_, _, r, p)| disc_free(p, r + slack, w))
            && all.iter().enumerate().all(|(i, &(_, _, ra, pa))| {
                all[i + 1..]
                    .iter()
                    .all(|&(_, _, rb, pb)| pa.dist(pb) >= ra + rb + slack)
            })
    }
}

/// Splits `mu` across colors proportionally to robot counts with
/// largest-remainder rounding. Requires `mu ≥ Σ m_i`, so every quota is at
/// least the color's robot count.
pub fn allocate_quotas(colors: &[ColorSpec], mu: usize) -> Vec<usize> {
    let total: usize = colors.iter().map(|c| c.robot_count).sum();
    if total == 0 {
        return vec![0; colors.len()];
    }
    let mut quotas: Vec<usize> = colors
        .iter()
        .map(|c| mu * c.robot_count / total)
        .collect();
    let mut leftover = mu - quotas.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..colors.len()).collect();
    by_remainder.sort_by_key(|&i| std::cmp::Reverse((mu * colors[i].robot_count) % total));
    for i in by_remainder {
        if leftover == 0 {
            break;
        }
        quotas[i] += 1;
        leftover -= 1;
    }
    quotas
}

/// Rejection-samples a composite pumped configuration.
///
/// Draws are uniform in the boundary's bounding box. Each draw is offered to
/// one color: first, round-robin among colors still short of their robot
/// count, then among colors short of their quota. A draw is kept iff its disc
/// (radius inflated by `slack`) is free and it keeps clear of every point
/// kept so far. Sampling stops when every quota is met or after `max_tries`
/// draws.
pub fn sample_pumped<R: Rng + ?Sized>(
    colors: &[ColorSpec],
    w: &Workspace,
    mu: usize,
    rng: &mut R,
    max_tries: usize,
    slack: f64,
) -> Result<CompositePumpedConfiguration, GraphgenError> {
    let required: usize = colors.iter().map(|c| c.robot_count).sum();
    if mu < required {
        return Err(GraphgenError::InvalidParameters(format!(
            "mu = {mu} is below the robot count {required}"
        )));
    }
    if max_tries == 0 {
        return Err(GraphgenError::InvalidParameters("max_tries must be positive".into()));
    }
    let quotas = allocate_quotas(colors, mu);
    let (lo, hi) = w.boundary().bounding_box();
    let mut points: Vec<Vec<Point>> = vec![Vec::new(); colors.len()];
    let mut kept: Vec<(Point, f64)> = Vec::with_capacity(mu);
    let mut cursor = 0;

    for _ in 0..max_tries {
        let short_of_robots = |c: usize| points[c].len() < colors[c].robot_count;
        let phase_one = (0..colors.len()).any(short_of_robots);
        let wants = |c: usize| {
            if phase_one {
                short_of_robots(c)
            } else {
                points[c].len() < quotas[c]
            }
        };
        let Some(color) = (0..colors.len())
            .map(|k| (cursor + k) % colors.len())
            .find(|&c| wants(c))
        else {
            break;
        };
        cursor = (color + 1) % colors.len();

        let p = Point::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y));
        let r = colors[color].radius;
        if !disc_free(p, r + slack, w) {
            continue;
        }
        if kept.iter().all(|&(q, rq)| p.dist(q) >= r + rq + slack) {
            kept.push((p, r));
            points[color].push(p);
        }
    }

    for (color, spec) in colors.iter().enumerate() {
        if points[color].len() < spec.robot_count {
            return Err(GraphgenError::SamplingExhausted {
                color,
                found: points[color].len(),
                required: spec.robot_count,
            });
        }
    }
    Ok(CompositePumpedConfiguration::new(colors, points))
}

/// Straight-line edge planner: the motion `v → v'` of a `color` robot, if it
/// clears the walls and every other position of the configuration.
pub fn edge_plan(
    pumped: &CompositePumpedConfiguration,
    color: usize,
    v: usize,
    v2: usize,
    w: &Workspace,
    slack: f64,
) -> Option<LinearMotion> {
    let r = pumped.radius(color);
    let (a, b) = (pumped.point(color, v), pumped.point(color, v2));
    let motion = LinearMotion::new(a, b);
    if !sweep_free(&motion, r + slack, w) {
        return None;
    }
    let clear = pumped.all_points().all(|(c, u, ru, p)| {
        (c == color && (u == v || u == v2)) || dist_point_segment(p, a, b) >= r + ru + slack
    });
    clear.then_some(motion)
}

/// The pebble graph of one color.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorGraph {
    graph: Graph,
    motions: HashMap<(usize, usize), LinearMotion>,
    components: Components,
}

impl ColorGraph {
    fn new(vertex_count: usize, edges: Vec<(usize, usize, LinearMotion)>) -> Self {
        let mut graph = Graph::new(vertex_count);
        let mut motions = HashMap::with_capacity(edges.len());
        for (u, v, m) in edges {
            graph.add_edge(u, v).expect("edge planner pairs are valid");
            motions.insert((u, v), m);
        }
        let components = graph.components();
        ColorGraph {
            graph,
            motions,
            components,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    /// The stored motion for the edge, oriented `from → to`.
    pub fn motion(&self, from: usize, to: usize) -> Option<LinearMotion> {
        if from < to {
            self.motions.get(&(from, to)).copied()
        } else {
            self.motions.get(&(to, from)).map(LinearMotion::reversed)
        }
    }

    pub fn signature(&self, selection: &[usize]) -> Signature {
        self.components.signature_of(selection.iter().copied())
    }
}

/// A composite pumped configuration together with one pebble graph per color.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricPebbleGraph {
    pumped: CompositePumpedConfiguration,
    per_color: Vec<ColorGraph>,
}

impl GeometricPebbleGraph {
    /// A graph with no edges, used for start and target configurations.
    pub fn edgeless(pumped: CompositePumpedConfiguration) -> Self {
        let per_color = pumped
            .per_color()
            .iter()
            .map(|c| ColorGraph::new(c.points.len(), Vec::new()))
            .collect();
        GeometricPebbleGraph { pumped, per_color }
    }

    pub fn pumped(&self) -> &CompositePumpedConfiguration {
        &self.pumped
    }

    pub fn color(&self, color: usize) -> &ColorGraph {
        &self.per_color[color]
    }

    pub fn color_count(&self) -> usize {
        self.per_color.len()
    }

    pub fn edge_count(&self) -> usize {
        self.per_color.iter().map(|c| c.graph.edge_count()).sum()
    }
}

/// Runs the edge planner on every same-color pair and caches components.
pub fn build_pebble_graph(
    pumped: CompositePumpedConfiguration,
    w: &Workspace,
    slack: f64,
) -> GeometricPebbleGraph {
    let per_color = (0..pumped.color_count())
        .map(|color| {
            let n = pumped.points(color).len();
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if let Some(m) = edge_plan(&pumped, color, u, v, w, slack) {
                        edges.push((u, v, m));
                    }
                }
            }
            ColorGraph::new(n, edges)
        })
        .collect();
    GeometricPebbleGraph { pumped, per_color }
}
