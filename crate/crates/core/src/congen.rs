//! Connection generator: simultaneous straight-line bridges between two
//! composite pumped configurations.
//!
//! Every same-color pair `(a, b)` whose straight motion clears the walls is a
//! candidate. Two candidates conflict when their robots would collide at some
//! shared time θ, or when they share a start or an end vertex. A conflict-free
//! choice of exactly `m_i` candidates per color moves every robot from a
//! placement in the first configuration to a placement in the second. Such
//! choices are found with a randomized greedy independent-set scan.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::geom::{min_dist_linear_motions, sweep_free, LinearMotion, Point, Workspace};
use crate::graphgen::{CompositePumpedConfiguration, GeometricPebbleGraph};
use crate::pebble::Signature;

/// Default number of greedy attempts per requested connection.
pub const DEFAULT_ATTEMPT_FACTOR: usize = 20;

/// A single-robot straight motion from a vertex of one configuration to a
/// same-color vertex of another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePair {
    pub color: usize,
    pub radius: f64,
    pub from_vertex: usize,
    pub to_vertex: usize,
    pub motion: LinearMotion,
}

/// True iff the two candidates cannot run together: their discs come closer
/// than the sum of radii at some common θ, or (same color) they share a
/// start or an end vertex.
pub fn interferes(a: &CandidatePair, b: &CandidatePair) -> bool {
    interferes_with_slack(a, b, 0.0)
}

/// [`interferes`] with the required gap widened by `slack`.
pub fn interferes_with_slack(a: &CandidatePair, b: &CandidatePair, slack: f64) -> bool {
    if a.color == b.color && (a.from_vertex == b.from_vertex || a.to_vertex == b.to_vertex) {
        return true;
    }
    min_dist_linear_motions(&a.motion, &b.motion) < a.radius + b.radius + slack
}

/// Dense symmetric bit matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        BitMatrix {
            n,
            words_per_row,
            bits: vec![0; n * words_per_row],
        }
    }

    fn set_symmetric(&mut self, i: usize, j: usize) {
        self.bits[i * self.words_per_row + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words_per_row + i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words_per_row + j / 64] & (1 << (j % 64)) != 0
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words_per_row..(i + 1) * self.words_per_row]
    }
}

/// Candidates and their pairwise conflicts.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceGraph {
    nodes: Vec<CandidatePair>,
    conflicts: BitMatrix,
}

impl InterferenceGraph {
    pub fn nodes(&self) -> &[CandidatePair] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn conflicts(&self, i: usize, j: usize) -> bool {
        self.conflicts.get(i, j)
    }

    /// Conflicting node pairs `(i, j)` with `i < j`.
    pub fn conflict_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.conflicts.n;
        (0..n).flat_map(move |i| (i + 1..n).filter(move |&j| self.conflicts.get(i, j)).map(move |j| (i, j)))
    }
}

/// Collects every wall-free same-color candidate from `a` to `b` and marks
/// conflicts with `slack` added to the required robot-robot gap.
pub fn build_interference_graph(
    a: &CompositePumpedConfiguration,
    b: &CompositePumpedConfiguration,
    w: &Workspace,
    slack: f64,
) -> InterferenceGraph {
    assert_eq!(a.color_count(), b.color_count(), "configurations must share colors");
    let mut nodes = Vec::new();
    for color in 0..a.color_count() {
        let radius = a.radius(color);
        for (from_vertex, &p) in a.points(color).iter().enumerate() {
            for (to_vertex, &q) in b.points(color).iter().enumerate() {
                let motion = LinearMotion::new(p, q);
                if sweep_free(&motion, radius + slack, w) {
                    nodes.push(CandidatePair {
                        color,
                        radius,
                        from_vertex,
                        to_vertex,
                        motion,
                    });
                }
            }
        }
    }

    // Swept boxes inflated by each radius give a cheap rejection test.
    let boxes: Vec<(Point, Point)> = nodes
        .iter()
        .map(|c| {
            let pad = c.radius + slack;
            let (f, t) = (c.motion.from, c.motion.to);
            (
                Point::new(f.x.min(t.x) - pad, f.y.min(t.y) - pad),
                Point::new(f.x.max(t.x) + pad, f.y.max(t.y) + pad),
            )
        })
        .collect();

    let n = nodes.len();
    let mut conflicts = BitMatrix::new(n);
    for i in 0..n {
        let (lo_i, hi_i) = boxes[i];
        for j in i + 1..n {
            let (lo_j, hi_j) = boxes[j];
            let (x, y) = (&nodes[i], &nodes[j]);
            let shares_vertex = x.color == y.color
                && (x.from_vertex == y.from_vertex || x.to_vertex == y.to_vertex);
            let disjoint = lo_i.x > hi_j.x || lo_j.x > hi_i.x || lo_i.y > hi_j.y || lo_j.y > hi_i.y;
            if shares_vertex || (!disjoint && interferes_with_slack(x, y, slack)) {
                conflicts.set_symmetric(i, j);
            }
        }
    }
    InterferenceGraph { nodes, conflicts }
}

/// One robot's part of a connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bridge {
    pub from: usize,
    pub to: usize,
    pub motion: LinearMotion,
}

/// Simultaneous motion of every robot from a placement in one configuration
/// to a placement in another. Bridges are sorted by `from` within each color.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub per_color: Vec<Vec<Bridge>>,
}

impl Connection {
    pub fn from_selection(&self) -> Vec<Vec<usize>> {
        self.per_color
            .iter()
            .map(|bs| {
                let mut v: Vec<usize> = bs.iter().map(|b| b.from).collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    pub fn to_selection(&self) -> Vec<Vec<usize>> {
        self.per_color
            .iter()
            .map(|bs| {
                let mut v: Vec<usize> = bs.iter().map(|b| b.to).collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    /// The same connection run backwards.
    pub fn reversed(&self) -> Connection {
        let per_color = self
            .per_color
            .iter()
            .map(|bs| {
                let mut rev: Vec<Bridge> = bs
                    .iter()
                    .map(|b| Bridge {
                        from: b.to,
                        to: b.from,
                        motion: b.motion.reversed(),
                    })
                    .collect();
                rev.sort_by_key(|b| b.from);
                rev
            })
            .collect();
        Connection { per_color }
    }

    pub fn motions(&self) -> impl Iterator<Item = (usize, &Bridge)> + '_ {
        self.per_color
            .iter()
            .enumerate()
            .flat_map(|(c, bs)| bs.iter().map(move |b| (c, b)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongenConfig {
    pub attempt_factor: usize,
    pub slack: f64,
}

impl Default for CongenConfig {
    fn default() -> Self {
        CongenConfig {
            attempt_factor: DEFAULT_ATTEMPT_FACTOR,
            slack: crate::geom::DEFAULT_SLACK,
        }
    }
}

/// Up to `q` distinct connections from `a` to `b`.
///
/// Each attempt shuffles the interference-graph nodes and scans them in that
/// order, accepting a node when its color still needs robots and it conflicts
/// with nothing accepted so far. An attempt succeeds when every color has
/// exactly its robot count of accepted nodes. At most `q · attempt_factor`
/// attempts are made; repeated selections are dropped.
pub fn congen<R: Rng + ?Sized>(
    a: &CompositePumpedConfiguration,
    b: &CompositePumpedConfiguration,
    q: usize,
    w: &Workspace,
    rng: &mut R,
    config: &CongenConfig,
) -> Vec<Connection> {
    let ig = build_interference_graph(a, b, w, config.slack);
    select_connections(&ig, a, q, rng, config.attempt_factor)
}

/// The greedy independent-set stage of [`congen`], on a prebuilt graph.
pub fn select_connections<R: Rng + ?Sized>(
    ig: &InterferenceGraph,
    a: &CompositePumpedConfiguration,
    q: usize,
    rng: &mut R,
    attempt_factor: usize,
) -> Vec<Connection> {
    let k = a.color_count();
    let quota: Vec<usize> = (0..k).map(|c| a.robot_count(c)).collect();
    let needed: usize = quota.iter().sum();

    // A color with too few distinct start or end vertices can never fill up.
    for (color, &m) in quota.iter().enumerate() {
        let nodes = ig.nodes.iter().filter(|n| n.color == color);
        let froms: HashSet<usize> = nodes.clone().map(|n| n.from_vertex).collect();
        let tos: HashSet<usize> = nodes.map(|n| n.to_vertex).collect();
        if froms.len() < m || tos.len() < m {
            return Vec::new();
        }
    }

    let mut order: Vec<usize> = (0..ig.node_count()).collect();
    let mut blocked = vec![0u64; ig.conflicts.words_per_row];
    let mut counts = vec![0usize; k];
    let mut chosen = Vec::with_capacity(needed);
    let mut seen = HashSet::new();
    let mut found = Vec::new();

    for _ in 0..q.saturating_mul(attempt_factor) {
        if found.len() >= q {
            break;
        }
        order.shuffle(rng);
        blocked.fill(0);
        counts.fill(0);
        chosen.clear();
        for &i in &order {
            let node = &ig.nodes[i];
            if counts[node.color] == quota[node.color] || blocked[i / 64] & (1 << (i % 64)) != 0 {
                continue;
            }
            chosen.push(i);
            counts[node.color] += 1;
            for (dst, src) in blocked.iter_mut().zip(ig.conflicts.row(i)) {
                *dst |= src;
            }
            if chosen.len() == needed {
                break;
            }
        }
        if chosen.len() < needed {
            continue;
        }
        let mut per_color = vec![Vec::new(); k];
        for &i in &chosen {
            let n = &ig.nodes[i];
            per_color[n.color].push(Bridge {
                from: n.from_vertex,
                to: n.to_vertex,
                motion: n.motion,
            });
        }
        for bs in &mut per_color {
            bs.sort_by_key(|b| b.from);
        }
        let conn = Connection { per_color };
        if seen.insert((conn.from_selection(), conn.to_selection())) {
            found.push(conn);
        }
    }
    found
}

/// Per-color signatures of a selection in a pebble graph.
pub fn signature_of_selection(g: &GeometricPebbleGraph, selection: &[Vec<usize>]) -> Vec<Signature> {
    selection
        .iter()
        .enumerate()
        .map(|(c, sel)| g.color(c).signature(sel))
        .collect()
}
