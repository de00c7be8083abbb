//! Pebble motion on undirected graphs with unlabeled targets and the
//! separation rule: exactly one pebble crosses one edge per step.
//!
//! Two placements on the same graph are equivalent iff they put the same
//! number of pebbles in every connected component, and every equivalent pair
//! is connected by a pebble path. [`pebble_solve`] constructs such a path
//! with a spanning-tree leaf-elimination scheme.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PebbleError {
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("placements have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("start and target placements are not equivalent")]
    NotEquivalent,
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Undirected simple graph over vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    pub fn new(vertex_count: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); vertex_count],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list. Duplicate edges are ignored.
    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, PebbleError> {
        let mut g = Graph::new(vertex_count);
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Adds `{u, v}`; returns false if the edge was already present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool, PebbleError> {
        let n = self.vertex_count();
        if u == v || u >= n || v >= n {
            return Err(PebbleError::InvalidEdge(u, v));
        }
        if self.adjacency[u].contains(&v) {
            return Ok(false);
        }
        self.adjacency[u].push(v);
        self.adjacency[v].push(u);
        self.edge_count += 1;
        Ok(true)
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.vertex_count() && self.adjacency[u].contains(&v)
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<_> = (0..self.vertex_count())
            .flat_map(|u| {
                self.adjacency[u]
                    .iter()
                    .filter(move |&&v| u < v)
                    .map(move |&v| (u, v))
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn components(&self) -> Components {
        Components::of(self)
    }
}

/// Connected-component labelling. Components are numbered in order of their
/// smallest vertex id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    labels: Vec<usize>,
    count: usize,
}

impl Components {
    pub fn of(g: &Graph) -> Self {
        let n = g.vertex_count();
        let mut labels = vec![usize::MAX; n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for root in 0..n {
            if labels[root] != usize::MAX {
                continue;
            }
            labels[root] = count;
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                for &v in g.neighbors(u) {
                    if labels[v] == usize::MAX {
                        labels[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        Components { labels, count }
    }

    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Pebble count per component for the given occupied vertices. The
    /// vertices must be valid and distinct; see [`signature`] for the checked
    /// version.
    pub fn signature_of(&self, vertices: impl IntoIterator<Item = usize>) -> Signature {
        let mut counts = vec![0; self.count];
        for v in vertices {
            counts[self.labels[v]] += 1;
        }
        Signature(counts)
    }
}

/// Ordered pebble positions: entry `i` is the vertex holding pebble `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement(pub Vec<usize>);

impl Placement {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.0.iter().copied().collect()
    }

    pub fn validate(&self, g: &Graph) -> Result<(), PebbleError> {
        let n = g.vertex_count();
        let mut seen = vec![false; n];
        for (i, &v) in self.0.iter().enumerate() {
            if v >= n {
                return Err(PebbleError::InvalidPlacement(format!(
                    "pebble {i} on vertex {v}, graph has {n} vertices"
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(PebbleError::InvalidPlacement(format!(
                    "vertex {v} holds more than one pebble"
                )));
            }
        }
        Ok(())
    }
}

impl From<Vec<usize>> for Placement {
    fn from(v: Vec<usize>) -> Self {
        Placement(v)
    }
}

/// Pebble count per connected component.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(pub Vec<usize>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub pebble: usize,
    pub from: usize,
    pub to: usize,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pebble {}: {} -> {}", self.pebble, self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PebblePath {
    pub start: Placement,
    pub moves: Vec<Move>,
}

impl PebblePath {
    /// Placement after applying every move.
    pub fn end(&self) -> Placement {
        let mut pos = self.start.clone();
        for m in &self.moves {
            pos.0[m.pebble] = m.to;
        }
        pos
    }
}

pub fn signature(g: &Graph, p: &Placement) -> Result<Signature, PebbleError> {
    p.validate(g)?;
    Ok(g.components().signature_of(p.0.iter().copied()))
}

pub fn equivalent(g: &Graph, p1: &Placement, p2: &Placement) -> Result<bool, PebbleError> {
    if p1.len() != p2.len() {
        return Err(PebbleError::SizeMismatch(p1.len(), p2.len()));
    }
    Ok(signature(g, p1)? == signature(g, p2)?)
}

/// Finds a separation-rule pebble path from `s` to some ordering of `t`.
///
/// Each component is solved on its breadth-first spanning tree, rooted at the
/// component's smallest vertex. Non-root vertices are eliminated deepest
/// first (ties by id), which always removes a leaf of the remaining tree. A
/// target leaf pulls in the nearest remaining pebble; a non-target leaf
/// pushes its pebble, and any pebbles blocking the way, toward the nearest
/// free vertex. Distances are measured on the remaining tree.
pub fn pebble_solve(g: &Graph, s: &Placement, t: &Placement) -> Result<PebblePath, PebbleError> {
    if s.len() != t.len() {
        return Err(PebbleError::SizeMismatch(s.len(), t.len()));
    }
    s.validate(g)?;
    t.validate(g)?;
    let comps = g.components();
    if comps.signature_of(s.0.iter().copied()) != comps.signature_of(t.0.iter().copied()) {
        return Err(PebbleError::NotEquivalent);
    }

    let n = g.vertex_count();
    let mut occupant: Vec<Option<usize>> = vec![None; n];
    for (i, &v) in s.0.iter().enumerate() {
        occupant[v] = Some(i);
    }
    let mut is_target = vec![false; n];
    for &v in &t.0 {
        is_target[v] = true;
    }

    let tree = SpanningForest::new(g);
    let mut alive = vec![true; n];
    let mut moves = Vec::new();

    let mut order: Vec<usize> = (0..n).filter(|&v| tree.parent[v].is_some()).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(tree.depth[v]), v));

    for leaf in order {
        if is_target[leaf] {
            if occupant[leaf].is_none() {
                let path = tree
                    .path_to_nearest(leaf, &alive, |v| occupant[v].is_some())
                    .expect("component has a pebble for every remaining target");
                // path runs leaf -> ... -> pebble; every interior vertex is free.
                let pebble = occupant[*path.last().unwrap()].unwrap();
                for w in path.windows(2).rev() {
                    let (to, from) = (w[0], w[1]);
                    occupant[from] = None;
                    occupant[to] = Some(pebble);
                    moves.push(Move { pebble, from, to });
                }
            }
        } else if occupant[leaf].is_some() {
            let path = tree
                .path_to_nearest(leaf, &alive, |v| occupant[v].is_none())
                .expect("component has a free vertex while a non-target is occupied");
            // Every vertex on the path before the free end is occupied; shift
            // pebbles one step toward the free end, farthest first.
            for k in (0..path.len() - 1).rev() {
                let (from, to) = (path[k], path[k + 1]);
                let pebble = occupant[from].take().unwrap();
                occupant[to] = Some(pebble);
                moves.push(Move { pebble, from, to });
            }
        }
        alive[leaf] = false;
    }

    Ok(PebblePath {
        start: s.clone(),
        moves,
    })
}

/// Breadth-first spanning forest, one tree per component.
struct SpanningForest {
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
}

impl SpanningForest {
    fn new(g: &Graph) -> Self {
        let n = g.vertex_count();
        let mut parent = vec![None; n];
        let mut depth = vec![0; n];
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            queue.push_back(root);
            while let Some(u) = queue.pop_front() {
                let mut next: Vec<usize> = g.neighbors(u).to_vec();
                next.sort_unstable();
                for v in next {
                    if !seen[v] {
                        seen[v] = true;
                        parent[v] = Some(u);
                        depth[v] = depth[u] + 1;
                        children[u].push(v);
                        queue.push_back(v);
                    }
                }
            }
        }
        SpanningForest {
            parent,
            depth,
            children,
        }
    }

    /// Breadth-first search over live tree vertices from `start` (excluded
    /// from the goal test). Returns the tree path `start ..= goal`.
    fn path_to_nearest(
        &self,
        start: usize,
        alive: &[bool],
        goal: impl Fn(usize) -> bool,
    ) -> Option<Vec<usize>> {
        let mut prev = vec![usize::MAX; alive.len()];
        prev[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            if u != start && goal(u) {
                let mut path = vec![u];
                let mut cur = u;
                while cur != start {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            let nbrs = self.parent[u].iter().chain(self.children[u].iter());
            for &v in nbrs {
                if alive[v] && prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

/// Checks a pebble path against the graph and the separation rule, and that
/// it ends on the vertex set of `t`.
pub fn validate_pebble_path(g: &Graph, pp: &PebblePath, t: &Placement) -> bool {
    if pp.start.validate(g).is_err() || t.validate(g).is_err() || pp.start.len() != t.len() {
        return false;
    }
    let n = g.vertex_count();
    let mut pos = pp.start.0.clone();
    let mut occupied = vec![false; n];
    for &v in &pos {
        occupied[v] = true;
    }
    for m in &pp.moves {
        if m.pebble >= pos.len() || pos[m.pebble] != m.from || !g.has_edge(m.from, m.to) {
            return false;
        }
        if occupied[m.to] {
            return false;
        }
        occupied[m.from] = false;
        occupied[m.to] = true;
        pos[m.pebble] = m.to;
    }
    Placement(pos).vertex_set() == t.vertex_set()
}

/// A pebble problem in the plain-text exchange format:
///
/// ```text
/// n m
/// u v        (m edge lines)
/// S: v ...
/// T: v ...
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PebbleInstance {
    pub graph: Graph,
    pub start: Placement,
    pub target: Placement,
}

impl FromStr for PebbleInstance {
    type Err = PebbleError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, message: &str| PebbleError::Parse {
            line,
            message: message.to_string(),
        };
        let ints = |line: usize, s: &str| -> Result<Vec<usize>, PebbleError> {
            s.split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|_| err(line, &format!("expected an integer, got {tok:?}")))
                })
                .collect()
        };

        let (line, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
        let header = ints(line, header)?;
        let [n, m] = header[..] else {
            return Err(err(line, "header must be `n m`"));
        };
        let mut graph = Graph::new(n);
        for _ in 0..m {
            let (line, l) = lines.next().ok_or_else(|| err(line, "missing edge lines"))?;
            let uv = ints(line, l)?;
            let [u, v] = uv[..] else {
                return Err(err(line, "edge line must be `u v`"));
            };
            graph
                .add_edge(u, v)
                .map_err(|e| err(line, &e.to_string()))?;
        }
        let mut placement = |tag: &str| -> Result<Placement, PebbleError> {
            let (line, l) = lines
                .next()
                .ok_or_else(|| err(0, &format!("missing `{tag}` line")))?;
            let rest = l
                .strip_prefix(tag)
                .ok_or_else(|| err(line, &format!("expected `{tag}` line")))?;
            let p = Placement(ints(line, rest)?);
            p.validate(&graph).map_err(|e| err(line, &e.to_string()))?;
            Ok(p)
        };
        let start = placement("S:")?;
        let target = placement("T:")?;
        if let Some((line, _)) = lines.next() {
            return Err(err(line, "trailing content"));
        }
        if start.len() != target.len() {
            return Err(PebbleError::SizeMismatch(start.len(), target.len()));
        }
        Ok(PebbleInstance {
            graph,
            start,
            target,
        })
    }
}

impl fmt::Display for PebbleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges = self.graph.edges();
        writeln!(f, "{} {}", self.graph.vertex_count(), edges.len())?;
        for (u, v) in edges {
            writeln!(f, "{u} {v}")?;
        }
        let join = |p: &Placement| {
            p.0.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(f, "S: {}", join(&self.start))?;
        writeln!(f, "T: {}", join(&self.target))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn two_components() -> Graph {
        Graph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap()
    }

    #[test]
    fn signature_examples() {
        let g = path3();
        assert_eq!(signature(&g, &Placement(vec![2, 0])).unwrap(), Signature(vec![2]));
        let g = two_components();
        assert_eq!(
            signature(&g, &Placement(vec![0, 2, 3])).unwrap(),
            Signature(vec![2, 1])
        );
        assert_eq!(signature(&g, &Placement(vec![])).unwrap(), Signature(vec![0, 0]));
    }

    #[test]
    fn signature_rejects_invalid_placements() {
        let g = path3();
        assert!(matches!(
            signature(&g, &Placement(vec![1, 1])),
            Err(PebbleError::InvalidPlacement(_))
        ));
        assert!(matches!(
            signature(&g, &Placement(vec![3])),
            Err(PebbleError::InvalidPlacement(_))
        ));
    }

    #[test]
    fn equivalence_examples() {
        let g = two_components();
        let p = Placement(vec![0, 3]);
        assert!(equivalent(&g, &p, &p).unwrap());
        assert!(equivalent(&path3(), &Placement(vec![0]), &Placement(vec![2])).unwrap());
        assert!(!equivalent(&g, &Placement(vec![0, 1, 3]), &Placement(vec![0, 3, 4])).unwrap());
        assert_eq!(
            equivalent(&g, &Placement(vec![0]), &Placement(vec![0, 1])),
            Err(PebbleError::SizeMismatch(1, 2))
        );
    }

    #[test]
    fn solve_identity_is_empty() {
        let g = two_components();
        let s = Placement(vec![4, 1]);
        let pp = pebble_solve(&g, &s, &s).unwrap();
        assert!(pp.moves.is_empty());
    }

    #[test]
    fn solve_path_graph_uses_two_moves() {
        let g = path3();
        let t = Placement(vec![2]);
        let pp = pebble_solve(&g, &Placement(vec![0]), &t).unwrap();
        assert_eq!(
            pp.moves,
            vec![
                Move { pebble: 0, from: 0, to: 1 },
                Move { pebble: 0, from: 1, to: 2 }
            ]
        );
        assert!(validate_pebble_path(&g, &pp, &t));
    }

    #[test]
    fn solve_rejects_inequivalent() {
        let g = Graph::new(2);
        assert_eq!(
            pebble_solve(&g, &Placement(vec![0]), &Placement(vec![1])),
            Err(PebbleError::NotEquivalent)
        );
    }

    #[test]
    fn solve_pushes_blocking_pebbles() {
        // Star with center 0; pebbles on 0 and leaf 1 must end on leaves 2 and 3.
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = Placement(vec![0, 1]);
        let t = Placement(vec![2, 3]);
        let pp = pebble_solve(&g, &s, &t).unwrap();
        assert!(validate_pebble_path(&g, &pp, &t));
        // A long path with all pebbles packed at one end.
        let g = Graph::from_edges(6, (0..5).map(|i| (i, i + 1))).unwrap();
        let s = Placement(vec![0, 1, 2]);
        let t = Placement(vec![3, 4, 5]);
        let pp = pebble_solve(&g, &s, &t).unwrap();
        assert!(validate_pebble_path(&g, &pp, &t));
        assert_eq!(pp.end().vertex_set(), t.vertex_set());
    }

    #[test]
    fn validate_catches_bad_paths() {
        let g = path3();
        let t = Placement(vec![2]);
        let bad_edge = PebblePath {
            start: Placement(vec![0]),
            moves: vec![Move { pebble: 0, from: 0, to: 2 }],
        };
        assert!(!validate_pebble_path(&g, &bad_edge, &t));
        let wrong_end = PebblePath {
            start: Placement(vec![0]),
            moves: vec![Move { pebble: 0, from: 0, to: 1 }],
        };
        assert!(!validate_pebble_path(&g, &wrong_end, &t));
        let collision = PebblePath {
            start: Placement(vec![0, 1]),
            moves: vec![Move { pebble: 0, from: 0, to: 1 }],
        };
        assert!(!validate_pebble_path(&g, &collision, &Placement(vec![1, 2])));
        let wrong_pebble = PebblePath {
            start: Placement(vec![0, 2]),
            moves: vec![Move { pebble: 1, from: 0, to: 1 }],
        };
        assert!(!validate_pebble_path(&g, &wrong_pebble, &Placement(vec![1, 2])));
    }

    #[test]
    fn text_format_round_trip() {
        let text = "3 2\n0 1\n1 2\nS: 0\nT: 2\n";
        let inst: PebbleInstance = text.parse().unwrap();
        assert_eq!(inst.graph, path3());
        assert_eq!(inst.to_string(), text);
        assert!(matches!(
            "3 2\n0 1\nS: 0\nT: 2\n".parse::<PebbleInstance>(),
            Err(PebbleError::Parse { .. })
        ));
        assert!(matches!(
            "2 0\nS: 0\nT: 0 1\n".parse::<PebbleInstance>(),
            Err(PebbleError::SizeMismatch(1, 2))
        ));
    }

    fn graph_and_placements() -> impl Strategy<Value = (Graph, Placement, Placement)> {
        (2usize..=8).prop_flat_map(|n| {
            let edges = proptest::collection::vec((0..n, 0..n), 0..=n * 2);
            let perm_a = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
            let perm_b = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
            (Just(n), edges, perm_a, perm_b, 0..=n.min(4))
        })
        .prop_map(|(n, edges, a, b, m)| {
            let g = Graph::from_edges(n, edges.into_iter().filter(|(u, v)| u != v)).unwrap();
            (g, Placement(a[..m].to_vec()), Placement(b[..m].to_vec()))
        })
    }

    proptest! {
        #[test]
        fn solver_output_is_valid((g, s, t) in graph_and_placements()) {
            match pebble_solve(&g, &s, &t) {
                Ok(pp) => {
                    prop_assert!(equivalent(&g, &s, &t).unwrap());
                    prop_assert!(validate_pebble_path(&g, &pp, &t));
                }
                Err(e) => {
                    prop_assert_eq!(e, PebbleError::NotEquivalent);
                    prop_assert!(!equivalent(&g, &s, &t).unwrap());
                }
            }
        }

        #[test]
        fn signature_ignores_pebble_order((g, s, _t) in graph_and_placements()) {
            let mut rev = s.0.clone();
            rev.reverse();
            prop_assert_eq!(signature(&g, &s).unwrap(), signature(&g, &Placement(rev)).unwrap());
        }

        #[test]
        fn equivalence_is_an_equivalence((g, a, b) in graph_and_placements(), rot in 0usize..8) {
            let n = g.vertex_count();
            let c = Placement(a.0.iter().map(|v| (v + rot) % n).collect());
            prop_assert!(equivalent(&g, &a, &a).unwrap());
            prop_assert_eq!(equivalent(&g, &a, &b).unwrap(), equivalent(&g, &b, &a).unwrap());
            if equivalent(&g, &a, &b).unwrap() && equivalent(&g, &b, &c).unwrap() {
                prop_assert!(equivalent(&g, &a, &c).unwrap());
            }
        }
    }
}
