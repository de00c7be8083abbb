//! The roadmap planner.
//!
//! Preprocessing samples composite pebble graphs and joins every pair of them
//! with connections. A roadmap node is a selection of vertices (one
//! composite configuration) inside one graph. Nodes of one graph with equal
//! signatures form an equivalence class; any two members are joined by an
//! implicit edge whose pebble path is computed only when a query uses it.
//!
//! ```
//! use kpump::geom::{Point, Polygon, Workspace};
//! use kpump::roadmap::{preprocess, PlannerParams, RunOptions};
//! use kpump::scenario::{ColorGroup, Scenario};
//!
//! let ws = Workspace::open(Polygon::rect(0.0, 0.0, 10.0, 10.0).unwrap());
//! let colors = vec![ColorGroup {
//!     radius: 1.0,
//!     starts: vec![Point::new(2.0, 2.0)],
//!     targets: vec![Point::new(8.0, 8.0)],
//! }];
//! let scenario = Scenario::new("one", ws, colors).unwrap();
//! let state = preprocess(&scenario, &PlannerParams::new(0, 1, 1, 7), &RunOptions::default()).unwrap();
//! let plan = state
//!     .query(&scenario.starts(), &scenario.targets(), &RunOptions::default())
//!     .unwrap();
//! assert_eq!(plan.len(), 1);
//! ```

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::congen::{congen, Connection, CongenConfig, DEFAULT_ATTEMPT_FACTOR};
use crate::geom::{LinearMotion, Point, Workspace, DEFAULT_SLACK};
use crate::graphgen::{
    build_pebble_graph, sample_pumped, ColorSpec, CompositePumpedConfiguration, GeometricPebbleGraph,
    GraphgenError, DEFAULT_MAX_TRIES,
};
use crate::pebble::{pebble_solve, PebblePath, Placement};
use crate::plan::{Plan, RobotId, RobotMotion, Step};
use crate::rng::{digest_points, StreamRng, Streams};
use crate::scenario::{check_placement, PlacementRole, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("all {0} graph samples failed")]
    AllSamplesFailed(usize),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("start and target are not connected in the roadmap")]
    QueryInfeasible,
    #[error("time limit exceeded")]
    TimedOut,
    #[error("internal error: {0}")]
    Internal(String),
    #[error("pebble path uses edge ({from}, {to}) missing from color {color}")]
    MissingEdgeMotion { color: usize, from: usize, to: usize },
}

fn default_max_tries() -> usize {
    DEFAULT_MAX_TRIES
}

fn default_attempt_factor() -> usize {
    DEFAULT_ATTEMPT_FACTOR
}

fn default_slack() -> f64 {
    DEFAULT_SLACK
}

/// Sampling and connection budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Number of sampled pebble graphs.
    pub g: usize,
    /// Connections requested per graph pair.
    pub q: usize,
    /// Total pumped size per graph, shared among colors.
    pub mu: usize,
    pub seed: u64,
    #[serde(default = "default_max_tries")]
    pub max_tries: usize,
    #[serde(default = "default_attempt_factor")]
    pub attempt_factor: usize,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

impl PlannerParams {
    pub fn new(g: usize, q: usize, mu: usize, seed: u64) -> Self {
        PlannerParams {
            g,
            q,
            mu,
            seed,
            max_tries: DEFAULT_MAX_TRIES,
            attempt_factor: DEFAULT_ATTEMPT_FACTOR,
            slack: DEFAULT_SLACK,
        }
    }

    /// The same budget with pumping disabled: every graph holds exactly one
    /// position per robot.
    pub fn kbasic(self, robot_count: usize) -> Self {
        PlannerParams {
            mu: robot_count,
            ..self
        }
    }

    pub fn validate(&self, robot_count: usize) -> Result<(), PlannerError> {
        let bad = |m: String| Err(PlannerError::InvalidParams(m));
        if self.q == 0 {
            return bad("q must be at least 1".into());
        }
        if self.mu < robot_count {
            return bad(format!("mu = {} is below the robot count {robot_count}", self.mu));
        }
        if self.max_tries == 0 {
            return bad("max_tries must be positive".into());
        }
        if self.attempt_factor == 0 {
            return bad("attempt_factor must be positive".into());
        }
        if !(self.slack.is_finite() && self.slack >= 0.0) {
            return bad(format!("slack {} must be finite and non-negative", self.slack));
        }
        Ok(())
    }

    /// The parameters as recorded in a plan file, tagged with the planner.
    pub fn echo(&self, planner: &str) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("params serialize");
        v["planner"] = planner.into();
        v
    }

    fn congen_config(&self) -> CongenConfig {
        CongenConfig {
            attempt_factor: self.attempt_factor,
            slack: self.slack,
        }
    }
}

/// Execution controls that never change results, only whether they arrive.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 and 1 both mean sequential.
    pub threads: usize,
    pub deadline: Option<Instant>,
}

impl RunOptions {
    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, PlannerError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads.max(1))
            .build()
            .map_err(|e| PlannerError::Internal(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }

    fn chunk(&self) -> usize {
        self.threads.max(1) * 4
    }
}

pub type GraphId = usize;
pub type NodeId = usize;

/// Where a graph of the roadmap came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphOrigin {
    /// The `i`-th sample of preprocessing.
    Sampled(usize),
    /// An edgeless graph wrapping a query configuration.
    Query,
}

#[derive(Debug, Clone)]
struct Class {
    graph: u32,
    signature: Box<[u32]>,
    members: Vec<u32>,
}

/// How one step of a node path is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Hop {
    Connection { edge: u32, forward: bool },
    Equivalence,
}

/// The roadmap over composite configurations.
#[derive(Debug, Clone)]
pub struct PlannerState {
    workspace: Workspace,
    specs: Vec<ColorSpec>,
    params: PlannerParams,
    graphs: Vec<GeometricPebbleGraph>,
    origins: Vec<GraphOrigin>,
    /// Start of each color inside a flat selection.
    offsets: Vec<usize>,
    width: usize,
    node_graph: Vec<u32>,
    node_class: Vec<u32>,
    /// `width` sorted-per-color vertex indices per node.
    selections: Vec<u32>,
    node_index: HashMap<u64, Vec<u32>>,
    classes: Vec<Class>,
    class_index: HashMap<u64, Vec<u32>>,
    edges: Vec<(u32, u32)>,
    /// Per edge and per slot of the first endpoint's selection, the vertex
    /// that slot moves to in the second endpoint's graph.
    edge_targets: Vec<u32>,
    adjacency: Vec<Vec<(u32, u32)>>,
    warnings: Vec<String>,
}

fn key_hash(graph: u32, data: &[u32]) -> u64 {
    let mut h = DefaultHasher::new();
    graph.hash(&mut h);
    data.hash(&mut h);
    h.finish()
}

impl PlannerState {
    /// An empty roadmap with no graphs.
    pub fn new(scenario: &Scenario, params: PlannerParams) -> Self {
        let specs = scenario.color_specs();
        let mut offsets = Vec::with_capacity(specs.len());
        let mut width = 0;
        for s in &specs {
            offsets.push(width);
            width += s.robot_count;
        }
        PlannerState {
            workspace: scenario.workspace.clone(),
            specs,
            params,
            graphs: Vec::new(),
            origins: Vec::new(),
            offsets,
            width,
            node_graph: Vec::new(),
            node_class: Vec::new(),
            selections: Vec::new(),
            node_index: HashMap::new(),
            classes: Vec::new(),
            class_index: HashMap::new(),
            edges: Vec::new(),
            edge_targets: Vec::new(),
            adjacency: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn params(&self) -> &PlannerParams {
        &self.params
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    pub fn graph_count(&self) -> usize {
        self.graphs.len()
    }

    pub fn graph(&self, id: GraphId) -> &GeometricPebbleGraph {
        &self.graphs[id]
    }

    pub fn origin(&self, id: GraphId) -> GraphOrigin {
        self.origins[id]
    }

    pub fn node_count(&self) -> usize {
        self.node_graph.len()
    }

    pub fn connection_edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of implicit equivalence edges: every same-class pair.
    pub fn equivalence_edge_count(&self) -> usize {
        self.classes
            .iter()
            .map(|c| c.members.len() * c.members.len().saturating_sub(1) / 2)
            .sum()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn node_graph(&self, n: NodeId) -> GraphId {
        self.node_graph[n] as usize
    }

    /// The node's vertices, one sorted list per color.
    pub fn node_selection(&self, n: NodeId) -> Vec<Vec<usize>> {
        let flat = self.flat_selection(n);
        self.split(flat)
    }

    /// Whether two distinct nodes share a graph and a signature.
    pub fn equivalent_nodes(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.node_class[a] == self.node_class[b]
    }

    /// Connection-edge neighbours of a node.
    pub fn connection_neighbors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[n].iter().map(|&(v, _)| v as usize)
    }

    /// Looks up the node for `selection` (one list per color, any order).
    pub fn find_node(&self, graph: GraphId, selection: &[Vec<usize>]) -> Option<NodeId> {
        let flat = self.flatten(selection);
        self.lookup(graph as u32, &flat).map(|n| n as usize)
    }

    fn flat_selection(&self, n: usize) -> &[u32] {
        &self.selections[n * self.width..(n + 1) * self.width]
    }

    fn color_range(&self, color: usize) -> std::ops::Range<usize> {
        self.offsets[color]..self.offsets[color] + self.specs[color].robot_count
    }

    fn split(&self, flat: &[u32]) -> Vec<Vec<usize>> {
        (0..self.specs.len())
            .map(|c| flat[self.color_range(c)].iter().map(|&v| v as usize).collect())
            .collect()
    }

    fn flatten(&self, selection: &[Vec<usize>]) -> Vec<u32> {
        let mut flat = Vec::with_capacity(self.width);
        for sel in selection {
            let mut s: Vec<u32> = sel.iter().map(|&v| v as u32).collect();
            s.sort_unstable();
            flat.extend(s);
        }
        flat
    }

    fn lookup(&self, graph: u32, flat: &[u32]) -> Option<u32> {
        self.node_index.get(&key_hash(graph, flat))?.iter().copied().find(|&n| {
            self.node_graph[n as usize] == graph && self.flat_selection(n as usize) == flat
        })
    }

    /// Adds a graph to the roadmap and returns its id.
    pub fn add_graph(&mut self, graph: GeometricPebbleGraph, origin: GraphOrigin) -> GraphId {
        self.graphs.push(graph);
        self.origins.push(origin);
        self.graphs.len() - 1
    }

    /// Inserts (or finds) the node for a flat, per-color sorted selection and
    /// files it under its equivalence class.
    fn insert_node(&mut self, graph: u32, flat: &[u32]) -> u32 {
        debug_assert_eq!(flat.len(), self.width);
        if let Some(n) = self.lookup(graph, flat) {
            return n;
        }
        let id = self.node_graph.len() as u32;
        let g = &self.graphs[graph as usize];
        let mut signature = Vec::new();
        for c in 0..self.specs.len() {
            let comps = g.color(c).components();
            let mut counts = vec![0u32; comps.count()];
            for &v in &flat[self.color_range(c)] {
                counts[comps.label(v as usize)] += 1;
            }
            signature.extend(counts);
        }
        let ch = key_hash(graph, &signature);
        let found = self.class_index.get(&ch).and_then(|ids| {
            ids.iter()
                .copied()
                .find(|&k| self.classes[k as usize].graph == graph && *self.classes[k as usize].signature == signature[..])
        });
        let class = match found {
            Some(k) => k,
            None => {
                let k = self.classes.len() as u32;
                self.classes.push(Class {
                    graph,
                    signature: signature.into_boxed_slice(),
                    members: Vec::new(),
                });
                self.class_index.entry(ch).or_default().push(k);
                k
            }
        };
        self.classes[class as usize].members.push(id);
        self.node_graph.push(graph);
        self.node_class.push(class);
        self.selections.extend_from_slice(flat);
        self.node_index.entry(key_hash(graph, flat)).or_default().push(id);
        self.adjacency.push(Vec::new());
        id
    }

    /// Inserts both endpoints of a connection from graph `a` to graph `b`
    /// and the edge joining them.
    pub fn add_connection(&mut self, a: GraphId, b: GraphId, conn: &Connection) {
        let from = self.flatten(&conn.from_selection());
        let to = self.flatten(&conn.to_selection());
        let na = self.insert_node(a as u32, &from);
        let nb = self.insert_node(b as u32, &to);
        let e = self.edges.len() as u32;
        self.edges.push((na, nb));
        // Bridges are sorted by `from`, matching the sorted selection.
        for bridges in &conn.per_color {
            self.edge_targets.extend(bridges.iter().map(|br| br.to as u32));
        }
        self.adjacency[na as usize].push((nb, e));
        self.adjacency[nb as usize].push((na, e));
    }

    /// Runs the connection generator from graph `a` to graph `b` and inserts
    /// every connection found. Returns how many were inserted.
    pub fn connect<R: rand::Rng + ?Sized>(&mut self, a: GraphId, b: GraphId, q: usize, rng: &mut R) -> usize {
        let conns = congen(
            self.graphs[a].pumped(),
            self.graphs[b].pumped(),
            q,
            &self.workspace,
            rng,
            &self.params.congen_config(),
        );
        for c in &conns {
            self.add_connection(a, b, c);
        }
        conns.len()
    }

    /// Breadth-first search with unit weights; equivalence classes are
    /// expanded once, as cliques.
    pub fn search(&self, start: NodeId, goal: NodeId) -> Option<Vec<NodeId>> {
        let n = self.node_count();
        let mut prev = vec![u32::MAX; n];
        let mut class_done = vec![false; self.classes.len()];
        let mut queue = VecDeque::new();
        prev[start] = start as u32;
        queue.push_back(start as u32);
        while let Some(u) = queue.pop_front() {
            if u as usize == goal {
                let mut path = vec![goal];
                let mut cur = goal;
                while cur != start {
                    cur = prev[cur] as usize;
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &(v, _) in &self.adjacency[u as usize] {
                if prev[v as usize] == u32::MAX {
                    prev[v as usize] = u;
                    queue.push_back(v);
                }
            }
            let class = self.node_class[u as usize] as usize;
            if !class_done[class] {
                class_done[class] = true;
                for &v in &self.classes[class].members {
                    if prev[v as usize] == u32::MAX {
                        prev[v as usize] = u;
                        queue.push_back(v);
                    }
                }
            }
        }
        None
    }

    fn hop(&self, u: usize, v: usize) -> Option<Hop> {
        if self.equivalent_nodes(u, v) {
            return Some(Hop::Equivalence);
        }
        self.adjacency[u].iter().find(|&&(w, _)| w as usize == v).map(|&(_, e)| Hop::Connection {
            edge: e,
            forward: self.edges[e as usize].0 as usize == u,
        })
    }

    /// Turns a node path into robot steps. Robot `i` of color `c` starts at
    /// the `i`-th vertex of the first node's color-`c` selection.
    pub fn retrieve_path(&self, path: &[NodeId]) -> Result<Plan, PlannerError> {
        let Some(&first) = path.first() else {
            return Ok(Plan::default());
        };
        let k = self.specs.len();
        let mut at: Vec<Vec<usize>> = self.node_selection(first);
        let mut steps = Vec::new();
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            if u == v {
                continue;
            }
            let hop = self
                .hop(u, v)
                .ok_or_else(|| PlannerError::Internal(format!("nodes {u} and {v} are not adjacent")))?;
            let (gu, gv) = (self.node_graph(u), self.node_graph(v));
            match hop {
                Hop::Equivalence => {
                    let target = self.node_selection(v);
                    let graph = &self.graphs[gu];
                    for c in 0..k {
                        let pp = pebble_solve(graph.color(c).graph(), &Placement(at[c].clone()), &Placement(target[c].clone()))
                            .map_err(|e| PlannerError::Internal(format!("equivalence hop {u} -> {v}: {e}")))?;
                        let binding: Vec<RobotId> = (0..at[c].len()).map(|i| RobotId::new(c, i)).collect();
                        steps.extend(transform_pebble_path(graph, c, &pp, &binding)?);
                        at[c] = pp.end().0;
                    }
                }
                Hop::Connection { edge, forward } => {
                    let (a, _) = self.edges[edge as usize];
                    let sources = self.flat_selection(a as usize);
                    let dests = &self.edge_targets[edge as usize * self.width..(edge as usize + 1) * self.width];
                    let (pu, pv) = (self.graphs[gu].pumped(), self.graphs[gv].pumped());
                    let mut motions = Vec::with_capacity(self.width);
                    for c in 0..k {
                        let mut next = at[c].clone();
                        for slot in self.color_range(c) {
                            let (src, dst) = (sources[slot] as usize, dests[slot] as usize);
                            let (here, there) = if forward { (src, dst) } else { (dst, src) };
                            let robot = at[c].iter().position(|&x| x == here).ok_or_else(|| {
                                PlannerError::Internal(format!("no robot at vertex {here} of color {c}"))
                            })?;
                            next[robot] = there;
                            motions.push(RobotMotion {
                                robot: RobotId::new(c, robot),
                                motion: LinearMotion::new(pu.point(c, here), pv.point(c, there)),
                            });
                        }
                        at[c] = next;
                    }
                    motions.sort_by_key(|m| m.robot);
                    steps.push(Step::Simultaneous { motions });
                }
            }
        }
        Ok(Plan::new(steps))
    }

    /// Plans from `starts` to `targets` on a copy of this roadmap.
    pub fn query(&self, starts: &[Vec<Point>], targets: &[Vec<Point>], opts: &RunOptions) -> Result<Plan, PlannerError> {
        self.clone().into_query(starts, targets, opts)
    }

    /// As [`PlannerState::query`], consuming the roadmap.
    ///
    /// Each query configuration becomes an edgeless graph connected to every
    /// sampled graph, and the two are also connected directly. Random
    /// streams are keyed by a digest of the configuration points, so swapping
    /// start and target yields the same roadmap.
    pub fn into_query(
        mut self,
        starts: &[Vec<Point>],
        targets: &[Vec<Point>],
        opts: &RunOptions,
    ) -> Result<Plan, PlannerError> {
        self.check_query(starts, PlacementRole::Start)?;
        self.check_query(targets, PlacementRole::Target)?;
        if same_multisets(starts, targets) {
            return Ok(Plan::default());
        }
        let (ds, dt) = (digest_points(starts), digest_points(targets));
        let ends = if ds <= dt {
            [(starts, ds), (targets, dt)]
        } else {
            [(targets, dt), (starts, ds)]
        };
        let sampled: Vec<(GraphId, usize)> = (0..self.graphs.len())
            .filter_map(|id| match self.origins[id] {
                GraphOrigin::Sampled(i) => Some((id, i)),
                GraphOrigin::Query => None,
            })
            .collect();
        let mut ids = [0; 2];
        for (slot, (pts, _)) in ends.iter().enumerate() {
            let pumped = CompositePumpedConfiguration::new(&self.specs, pts.to_vec());
            let id = self.add_graph(GeometricPebbleGraph::edgeless(pumped), GraphOrigin::Query);
            let all: Vec<u32> = (0..self.specs.len())
                .flat_map(|c| 0..self.specs[c].robot_count as u32)
                .collect();
            self.insert_node(id as u32, &all);
            ids[slot] = id;
        }

        let streams = Streams::new(self.params.seed);
        let mut jobs = Vec::new();
        for (slot, (_, digest)) in ends.iter().enumerate() {
            for &(gid, i) in &sampled {
                jobs.push(ConnectJob {
                    a: ids[slot],
                    b: gid,
                    rng: streams.stream_keyed("query", digest, i as u64),
                });
            }
        }
        let pair_key = [ends[0].1, ends[1].1].concat();
        jobs.push(ConnectJob {
            a: ids[0],
            b: ids[1],
            rng: streams.stream_keyed("query-direct", &pair_key, 0),
        });
        self.run_jobs(jobs, opts)?;

        let s = self.identity_node(ids[if ds <= dt { 0 } else { 1 }]);
        let t = self.identity_node(ids[if ds <= dt { 1 } else { 0 }]);
        let path = self.search(s, t).ok_or(PlannerError::QueryInfeasible)?;
        self.retrieve_path(&path)
    }

    fn identity_node(&self, graph: GraphId) -> NodeId {
        let all: Vec<Vec<usize>> = self.specs.iter().map(|s| (0..s.robot_count).collect()).collect();
        self.find_node(graph, &all).expect("query node was inserted")
    }

    fn check_query(&self, pts: &[Vec<Point>], role: PlacementRole) -> Result<(), PlannerError> {
        let counts: Vec<usize> = pts.iter().map(Vec::len).collect();
        let expected: Vec<usize> = self.specs.iter().map(|s| s.robot_count).collect();
        if counts != expected {
            return Err(PlannerError::InvalidQuery(format!(
                "expected per-color counts {expected:?}, got {counts:?}"
            )));
        }
        let radii: Vec<f64> = self.specs.iter().map(|s| s.radius).collect();
        check_placement(&self.workspace, &radii, pts, role).map_err(|e| PlannerError::InvalidQuery(e.to_string()))
    }

    /// Runs connection jobs in parallel, a chunk at a time, inserting results
    /// in job order.
    fn run_jobs(&mut self, jobs: Vec<ConnectJob>, opts: &RunOptions) -> Result<(), PlannerError> {
        let config = self.params.congen_config();
        let q = self.params.q;
        for chunk in jobs.chunks(opts.chunk()) {
            let this = &*self;
            let results: Vec<Option<Vec<Connection>>> = opts.install(|| {
                chunk
                    .par_iter()
                    .map(|job| {
                        if opts.expired() {
                            return None;
                        }
                        let mut rng = job.rng.clone();
                        Some(congen(
                            this.graphs[job.a].pumped(),
                            this.graphs[job.b].pumped(),
                            q,
                            &this.workspace,
                            &mut rng,
                            &config,
                        ))
                    })
                    .collect()
            })?;
            for (job, conns) in chunk.iter().zip(results) {
                for c in conns.ok_or(PlannerError::TimedOut)? {
                    self.add_connection(job.a, job.b, &c);
                }
            }
        }
        Ok(())
    }
}

struct ConnectJob {
    a: GraphId,
    b: GraphId,
    rng: StreamRng,
}

/// Samples `params.g` composite pebble graphs and connects every pair.
///
/// A failed sample is skipped with a warning; the run fails only when every
/// sample fails. Results do not depend on `opts.threads`.
pub fn preprocess(scenario: &Scenario, params: &PlannerParams, opts: &RunOptions) -> Result<PlannerState, PlannerError> {
    params.validate(scenario.robot_count())?;
    let mut state = PlannerState::new(scenario, *params);
    let streams = Streams::new(params.seed);
    let specs = scenario.color_specs();
    let w = &scenario.workspace;
    let samples: Vec<Option<Result<GeometricPebbleGraph, GraphgenError>>> = opts.install(|| {
        (0..params.g)
            .into_par_iter()
            .map(|i| {
                if opts.expired() {
                    return None;
                }
                let mut rng = streams.stream("sample", i as u64);
                Some(
                    sample_pumped(&specs, w, params.mu, &mut rng, params.max_tries, params.slack)
                        .map(|p| build_pebble_graph(p, w, params.slack)),
                )
            })
            .collect()
    })?;
    let mut sampled = Vec::new();
    for (i, s) in samples.into_iter().enumerate() {
        match s.ok_or(PlannerError::TimedOut)? {
            Ok(g) => sampled.push((state.add_graph(g, GraphOrigin::Sampled(i)), i)),
            Err(e) => state.warnings.push(format!("sample {i} skipped: {e}")),
        }
    }
    if params.g > 0 && sampled.is_empty() {
        return Err(PlannerError::AllSamplesFailed(params.g));
    }
    let mut jobs = Vec::new();
    for (x, &(a, i)) in sampled.iter().enumerate() {
        for &(b, j) in &sampled[x + 1..] {
            jobs.push(ConnectJob {
                a,
                b,
                rng: streams.stream2("connect", i as u64, j as u64),
            });
        }
    }
    state.run_jobs(jobs, opts)?;
    Ok(state)
}

fn same_multisets(a: &[Vec<Point>], b: &[Vec<Point>]) -> bool {
    let key = |p: &Point| (p.x.to_bits(), p.y.to_bits());
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            let mut x: Vec<_> = x.iter().map(key).collect();
            let mut y: Vec<_> = y.iter().map(key).collect();
            x.sort_unstable();
            y.sort_unstable();
            x == y
        })
}

/// Turns a pebble path on one color's graph into single-robot steps.
/// `binding[p]` is the robot carried by pebble `p`.
pub fn transform_pebble_path(
    g: &GeometricPebbleGraph,
    color: usize,
    pp: &PebblePath,
    binding: &[RobotId],
) -> Result<Vec<Step>, PlannerError> {
    pp.moves
        .iter()
        .map(|m| {
            let motion = g.color(color).motion(m.from, m.to).ok_or(PlannerError::MissingEdgeMotion {
                color,
                from: m.from,
                to: m.to,
            })?;
            let robot = *binding
                .get(m.pebble)
                .ok_or_else(|| PlannerError::Internal(format!("pebble {} has no robot", m.pebble)))?;
            Ok(Step::Single { robot, motion })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congen::Bridge;
    use crate::geom::{Polygon, Workspace};
    use crate::pebble::Move;
    use crate::scenario::ColorGroup;
    use crate::verify::{verify_plan, DEFAULT_EPS};

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn open_square(colors: Vec<ColorGroup>) -> Scenario {
        let ws = Workspace::open(Polygon::rect(0.0, 0.0, 10.0, 10.0).unwrap());
        Scenario::new("square", ws, colors).unwrap()
    }

    fn one_robot() -> Scenario {
        open_square(vec![ColorGroup {
            radius: 1.0,
            starts: vec![p(2.0, 2.0)],
            targets: vec![p(8.0, 8.0)],
        }])
    }

    fn two_by_two() -> Scenario {
        open_square(vec![
            ColorGroup {
                radius: 0.6,
                starts: vec![p(2.0, 2.0), p(2.0, 8.0)],
                targets: vec![p(8.0, 8.0), p(8.0, 2.0)],
            },
            ColorGroup {
                radius: 0.5,
                starts: vec![p(8.0, 8.0 - 3.0), p(5.0, 5.0)],
                targets: vec![p(2.0, 5.0), p(5.0, 8.5)],
            },
        ])
    }

    fn edgeless(s: &Scenario, pts: Vec<Vec<Point>>) -> GeometricPebbleGraph {
        GeometricPebbleGraph::edgeless(CompositePumpedConfiguration::new(&s.color_specs(), pts))
    }

    #[test]
    fn zero_graphs_give_an_empty_roadmap() {
        let st = preprocess(&one_robot(), &PlannerParams::new(0, 1, 1, 1), &RunOptions::default()).unwrap();
        assert_eq!((st.graph_count(), st.node_count(), st.connection_edge_count()), (0, 0, 0));
    }

    #[test]
    fn two_graphs_in_an_open_square_connect() {
        let st = preprocess(&one_robot(), &PlannerParams::new(2, 1, 1, 5), &RunOptions::default()).unwrap();
        assert_eq!(st.graph_count(), 2);
        assert!(st.connection_edge_count() >= 1);
    }

    #[test]
    fn bad_params_are_rejected() {
        let s = one_robot();
        let o = RunOptions::default();
        assert!(matches!(preprocess(&s, &PlannerParams::new(1, 0, 1, 1), &o), Err(PlannerError::InvalidParams(_))));
        assert!(matches!(preprocess(&s, &PlannerParams::new(1, 1, 0, 1), &o), Err(PlannerError::InvalidParams(_))));
    }

    #[test]
    fn failed_samples_warn_and_all_failing_is_fatal() {
        let s = one_robot();
        let mut params = PlannerParams::new(3, 1, 1, 1);
        params.max_tries = 1;
        // With one draw per sample some samples miss the free square.
        match preprocess(&s, &params, &RunOptions::default()) {
            Ok(st) => assert_eq!(st.graph_count() + st.warnings().len(), 3),
            Err(e) => assert_eq!(e, PlannerError::AllSamplesFailed(3)),
        }
        let tiny = open_square(vec![ColorGroup {
            radius: 4.999_999_9,
            starts: vec![p(5.0, 5.0)],
            targets: vec![p(5.0, 5.0)],
        }]);
        params.max_tries = 50;
        assert_eq!(
            preprocess(&tiny, &params, &RunOptions::default()).unwrap_err(),
            PlannerError::AllSamplesFailed(3)
        );
    }

    #[test]
    fn connection_insertion_counts() {
        let s = open_square(vec![ColorGroup {
            radius: 0.5,
            starts: vec![p(1.0, 1.0)],
            targets: vec![p(9.0, 9.0)],
        }]);
        let mut st = PlannerState::new(&s, PlannerParams::new(0, 1, 1, 0));
        let a = st.add_graph(edgeless(&s, vec![vec![p(1.0, 1.0), p(3.0, 1.0)]]), GraphOrigin::Sampled(0));
        let b = st.add_graph(edgeless(&s, vec![vec![p(1.0, 5.0), p(3.0, 5.0)]]), GraphOrigin::Sampled(1));
        let bridge = |from: usize, to: usize| Connection {
            per_color: vec![vec![Bridge {
                from,
                to,
                motion: LinearMotion::new(st.graph(a).pumped().point(0, from), st.graph(b).pumped().point(0, to)),
            }]],
        };
        let (c1, c2) = (bridge(0, 0), bridge(0, 1));
        st.add_connection(a, b, &c1);
        assert_eq!((st.node_count(), st.connection_edge_count()), (2, 1));
        st.add_connection(a, b, &c2);
        assert_eq!((st.node_count(), st.connection_edge_count()), (3, 2));
        // Edgeless graphs: every single-vertex selection is its own class.
        assert_eq!(st.equivalence_edge_count(), 0);
    }

    #[test]
    fn equivalence_classes_group_same_signature_nodes() {
        let s = open_square(vec![ColorGroup {
            radius: 0.5,
            starts: vec![p(1.0, 1.0)],
            targets: vec![p(9.0, 9.0)],
        }]);
        let pumped = CompositePumpedConfiguration::new(&s.color_specs(), vec![vec![p(2.0, 2.0), p(5.0, 2.0), p(8.0, 2.0)]]);
        let g = build_pebble_graph(pumped, &s.workspace, DEFAULT_SLACK);
        // The outer pair is blocked by the middle vertex, leaving a path.
        assert_eq!(g.edge_count(), 2);
        let mut st = PlannerState::new(&s, PlannerParams::new(0, 1, 1, 0));
        let id = st.add_graph(g, GraphOrigin::Sampled(0));
        let nodes: Vec<u32> = (0..3).map(|v| st.insert_node(id as u32, &[v])).collect();
        assert_eq!(st.equivalence_edge_count(), 3);
        assert!(st.equivalent_nodes(nodes[0] as usize, nodes[2] as usize));

        // Moving the robot across the middle vertex takes two single moves.
        let plan = st.retrieve_path(&[nodes[0] as usize, nodes[2] as usize]).unwrap();
        assert_eq!(plan.len(), 2);
        assert!(plan.steps.iter().all(|s| matches!(s, Step::Single { .. })));
        assert_eq!(plan.final_positions(&[vec![p(2.0, 2.0)]]), vec![vec![p(8.0, 2.0)]]);
        assert!(st.retrieve_path(&[nodes[1] as usize, nodes[1] as usize]).unwrap().is_empty());
    }

    #[test]
    fn transform_examples() {
        let s = one_robot();
        let pumped = CompositePumpedConfiguration::new(&s.color_specs(), vec![vec![p(2.0, 2.0), p(5.0, 2.0), p(8.0, 2.0)]]);
        let g = build_pebble_graph(pumped, &s.workspace, DEFAULT_SLACK);
        let robot = [RobotId::new(0, 0)];
        let empty = PebblePath {
            start: Placement(vec![0]),
            moves: vec![],
        };
        assert!(transform_pebble_path(&g, 0, &empty, &robot).unwrap().is_empty());
        let mv = |from, to| Move { pebble: 0, from, to };
        let two = PebblePath {
            start: Placement(vec![0]),
            moves: vec![mv(0, 1), mv(1, 2)],
        };
        let steps = transform_pebble_path(&g, 0, &two, &robot).unwrap();
        assert_eq!(
            steps,
            vec![
                Step::Single { robot: robot[0], motion: LinearMotion::new(p(2.0, 2.0), p(5.0, 2.0)) },
                Step::Single { robot: robot[0], motion: LinearMotion::new(p(5.0, 2.0), p(8.0, 2.0)) },
            ]
        );
        let bad = PebblePath {
            start: Placement(vec![0]),
            moves: vec![mv(0, 2)],
        };
        let g0 = edgeless(&s, vec![vec![p(2.0, 2.0), p(5.0, 2.0), p(8.0, 2.0)]]);
        assert_eq!(
            transform_pebble_path(&g0, 0, &bad, &robot).unwrap_err(),
            PlannerError::MissingEdgeMotion { color: 0, from: 0, to: 2 }
        );
    }

    #[test]
    fn trivial_query_is_a_straight_line() {
        let s = one_robot();
        let st = preprocess(&s, &PlannerParams::new(0, 1, 1, 3), &RunOptions::default()).unwrap();
        let plan = st.query(&s.starts(), &s.targets(), &RunOptions::default()).unwrap();
        assert_eq!(
            plan.steps,
            vec![Step::Simultaneous {
                motions: vec![RobotMotion {
                    robot: RobotId::new(0, 0),
                    motion: LinearMotion::new(p(2.0, 2.0), p(8.0, 8.0)),
                }]
            }]
        );
        assert!(st.query(&s.starts(), &s.starts(), &RunOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn invalid_queries_are_rejected() {
        let s = two_by_two();
        let st = PlannerState::new(&s, PlannerParams::new(0, 1, 4, 0));
        let o = RunOptions::default();
        let mut bad = s.starts();
        bad[0][1] = bad[0][0];
        assert!(matches!(st.query(&bad, &s.targets(), &o), Err(PlannerError::InvalidQuery(_))));
        assert!(matches!(st.query(&s.starts()[..1], &s.targets(), &o), Err(PlannerError::InvalidQuery(_))));
    }

    #[test]
    fn plans_verify_and_are_symmetric_and_deterministic() {
        let s = two_by_two();
        let params = PlannerParams::new(6, 20, 10, 11);
        let seq = RunOptions::default();
        let par = RunOptions {
            threads: 4,
            deadline: None,
        };
        let st = preprocess(&s, &params, &seq).unwrap();
        let st4 = preprocess(&s, &params, &par).unwrap();
        assert_eq!(st.node_count(), st4.node_count());
        assert_eq!(st.connection_edge_count(), st4.connection_edge_count());

        let forward = st.query(&s.starts(), &s.targets(), &seq);
        let forward4 = st4.query(&s.starts(), &s.targets(), &par);
        assert_eq!(forward, forward4);
        let backward = st.query(&s.targets(), &s.starts(), &seq);
        assert_eq!(forward.is_ok(), backward.is_ok());
        let plan = forward.unwrap();
        let r = verify_plan(&s, &plan, DEFAULT_EPS);
        assert!(r.passed, "{:?}", r.violations);

        let swapped = Scenario::new("swapped", s.workspace.clone(), {
            s.colors
                .iter()
                .map(|c| ColorGroup {
                    radius: c.radius,
                    starts: c.targets.clone(),
                    targets: c.starts.clone(),
                })
                .collect()
        })
        .unwrap();
        let r = verify_plan(&swapped, &backward.unwrap(), DEFAULT_EPS);
        assert!(r.passed, "{:?}", r.violations);
    }

    #[test]
    fn expired_deadline_times_out() {
        let s = two_by_two();
        let opts = RunOptions {
            threads: 1,
            deadline: Some(Instant::now()),
        };
        assert_eq!(
            preprocess(&s, &PlannerParams::new(3, 5, 10, 0), &opts).unwrap_err(),
            PlannerError::TimedOut
        );
    }
}
