//! Independent plan checking and brute-force references.
//!
//! The verifier applies the raw contact rules with no slack: a robot may not
//! touch a wall, and two robots may touch but not overlap.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dist_segment_segment, min_dist_linear_motions, sweep_free, LinearMotion, Point};
use crate::pebble::{Graph, PebbleError, Placement};
use crate::plan::{Plan, RobotId, Step};
use crate::scenario::Scenario;

/// Default position-match tolerance.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Largest placement state space the brute-force oracle will explore.
pub const MAX_ORACLE_STATES: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    /// A robot's first motion does not start at its start position.
    StartMismatch,
    /// A motion does not start where the robot's previous motion ended.
    Discontinuity,
    ObstacleCollision,
    RobotCollision,
    UnknownRobot,
    /// A robot listed twice in one simultaneous step.
    DuplicateRobot,
    /// Final positions of a color do not cover its targets.
    TargetMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Step index, or `None` for the final-position check.
    pub step: Option<usize>,
    pub code: ViolationCode,
    pub robots: Vec<RobotId>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub step_count: usize,
    pub violations: Vec<Violation>,
    /// Smallest wall distance minus radius over all motions.
    pub min_wall_clearance: Option<f64>,
    /// Smallest pairwise distance minus radii sum over all steps.
    pub min_robot_clearance: Option<f64>,
}

impl VerificationReport {
    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn min_opt(a: &mut Option<f64>, x: f64) {
    *a = Some(a.map_or(x, |y| y.min(x)));
}

/// Checks `plan` against `scenario`. Every problem is reported; nothing is
/// fatal.
pub fn verify_plan(scenario: &Scenario, plan: &Plan, eps: f64) -> VerificationReport {
    let radii = scenario.radii();
    let mut pos = scenario.starts();
    let mut moved: Vec<Vec<bool>> = pos.iter().map(|c| vec![false; c.len()]).collect();
    let robots: Vec<RobotId> = pos
        .iter()
        .enumerate()
        .flat_map(|(c, ps)| (0..ps.len()).map(move |i| RobotId::new(c, i)))
        .collect();
    let mut violations = Vec::new();
    let mut min_wall = None;
    let mut min_robot = None;
    let w = &scenario.workspace;

    for (s, step) in plan.steps.iter().enumerate() {
        let mut this: HashMap<RobotId, LinearMotion> = HashMap::new();
        for rm in step.motions() {
            let RobotId { color, index } = rm.robot;
            if color >= pos.len() || index >= pos[color].len() {
                violations.push(Violation {
                    step: Some(s),
                    code: ViolationCode::UnknownRobot,
                    robots: vec![rm.robot],
                    detail: format!("robot {} does not exist", rm.robot),
                });
                continue;
            }
            if this.insert(rm.robot, rm.motion).is_some() {
                violations.push(Violation {
                    step: Some(s),
                    code: ViolationCode::DuplicateRobot,
                    robots: vec![rm.robot],
                    detail: format!("robot {} moves twice in one step", rm.robot),
                });
            }
            let gap = rm.motion.from.dist(pos[color][index]);
            if gap.is_nan() || gap > eps {
                let code = if moved[color][index] {
                    ViolationCode::Discontinuity
                } else {
                    ViolationCode::StartMismatch
                };
                violations.push(Violation {
                    step: Some(s),
                    code,
                    robots: vec![rm.robot],
                    detail: format!("motion starts {gap} away from the robot's position"),
                });
            }
            let r = radii[color];
            if !sweep_free(&rm.motion, r, w) {
                violations.push(Violation {
                    step: Some(s),
                    code: ViolationCode::ObstacleCollision,
                    robots: vec![rm.robot],
                    detail: format!("swept disc {:?} -> {:?} hits a wall", rm.motion.from, rm.motion.to),
                });
            }
            for (a, b) in w.edges() {
                min_opt(&mut min_wall, dist_segment_segment(rm.motion.from, rm.motion.to, a, b) - r);
            }
        }

        // Every robot over this step's clock; unlisted robots hold.
        let motions: Vec<(RobotId, LinearMotion)> = robots
            .iter()
            .map(|&id| {
                let m = this
                    .get(&id)
                    .copied()
                    .unwrap_or_else(|| LinearMotion::stationary(pos[id.color][id.index]));
                (id, m)
            })
            .collect();
        for (x, &(ia, ma)) in motions.iter().enumerate() {
            for &(ib, mb) in &motions[x + 1..] {
                if ma.is_stationary() && mb.is_stationary() && !this.contains_key(&ia) && !this.contains_key(&ib) {
                    // Two holding robots: unchanged since they last moved.
                    continue;
                }
                let need = radii[ia.color] + radii[ib.color];
                let d = min_dist_linear_motions(&ma, &mb);
                min_opt(&mut min_robot, d - need);
                if d < need {
                    violations.push(Violation {
                        step: Some(s),
                        code: ViolationCode::RobotCollision,
                        robots: vec![ia, ib],
                        detail: format!("distance {d} below {need}"),
                    });
                }
            }
        }
        for (id, m) in this {
            pos[id.color][id.index] = m.to;
            moved[id.color][id.index] = true;
        }
    }

    let targets = scenario.targets();
    for (c, ts) in targets.iter().enumerate() {
        let mut free: Vec<Point> = pos[c].clone();
        for t in ts {
            let best = free
                .iter()
                .enumerate()
                .map(|(i, p)| (i, p.dist(*t)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((i, d)) if d <= eps => {
                    free.swap_remove(i);
                }
                _ => violations.push(Violation {
                    step: None,
                    code: ViolationCode::TargetMismatch,
                    robots: Vec::new(),
                    detail: format!("no color-{c} robot ends at {t:?}"),
                }),
            }
        }
    }

    VerificationReport {
        passed: violations.is_empty(),
        step_count: plan.len(),
        violations,
        min_wall_clearance: min_wall,
        min_robot_clearance: min_robot,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("placement state space has {0} states, above the limit")]
    StateSpaceTooLarge(u128),
    #[error(transparent)]
    Pebble(#[from] PebbleError),
}

/// Outcome of the exhaustive pebble search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleResult {
    pub reachable: bool,
    /// Fewest moves, when reachable.
    pub moves: Option<usize>,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Breadth-first search over occupied-vertex sets, moving one pebble along
/// one edge per step, from `s` to the vertex set of `t`.
pub fn brute_force_pebble_oracle(g: &Graph, s: &Placement, t: &Placement) -> Result<OracleResult, OracleError> {
    if s.len() != t.len() {
        return Err(PebbleError::SizeMismatch(s.len(), t.len()).into());
    }
    s.validate(g)?;
    t.validate(g)?;
    let n = g.vertex_count();
    let states = if n > 64 { u128::MAX } else { binomial(n as u128, s.len() as u128) };
    if n > 64 || states > MAX_ORACLE_STATES {
        return Err(OracleError::StateSpaceTooLarge(states));
    }
    let mask = |p: &Placement| p.0.iter().fold(0u64, |m, &v| m | (1 << v));
    let (start, goal) = (mask(s), mask(t));
    let mut dist = HashMap::new();
    dist.insert(start, 0usize);
    let mut queue = VecDeque::from([start]);
    while let Some(state) = queue.pop_front() {
        let d = dist[&state];
        if state == goal {
            return Ok(OracleResult {
                reachable: true,
                moves: Some(d),
            });
        }
        for v in (0..n).filter(|&v| state & (1 << v) != 0) {
            for &u in g.neighbors(v) {
                if state & (1 << u) == 0 {
                    let next = state & !(1 << v) | (1 << u);
                    dist.entry(next).or_insert_with(|| {
                        queue.push_back(next);
                        d + 1
                    });
                }
            }
        }
    }
    Ok(OracleResult {
        reachable: false,
        moves: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub step_count: usize,
    pub total_length: f64,
    pub per_robot_length: BTreeMap<String, f64>,
    /// Share of steps that are simultaneous.
    pub simultaneous_fraction: f64,
}

pub fn plan_stats(plan: &Plan) -> PlanStats {
    let mut per: BTreeMap<RobotId, f64> = BTreeMap::new();
    let mut simultaneous = 0;
    for step in &plan.steps {
        if matches!(step, Step::Simultaneous { .. }) {
            simultaneous += 1;
        }
        for rm in step.motions() {
            *per.entry(rm.robot).or_default() += rm.motion.length();
        }
    }
    PlanStats {
        step_count: plan.len(),
        total_length: per.values().sum(),
        per_robot_length: per.into_iter().map(|(r, l)| (r.to_string(), l)).collect(),
        simultaneous_fraction: if plan.is_empty() {
            0.0
        } else {
            simultaneous as f64 / plan.len() as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Polygon, Workspace};
    use crate::plan::RobotMotion;
    use crate::scenario::ColorGroup;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn square(colors: Vec<ColorGroup>) -> Scenario {
        let ws = Workspace::open(Polygon::rect(0.0, 0.0, 10.0, 10.0).unwrap());
        Scenario::new("t", ws, colors).unwrap()
    }

    fn single(c: usize, i: usize, a: Point, b: Point) -> Step {
        Step::Single {
            robot: RobotId::new(c, i),
            motion: LinearMotion::new(a, b),
        }
    }

    #[test]
    fn empty_plan_passes_when_start_is_target() {
        let s = square(vec![ColorGroup {
            radius: 1.0,
            starts: vec![p(2.0, 2.0)],
            targets: vec![p(2.0, 2.0)],
        }]);
        assert!(verify_plan(&s, &Plan::default(), DEFAULT_EPS).passed);
    }

    #[test]
    fn teleport_is_a_discontinuity() {
        let s = square(vec![ColorGroup {
            radius: 1.0,
            starts: vec![p(2.0, 2.0)],
            targets: vec![p(8.0, 8.0)],
        }]);
        let plan = Plan::new(vec![
            single(0, 0, p(2.0, 2.0), p(5.0, 5.0)),
            single(0, 0, p(6.0, 5.0), p(8.0, 8.0)),
        ]);
        let r = verify_plan(&s, &plan, DEFAULT_EPS);
        assert_eq!(r.codes(), vec![ViolationCode::Discontinuity]);
        assert_eq!(r.violations[0].step, Some(1));
    }

    #[test]
    fn corrupted_plans_get_the_right_code() {
        let s = square(vec![
            ColorGroup {
                radius: 1.0,
                starts: vec![p(2.0, 2.0)],
                targets: vec![p(8.0, 2.0)],
            },
            ColorGroup {
                radius: 1.0,
                starts: vec![p(2.0, 8.0)],
                targets: vec![p(8.0, 8.0)],
            },
        ]);
        let good = Plan::new(vec![
            single(0, 0, p(2.0, 2.0), p(8.0, 2.0)),
            single(1, 0, p(2.0, 8.0), p(8.0, 8.0)),
        ]);
        assert!(verify_plan(&s, &good, DEFAULT_EPS).passed);

        let swapped = Plan::new(vec![
            single(0, 0, p(2.0, 2.0), p(8.0, 8.0)),
            single(1, 0, p(2.0, 8.0), p(8.0, 2.0)),
        ]);
        let r = verify_plan(&s, &swapped, DEFAULT_EPS);
        assert!(r.codes().contains(&ViolationCode::TargetMismatch));

        let reordered = Plan::new(good.steps.iter().rev().cloned().collect::<Vec<_>>());
        let mut r = verify_plan(&s, &Plan::new(vec![good.steps[0].clone(), good.steps[0].clone()]), DEFAULT_EPS);
        assert!(r.codes().contains(&ViolationCode::Discontinuity));
        r = verify_plan(&s, &reordered, DEFAULT_EPS);
        assert!(r.passed, "independent moves commute");

        let wall = Plan::new(vec![single(0, 0, p(2.0, 2.0), p(2.0, 0.5))]);
        assert!(verify_plan(&s, &wall, DEFAULT_EPS).codes().contains(&ViolationCode::ObstacleCollision));

        let start = Plan::new(vec![single(0, 0, p(3.0, 2.0), p(8.0, 2.0))]);
        assert!(verify_plan(&s, &start, DEFAULT_EPS).codes().contains(&ViolationCode::StartMismatch));

        let unknown = Plan::new(vec![single(0, 3, p(2.0, 2.0), p(8.0, 2.0))]);
        assert!(verify_plan(&s, &unknown, DEFAULT_EPS).codes().contains(&ViolationCode::UnknownRobot));

        let twice = Plan::new(vec![Step::Simultaneous {
            motions: vec![
                RobotMotion {
                    robot: RobotId::new(0, 0),
                    motion: LinearMotion::new(p(2.0, 2.0), p(5.0, 2.0)),
                },
                RobotMotion {
                    robot: RobotId::new(0, 0),
                    motion: LinearMotion::new(p(2.0, 2.0), p(5.0, 2.0)),
                },
            ],
        }]);
        assert!(verify_plan(&s, &twice, DEFAULT_EPS).codes().contains(&ViolationCode::DuplicateRobot));
    }

    #[test]
    fn shaved_clearance_is_a_robot_collision() {
        let s = square(vec![ColorGroup {
            radius: 1.0,
            starts: vec![p(2.0, 5.0), p(5.0, 2.0)],
            targets: vec![p(8.0, 5.0), p(5.0, 2.0)],
        }]);
        // The mover passes 2.0 - 1e-9 from the holding robot's centre.
        let shaved = Plan::new(vec![
            single(0, 0, p(2.0, 5.0), p(5.0, 4.0 - 1e-9)),
            single(0, 0, p(5.0, 4.0 - 1e-9), p(8.0, 5.0)),
        ]);
        assert!(verify_plan(&s, &shaved, DEFAULT_EPS).codes().contains(&ViolationCode::RobotCollision));
        let touching = Plan::new(vec![
            single(0, 0, p(2.0, 5.0), p(5.0, 4.0)),
            single(0, 0, p(5.0, 4.0), p(8.0, 5.0)),
        ]);
        let r = verify_plan(&s, &touching, DEFAULT_EPS);
        assert!(r.passed, "{:?}", r.violations);
    }

    #[test]
    fn head_on_simultaneous_motion_collides() {
        let s = square(vec![ColorGroup {
            radius: 1.0,
            starts: vec![p(2.0, 5.0), p(8.0, 5.0)],
            targets: vec![p(8.0, 5.0), p(2.0, 5.0)],
        }]);
        let plan = Plan::new(vec![Step::Simultaneous {
            motions: vec![
                RobotMotion {
                    robot: RobotId::new(0, 0),
                    motion: LinearMotion::new(p(2.0, 5.0), p(8.0, 5.0)),
                },
                RobotMotion {
                    robot: RobotId::new(0, 1),
                    motion: LinearMotion::new(p(8.0, 5.0), p(2.0, 5.0)),
                },
            ],
        }]);
        let r = verify_plan(&s, &plan, DEFAULT_EPS);
        assert_eq!(r.codes(), vec![ViolationCode::RobotCollision]);
    }

    #[test]
    fn oracle_examples() {
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let r = brute_force_pebble_oracle(&path, &Placement(vec![0]), &Placement(vec![2])).unwrap();
        assert_eq!(r, OracleResult { reachable: true, moves: Some(2) });
        let r = brute_force_pebble_oracle(&path, &Placement(vec![1]), &Placement(vec![1])).unwrap();
        assert_eq!(r.moves, Some(0));
        let split = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let r = brute_force_pebble_oracle(&split, &Placement(vec![0, 1]), &Placement(vec![1, 2])).unwrap();
        assert!(!r.reachable);
        let big = Graph::new(60);
        let s = Placement((0..10).collect());
        assert!(matches!(
            brute_force_pebble_oracle(&big, &s, &s),
            Err(OracleError::StateSpaceTooLarge(_))
        ));
    }

    #[test]
    fn stats_examples() {
        let zero = plan_stats(&Plan::default());
        assert_eq!((zero.step_count, zero.total_length, zero.simultaneous_fraction), (0, 0.0, 0.0));
        let unit = plan_stats(&Plan::new(vec![single(0, 0, p(0.0, 0.0), p(1.0, 0.0))]));
        assert_eq!(unit.total_length, 1.0);
        let two = plan_stats(&Plan::new(vec![
            single(0, 0, p(0.0, 0.0), p(3.0, 4.0)),
            single(0, 1, p(0.0, 0.0), p(3.0, 4.0)),
        ]));
        assert_eq!(two.total_length, 10.0);
        assert_eq!(two.per_robot_length.len(), 2);
    }
}
