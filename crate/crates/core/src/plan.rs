//! Robot-level plans: a time-ordered list of steps, each either one robot
//! moving while the rest hold, or every listed robot moving on a shared clock.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::{LinearMotion, Point};

/// Robot `index` of color `color`; index `i` starts at the color's `i`-th start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RobotId {
    pub color: usize,
    pub index: usize,
}

impl RobotId {
    pub fn new(color: usize, index: usize) -> Self {
        RobotId { color, index }
    }
}

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.color, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotMotion {
    pub robot: RobotId,
    pub motion: LinearMotion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    /// One robot moves; every other robot holds its position.
    Single { robot: RobotId, motion: LinearMotion },
    /// The listed robots move together over one θ ∈ [0, 1] clock.
    Simultaneous { motions: Vec<RobotMotion> },
}

impl Step {
    pub fn motions(&self) -> Vec<RobotMotion> {
        match self {
            Step::Single { robot, motion } => vec![RobotMotion {
                robot: *robot,
                motion: *motion,
            }],
            Step::Simultaneous { motions } => motions.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<Step>,
}

impl Plan {
    pub fn new(steps: Vec<Step>) -> Self {
        Plan { steps }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// Positions after every step, starting from `starts` (one list per color).
    pub fn final_positions(&self, starts: &[Vec<Point>]) -> Vec<Vec<Point>> {
        let mut pos = starts.to_vec();
        for step in &self.steps {
            for rm in step.motions() {
                if let Some(p) = pos
                    .get_mut(rm.robot.color)
                    .and_then(|c| c.get_mut(rm.robot.index))
                {
                    *p = rm.motion.to;
                }
            }
        }
        pos
    }

    /// The reverse plan: steps in reverse order with every motion reversed.
    pub fn reversed(&self) -> Plan {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| match s {
                Step::Single { robot, motion } => Step::Single {
                    robot: *robot,
                    motion: motion.reversed(),
                },
                Step::Simultaneous { motions } => Step::Simultaneous {
                    motions: motions
                        .iter()
                        .map(|rm| RobotMotion {
                            robot: rm.robot,
                            motion: rm.motion.reversed(),
                        })
                        .collect(),
                },
            })
            .collect();
        Plan { steps }
    }
}
