//! Scenario and plan documents.
//!
//! Scenario schema:
//!
//! ```json
//! {
//!   "name": "optional",
//!   "workspace": {"boundary": [[x, y], ...], "obstacles": [[[x, y], ...], ...]},
//!   "colors": [{"radius": r, "starts": [[x, y], ...], "targets": [[x, y], ...]}]
//! }
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{disc_free, GeometryError, Point, Polygon, Workspace};
use crate::graphgen::ColorSpec;
use crate::plan::{Plan, Step};

/// Machine-readable reason for rejecting a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonCode {
    InvalidPolygon,
    ObstacleOutsideBoundary,
    ObstaclesOverlap,
    NoColors,
    NonPositiveRadius,
    EmptyColor,
    CountMismatch,
    NonFiniteCoordinate,
    StartNotFree,
    TargetNotFree,
    StartsCollide,
    TargetsCollide,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario ({code:?}) at {location}: {message}")]
    Validation {
        code: ReasonCode,
        location: String,
        message: String,
    },
}

impl ScenarioError {
    fn invalid(code: ReasonCode, location: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            code,
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn code(&self) -> Option<ReasonCode> {
        match self {
            ScenarioError::Validation { code, .. } => Some(*code),
            ScenarioError::Parse { .. } => None,
        }
    }
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// One color group: interchangeable robots of a common radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorGroup {
    pub radius: f64,
    pub starts: Vec<Point>,
    pub targets: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub workspace: Workspace,
    pub colors: Vec<ColorGroup>,
}

#[derive(Serialize, Deserialize)]
struct WorkspaceDoc {
    boundary: Vec<Point>,
    #[serde(default)]
    obstacles: Vec<Vec<Point>>,
}

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    #[serde(default)]
    name: String,
    workspace: WorkspaceDoc,
    colors: Vec<ColorGroup>,
}

/// Which end of the problem a placement is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementRole {
    Start,
    Target,
}

impl Scenario {
    /// Validates every scenario invariant.
    pub fn new(
        name: impl Into<String>,
        workspace: Workspace,
        colors: Vec<ColorGroup>,
    ) -> Result<Self, ScenarioError> {
        use ReasonCode::*;
        if colors.is_empty() {
            return Err(ScenarioError::invalid(NoColors, "colors", "at least one color is required"));
        }
        for (c, g) in colors.iter().enumerate() {
            let loc = format!("colors[{c}]");
            if !(g.radius.is_finite() && g.radius > 0.0) {
                return Err(ScenarioError::invalid(NonPositiveRadius, loc, format!("radius {}", g.radius)));
            }
            if g.starts.is_empty() {
                return Err(ScenarioError::invalid(EmptyColor, loc, "no robots"));
            }
            if g.starts.len() != g.targets.len() {
                return Err(ScenarioError::invalid(
                    CountMismatch,
                    loc,
                    format!("{} starts but {} targets", g.starts.len(), g.targets.len()),
                ));
            }
            if let Some(p) = g.starts.iter().chain(&g.targets).find(|p| !p.is_finite()) {
                return Err(ScenarioError::invalid(NonFiniteCoordinate, loc, format!("{p:?}")));
            }
        }
        let radii: Vec<f64> = colors.iter().map(|g| g.radius).collect();
        for role in [PlacementRole::Start, PlacementRole::Target] {
            let pts: Vec<Vec<Point>> = colors
                .iter()
                .map(|g| match role {
                    PlacementRole::Start => g.starts.clone(),
                    PlacementRole::Target => g.targets.clone(),
                })
                .collect();
            check_placement(&workspace, &radii, &pts, role)?;
        }
        Ok(Scenario {
            name: name.into(),
            workspace,
            colors,
        })
    }

    pub fn color_specs(&self) -> Vec<ColorSpec> {
        self.colors
            .iter()
            .map(|g| ColorSpec {
                radius: g.radius,
                robot_count: g.starts.len(),
            })
            .collect()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.colors.iter().map(|g| g.radius).collect()
    }

    pub fn starts(&self) -> Vec<Vec<Point>> {
        self.colors.iter().map(|g| g.starts.clone()).collect()
    }

    pub fn targets(&self) -> Vec<Vec<Point>> {
        self.colors.iter().map(|g| g.targets.clone()).collect()
    }

    pub fn robot_count(&self) -> usize {
        self.colors.iter().map(|g| g.starts.len()).sum()
    }

    pub fn to_json(&self) -> String {
        let doc = ScenarioDoc {
            name: self.name.clone(),
            workspace: WorkspaceDoc {
                boundary: self.workspace.boundary().vertices().to_vec(),
                obstacles: self
                    .workspace
                    .obstacles()
                    .iter()
                    .map(|o| o.vertices().to_vec())
                    .collect(),
            },
            colors: self.colors.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("scenario serializes")
    }
}

/// Checks that `points` (one list per color) is a collision-free placement:
/// every disc free of the walls and every two discs at least the sum of their
/// radii apart.
pub fn check_placement(
    w: &Workspace,
    radii: &[f64],
    points: &[Vec<Point>],
    role: PlacementRole,
) -> Result<(), ScenarioError> {
    let (not_free, collide, field) = match role {
        PlacementRole::Start => (ReasonCode::StartNotFree, ReasonCode::StartsCollide, "starts"),
        PlacementRole::Target => (ReasonCode::TargetNotFree, ReasonCode::TargetsCollide, "targets"),
    };
    let all: Vec<(usize, usize, Point)> = points
        .iter()
        .enumerate()
        .flat_map(|(c, ps)| ps.iter().enumerate().map(move |(i, &p)| (c, i, p)))
        .collect();
    for &(c, i, p) in &all {
        if !disc_free(p, radii[c], w) {
            return Err(ScenarioError::invalid(
                not_free,
                format!("colors[{c}].{field}[{i}]"),
                format!("disc at {p:?} with radius {} is not in free space", radii[c]),
            ));
        }
    }
    for (k, &(c1, i1, p1)) in all.iter().enumerate() {
        for &(c2, i2, p2) in &all[k + 1..] {
            if p1.dist(p2) < radii[c1] + radii[c2] {
                return Err(ScenarioError::invalid(
                    collide,
                    format!("colors[{c1}].{field}[{i1}] and colors[{c2}].{field}[{i2}]"),
                    format!("discs at {p1:?} and {p2:?} overlap"),
                ));
            }
        }
    }
    Ok(())
}

fn polygon(points: Vec<Point>, location: String) -> Result<Polygon, ScenarioError> {
    Polygon::new(points)
        .map_err(|e| ScenarioError::invalid(ReasonCode::InvalidPolygon, location, e.to_string()))
}

/// Parses and validates a scenario document.
pub fn load_scenario(bytes: &[u8]) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_slice(bytes)?;
    let boundary = polygon(doc.workspace.boundary, "workspace.boundary".into())?;
    let obstacles = doc
        .workspace
        .obstacles
        .into_iter()
        .enumerate()
        .map(|(i, o)| polygon(o, format!("workspace.obstacles[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let workspace = Workspace::new(boundary, obstacles).map_err(|e| {
        let (code, loc) = match &e {
            GeometryError::ObstacleOutsideBoundary(i) => {
                (ReasonCode::ObstacleOutsideBoundary, format!("workspace.obstacles[{i}]"))
            }
            GeometryError::ObstaclesOverlap(i, j) => (
                ReasonCode::ObstaclesOverlap,
                format!("workspace.obstacles[{i}] and workspace.obstacles[{j}]"),
            ),
            _ => (ReasonCode::InvalidPolygon, "workspace".to_string()),
        };
        ScenarioError::invalid(code, loc, e.to_string())
    })?;
    Scenario::new(doc.name, workspace, doc.colors)
}

/// A plan as written to disk, with the parameters that produced it and
/// per-robot path lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub scenario: String,
    pub params: serde_json::Value,
    pub steps: Vec<Step>,
    /// Total path length per robot, indexed `[color][index]`.
    pub path_lengths: Vec<Vec<f64>>,
    pub step_count: usize,
}

impl PlanFile {
    /// Wraps a plan; path lengths are sized from `robots_per_color`.
    pub fn new(
        scenario: impl Into<String>,
        params: serde_json::Value,
        plan: &Plan,
        robots_per_color: &[usize],
    ) -> Self {
        let mut path_lengths: Vec<Vec<f64>> = robots_per_color.iter().map(|&m| vec![0.0; m]).collect();
        for step in &plan.steps {
            for rm in step.motions() {
                if let Some(l) = path_lengths
                    .get_mut(rm.robot.color)
                    .and_then(|c| c.get_mut(rm.robot.index))
                {
                    *l += rm.motion.length();
                }
            }
        }
        PlanFile {
            scenario: scenario.into(),
            params,
            steps: plan.steps.clone(),
            path_lengths,
            step_count: plan.steps.len(),
        }
    }

    pub fn plan(&self) -> Plan {
        Plan::new(self.steps.clone())
    }
}

pub fn save_plan(plan: &PlanFile) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(plan).expect("plan serializes");
    out.push(b'\n');
    out
}

pub fn load_plan(bytes: &[u8]) -> Result<PlanFile, ScenarioError> {
    Ok(serde_json::from_slice(bytes)?)
}
