//! Mission scenarios: the TOML schema, its validation, and the validated
//! in-memory form consumed by the model builder.
//!
//! ```toml
//! schema_version = 1
//! name = "example"
//!
//! [workspace]
//! min = [-100.0, -100.0, 0.0]
//! max = [160.0, 160.0, 100.0]
//!
//! [agent]
//! mass = 3.35
//! air_resistance = 0.2
//! dt = 1.0
//! force_min = [-35.0, -35.0, -10.0]
//! force_max = [35.0, 35.0, 35.0]
//! velocity_min = [-15.0, -15.0, -15.0]
//! velocity_max = [15.0, 15.0, 15.0]
//! start_position = [-60.0, -60.0, 20.0]
//!
//! [sensor]
//! fov_deg = 60.0
//! d_min = 17.0
//! d_max = 93.0
//!
//! [mission]
//! horizon = 90
//! weight_time = 1.0
//! weight_energy = 1.0
//! detection_requirement = 0.9
//!
//! [goal]
//! center = [140.0, 140.0, 20.0]
//! dims = [10.0, 10.0, 10.0]
//!
//! [[objects]]
//! name = "building"
//! faces = ["+x", "-x", "+y", "-y"]
//! parts = [{ center = [30.0, 30.0, 30.0], dims = [60.0, 60.0, 60.0] }]
//!
//! [zones]
//! breakpoints = [17.0, 27.0, 53.0, 93.0]
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{AgentParams, DynamicsError, State, DEFAULT_GRAVITY};
use crate::geometry::{CompoundObject, Cuboid, FaceId, ObjectKind, Vec3};
use crate::sensing::SensorModel;
use crate::solver::SolveOptions;
use crate::zoning::{self, Zone, ZoneSpec, DEFAULT_CUBE_FRACTION};

pub const SCHEMA_VERSION: u32 = 1;

/// Stable, machine-readable validation error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorCode {
    Parse,
    Schema,
    Version,
    Geometry,
    Agent,
    Sensor,
    StartOutsideWorkspace,
    StartInObstacle,
    GoalOutsideWorkspace,
    Window,
    Requirement,
    NoZoneMeetsQ,
    Zones,
    ZoneOutsideWorkspace,
    ZoneObstacleOverlap,
    SolverOptions,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Parse => "E_PARSE",
            ErrorCode::Schema => "E_SCHEMA",
            ErrorCode::Version => "E_VERSION",
            ErrorCode::Geometry => "E_GEOMETRY",
            ErrorCode::Agent => "E_AGENT",
            ErrorCode::Sensor => "E_SENSOR",
            ErrorCode::StartOutsideWorkspace => "E_START_OUTSIDE_WORKSPACE",
            ErrorCode::StartInObstacle => "E_START_IN_OBSTACLE",
            ErrorCode::GoalOutsideWorkspace => "E_GOAL_OUTSIDE_WORKSPACE",
            ErrorCode::Window => "E_WINDOW",
            ErrorCode::Requirement => "E_REQUIREMENT",
            ErrorCode::NoZoneMeetsQ => "E_NO_ZONE_MEETS_Q",
            ErrorCode::Zones => "E_ZONES",
            ErrorCode::ZoneOutsideWorkspace => "E_ZONE_OUTSIDE_WORKSPACE",
            ErrorCode::ZoneObstacleOverlap => "E_ZONE_OBSTACLE_OVERLAP",
            ErrorCode::SolverOptions => "E_SOLVER_OPTIONS",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{code}: {message}")]
pub struct ScenarioError {
    pub code: ErrorCode,
    /// Dotted field path, when the error is tied to one field.
    pub path: Option<String>,
    pub message: String,
}

impl ScenarioError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            path: None,
            message: message.into(),
        }
    }

    fn at(code: ErrorCode, path: &str, message: impl Into<String>) -> Self {
        Self {
            code,
            path: Some(path.to_string()),
            message: format!("{path}: {}", message.into()),
        }
    }
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub workspace: BoundsFile,
    pub agent: AgentFile,
    pub sensor: SensorFile,
    pub mission: MissionFile,
    pub goal: BoxFile,
    #[serde(default)]
    pub objects: Vec<ObjectFile>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleFile>,
    pub zones: ZonesFile,
    #[serde(default)]
    pub solver: SolveOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsFile {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxFile {
    pub center: [f64; 3],
    pub dims: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFile {
    pub mass: f64,
    pub air_resistance: f64,
    pub dt: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub force_min: [f64; 3],
    pub force_max: [f64; 3],
    pub velocity_min: [f64; 3],
    pub velocity_max: [f64; 3],
    pub start_position: [f64; 3],
    #[serde(default)]
    pub start_velocity: [f64; 3],
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorFile {
    pub fov_deg: f64,
    pub d_min: f64,
    pub d_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionFile {
    pub horizon: usize,
    /// First step at which the goal may satisfy the mission; defaults to the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_window_start: Option<usize>,
    pub weight_time: f64,
    pub weight_energy: f64,
    pub detection_requirement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectFile {
    pub name: String,
    pub faces: Vec<FaceId>,
    pub parts: Vec<BoxFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleFile {
    pub name: String,
    pub parts: Vec<BoxFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZonesFile {
    pub breakpoints: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pd: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_side: Option<Vec<f64>>,
    #[serde(default = "default_cube_fraction")]
    pub cube_fraction: f64,
}

fn default_cube_fraction() -> f64 {
    DEFAULT_CUBE_FRACTION
}

/// Command-line style overrides applied before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub detection_requirement: Option<f64>,
    pub weight_time: Option<f64>,
    pub weight_energy: Option<f64>,
    pub horizon: Option<usize>,
    pub goal_window_start: Option<usize>,
    pub node_limit: Option<u64>,
    pub time_limit_s: Option<f64>,
    pub mode: Option<crate::solver::SolveMode>,
    pub workers: Option<usize>,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| ScenarioError::new(ErrorCode::Parse, e.to_string().trim_end()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.message().to_string();
            ScenarioError::at(ErrorCode::Schema, &path, message)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario files always serialize")
    }

    pub fn apply(&mut self, o: &Overrides) {
        let m = &mut self.mission;
        if let Some(v) = o.detection_requirement {
            m.detection_requirement = v;
        }
        if let Some(v) = o.weight_time {
            m.weight_time = v;
        }
        if let Some(v) = o.weight_energy {
            m.weight_energy = v;
        }
        if let Some(v) = o.horizon {
            m.horizon = v;
            if o.goal_window_start.is_none() {
                if let Some(tau) = m.goal_window_start {
                    m.goal_window_start = Some(tau.min(v));
                }
            }
        }
        if let Some(v) = o.goal_window_start {
            m.goal_window_start = Some(v);
        }
        let s = &mut self.solver;
        if let Some(v) = o.node_limit {
            s.node_limit = Some(v);
        }
        if let Some(v) = o.time_limit_s {
            s.time_limit_s = Some(v);
        }
        if let Some(v) = o.mode {
            s.mode = v;
        }
        if let Some(v) = o.workers {
            s.workers = v;
        }
    }

    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        use ErrorCode as C;
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::at(
                C::Version,
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let workspace = Cuboid::from_bounds(v3(self.workspace.min), v3(self.workspace.max))
            .map_err(|e| ScenarioError::at(C::Geometry, "workspace", e.to_string()))?;

        let a = &self.agent;
        let agent = AgentParams {
            mass: a.mass,
            air_resistance: a.air_resistance,
            dt: a.dt,
            gravity: a.gravity,
            force_min: v3(a.force_min),
            force_max: v3(a.force_max),
            velocity_min: v3(a.velocity_min),
            velocity_max: v3(a.velocity_max),
        };
        agent
            .validate()
            .map_err(|e: DynamicsError| ScenarioError::at(C::Agent, "agent", e.to_string()))?;
        let start = State::new(v3(a.start_position), v3(a.start_velocity));
        if !start.is_finite() {
            return Err(ScenarioError::at(C::Agent, "agent.start_position", "non-finite start state"));
        }
        if !workspace.contains(&start.position) {
            return Err(ScenarioError::at(
                C::StartOutsideWorkspace,
                "agent.start_position",
                "start position lies outside the workspace",
            ));
        }
        let v = &start.velocity;
        if (0..3).any(|k| v[k] < agent.velocity_min[k] || v[k] > agent.velocity_max[k]) {
            return Err(ScenarioError::at(
                C::Agent,
                "agent.start_velocity",
                "start velocity violates the velocity bounds",
            ));
        }

        let sensor = SensorModel::from_degrees(self.sensor.fov_deg, self.sensor.d_min, self.sensor.d_max)
            .map_err(|e| ScenarioError::at(C::Sensor, "sensor", e.to_string()))?;

        let m = &self.mission;
        if m.horizon == 0 {
            return Err(ScenarioError::at(C::Schema, "mission.horizon", "horizon must be at least 1"));
        }
        let tau = m.goal_window_start.unwrap_or(m.horizon);
        if tau == 0 {
            return Err(ScenarioError::at(
                C::Schema,
                "mission.goal_window_start",
                "goal window start must be at least 1",
            ));
        }
        if tau > m.horizon {
            return Err(ScenarioError::at(
                C::Window,
                "mission.goal_window_start",
                format!("goal window start {tau} exceeds the horizon {}", m.horizon),
            ));
        }
        for (what, w) in [("weight_time", m.weight_time), ("weight_energy", m.weight_energy)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(ScenarioError::at(
                    C::Schema,
                    &format!("mission.{what}"),
                    "weights must be finite and non-negative",
                ));
            }
        }
        let q = m.detection_requirement;
        let q_ok = if self.objects.is_empty() {
            (0.0..=1.0).contains(&q)
        } else {
            q > 0.0 && q <= 1.0
        };
        if !q_ok {
            return Err(ScenarioError::at(
                C::Requirement,
                "mission.detection_requirement",
                format!("detection requirement must lie in (0, 1], got {q}"),
            ));
        }

        let goal = box_at(&self.goal, "goal")?;
        if !workspace.contains_cuboid(&goal) {
            return Err(ScenarioError::at(
                C::GoalOutsideWorkspace,
                "goal",
                "goal region must lie inside the workspace",
            ));
        }

        let mut objects = Vec::with_capacity(self.objects.len());
        for (i, o) in self.objects.iter().enumerate() {
            let path = format!("objects[{i}]");
            let parts = parts_at(&o.parts, &path)?;
            let object = CompoundObject::new(o.name.clone(), ObjectKind::ObjectOfInterest, parts)
                .ok_or_else(|| ScenarioError::at(C::Geometry, &path, "object needs at least one part"))?;
            if o.faces.is_empty() {
                return Err(ScenarioError::at(C::Zones, &format!("{path}.faces"), "no faces to search"));
            }
            if o.faces.contains(&FaceId::NegZ) {
                return Err(ScenarioError::at(
                    C::Zones,
                    &format!("{path}.faces"),
                    "the ground face cannot be searched",
                ));
            }
            let mut faces = o.faces.clone();
            faces.sort_by_key(|f| f.index());
            faces.dedup();
            objects.push(SearchObject { object, faces });
        }
        let mut obstacles = Vec::with_capacity(self.obstacles.len());
        for (i, o) in self.obstacles.iter().enumerate() {
            let path = format!("obstacles[{i}]");
            let parts = parts_at(&o.parts, &path)?;
            obstacles.push(
                CompoundObject::new(o.name.clone(), ObjectKind::Obstacle, parts)
                    .ok_or_else(|| ScenarioError::at(C::Geometry, &path, "obstacle needs at least one part"))?,
            );
        }
        for (i, o) in obstacles.iter().chain(objects.iter().map(|s| &s.object)).enumerate() {
            if o.parts().iter().any(|p| p.strictly_contains(&start.position, 1e-9)) {
                return Err(ScenarioError::at(
                    C::StartInObstacle,
                    "agent.start_position",
                    format!("start position lies inside `{}` (avoidance set member {i})", o.name),
                ));
            }
        }

        let zones = self.zone_specs(&sensor)?;
        if !objects.is_empty() {
            let best = zones.iter().map(|z| z.pd).fold(f64::NEG_INFINITY, f64::max);
            if best < q {
                return Err(ScenarioError::at(
                    C::NoZoneMeetsQ,
                    "mission.detection_requirement",
                    format!("no zone meets Q = {q}; the best zone detection probability is {best}"),
                ));
            }
        }
        let z = &self.zones;
        if !(z.cube_fraction > 0.0 && z.cube_fraction <= 1.0) {
            return Err(ScenarioError::at(
                C::Zones,
                "zones.cube_fraction",
                "cube fraction must lie in (0, 1]",
            ));
        }
        self.solver
            .validate()
            .map_err(|e| ScenarioError::at(C::SolverOptions, "solver", e.to_string()))?;

        Ok(Scenario {
            name: self.name.clone(),
            workspace,
            agent,
            sensor,
            start,
            horizon: m.horizon,
            goal,
            goal_window_start: tau,
            weight_time: m.weight_time,
            weight_energy: m.weight_energy,
            detection_requirement: q,
            objects,
            obstacles,
            zone_specs: zones,
            cube_fraction: z.cube_fraction,
            solver: self.solver.clone(),
        })
    }

    fn zone_specs(&self, sensor: &SensorModel) -> Result<Vec<ZoneSpec>, ScenarioError> {
        let z = &self.zones;
        let mut specs = zoning::quantize_detection(sensor, &z.breakpoints)
            .map_err(|e| ScenarioError::at(ErrorCode::Zones, "zones.breakpoints", e.to_string()))?;
        if let Some(pd) = &z.pd {
            if pd.len() != specs.len() {
                return Err(ScenarioError::at(
                    ErrorCode::Zones,
                    "zones.pd",
                    format!("expected {} values, got {}", specs.len(), pd.len()),
                ));
            }
            for (s, &p) in specs.iter_mut().zip(pd) {
                s.pd = p;
            }
        }
        if let Some(side) = &z.cell_side {
            if side.len() != specs.len() {
                return Err(ScenarioError::at(
                    ErrorCode::Zones,
                    "zones.cell_side",
                    format!("expected {} values, got {}", specs.len(), side.len()),
                ));
            }
            for (s, &c) in specs.iter_mut().zip(side) {
                s.cell_side_override = Some(c);
            }
        }
        for s in &specs {
            s.validate()
                .map_err(|e| ScenarioError::at(ErrorCode::Zones, "zones", e.to_string()))?;
        }
        Ok(specs)
    }
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn box_at(b: &BoxFile, path: &str) -> Result<Cuboid, ScenarioError> {
    Cuboid::new(v3(b.center), v3(b.dims)).map_err(|e| ScenarioError::at(ErrorCode::Geometry, path, e.to_string()))
}

fn parts_at(parts: &[BoxFile], path: &str) -> Result<Vec<Cuboid>, ScenarioError> {
    parts
        .iter()
        .enumerate()
        .map(|(j, b)| box_at(b, &format!("{path}.parts[{j}]")))
        .collect()
}

fn box_file(c: &Cuboid) -> BoxFile {
    BoxFile {
        center: [c.center().x, c.center().y, c.center().z],
        dims: [c.dims().x, c.dims().y, c.dims().z],
    }
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

// ---------------------------------------------------------------------------
// Validated form

#[derive(Debug, Clone, PartialEq)]
pub struct SearchObject {
    pub object: CompoundObject,
    pub faces: Vec<FaceId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub workspace: Cuboid,
    pub agent: AgentParams,
    pub sensor: SensorModel,
    pub start: State,
    pub horizon: usize,
    pub goal: Cuboid,
    /// First step of the goal window `[tau, T]`.
    pub goal_window_start: usize,
    pub weight_time: f64,
    pub weight_energy: f64,
    pub detection_requirement: f64,
    pub objects: Vec<SearchObject>,
    pub obstacles: Vec<CompoundObject>,
    pub zone_specs: Vec<ZoneSpec>,
    pub cube_fraction: f64,
    pub solver: SolveOptions,
}

impl Scenario {
    /// Cuboids the agent must stay out of: obstacle parts, then object parts.
    pub fn avoidance_set(&self) -> Vec<(&str, Cuboid)> {
        self.obstacles
            .iter()
            .chain(self.objects.iter().map(|o| &o.object))
            .flat_map(|o| o.parts().iter().map(move |p| (o.name.as_str(), p.clone())))
            .collect()
    }

    /// Zones for every object, in object order then zone order.
    pub fn build_zones(&self) -> Result<Vec<Zone>, ScenarioError> {
        let mut out = Vec::new();
        for (i, o) in self.objects.iter().enumerate() {
            let zones = zoning::build_object_zones(
                &o.object,
                i,
                &o.faces,
                &self.zone_specs,
                &self.sensor,
                self.cube_fraction,
            )
            .map_err(|e| ScenarioError::at(ErrorCode::Zones, &format!("objects[{i}]"), e.to_string()))?;
            for z in &zones {
                for (c, cell) in z.cells.iter().enumerate() {
                    if !self.workspace.contains_cuboid(&cell.interior_cube) {
                        return Err(ScenarioError::new(
                            ErrorCode::ZoneOutsideWorkspace,
                            format!(
                                "interior cube of cell {c} ({}) in zone {} of `{}` leaves the workspace",
                                cell.label(),
                                z.spec.index,
                                o.object.name
                            ),
                        ));
                    }
                    for obs in &self.obstacles {
                        if obs.parts().iter().any(|p| p.interiors_overlap(&cell.cell_cuboid)) {
                            return Err(ScenarioError::new(
                                ErrorCode::ZoneObstacleOverlap,
                                format!(
                                    "cell {c} ({}) in zone {} of `{}` overlaps obstacle `{}`",
                                    cell.label(),
                                    z.spec.index,
                                    o.object.name,
                                    obs.name
                                ),
                            ));
                        }
                    }
                }
            }
            out.extend(zones);
        }
        Ok(out)
    }

    /// Serializable form of this scenario.
    pub fn to_file(&self) -> ScenarioFile {
        let a = &self.agent;
        let has_override = self.zone_specs.iter().all(|s| s.cell_side_override.is_some());
        let mut breakpoints: Vec<f64> = self.zone_specs.iter().map(|s| s.d_near).collect();
        if let Some(last) = self.zone_specs.last() {
            breakpoints.push(last.d_far());
        }
        ScenarioFile {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            workspace: BoundsFile {
                min: arr(&self.workspace.min()),
                max: arr(&self.workspace.max()),
            },
            agent: AgentFile {
                mass: a.mass,
                air_resistance: a.air_resistance,
                dt: a.dt,
                gravity: a.gravity,
                force_min: arr(&a.force_min),
                force_max: arr(&a.force_max),
                velocity_min: arr(&a.velocity_min),
                velocity_max: arr(&a.velocity_max),
                start_position: arr(&self.start.position),
                start_velocity: arr(&self.start.velocity),
            },
            sensor: SensorFile {
                fov_deg: self.sensor.fov_degrees(),
                d_min: self.sensor.d_min,
                d_max: self.sensor.d_max,
            },
            mission: MissionFile {
                horizon: self.horizon,
                goal_window_start: Some(self.goal_window_start),
                weight_time: self.weight_time,
                weight_energy: self.weight_energy,
                detection_requirement: self.detection_requirement,
            },
            goal: box_file(&self.goal),
            objects: self
                .objects
                .iter()
                .map(|o| ObjectFile {
                    name: o.object.name.clone(),
                    faces: o.faces.clone(),
                    parts: o.object.parts().iter().map(box_file).collect(),
                })
                .collect(),
            obstacles: self
                .obstacles
                .iter()
                .map(|o| ObstacleFile {
                    name: o.name.clone(),
                    parts: o.parts().iter().map(box_file).collect(),
                })
                .collect(),
            zones: ZonesFile {
                breakpoints,
                pd: Some(self.zone_specs.iter().map(|s| s.pd).collect()),
                cell_side: has_override
                    .then(|| self.zone_specs.iter().filter_map(|s| s.cell_side_override).collect()),
                cube_fraction: self.cube_fraction,
            },
            solver: self.solver.clone(),
        }
    }
}

pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    ScenarioFile::from_toml(text)?.validate()
}

pub fn load_scenario_with(text: &str, overrides: &Overrides) -> Result<Scenario, ScenarioError> {
    let mut file = ScenarioFile::from_toml(text)?;
    file.apply(overrides);
    file.validate()
}

/// Scenario files shipped with the crate, by name.
pub const BUNDLED: [(&str, &str); 4] = [
    ("building_60", include_str!("../scenarios/building_60.toml")),
    ("zone_selection", include_str!("../scenarios/zone_selection.toml")),
    ("weights", include_str!("../scenarios/weights.toml")),
    ("obstacle", include_str!("../scenarios/obstacle.toml")),
];

/// Text of a bundled scenario.
pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1
name = "unit"

[workspace]
min = [-100.0, -100.0, 0.0]
max = [160.0, 160.0, 100.0]

[agent]
mass = 3.35
air_resistance = 0.2
dt = 1.0
force_min = [-35.0, -35.0, -10.0]
force_max = [35.0, 35.0, 35.0]
velocity_min = [-15.0, -15.0, -15.0]
velocity_max = [15.0, 15.0, 15.0]
start_position = [-60.0, -60.0, 20.0]

[sensor]
fov_deg = 60.0
d_min = 17.0
d_max = 93.0

[mission]
horizon = 90
weight_time = 1.0
weight_energy = 1.0
detection_requirement = 0.9

[goal]
center = [140.0, 140.0, 20.0]
dims = [10.0, 10.0, 10.0]

[[objects]]
name = "building"
faces = ["+x", "-x", "+y", "-y"]
parts = [{ center = [30.0, 30.0, 30.0], dims = [60.0, 60.0, 60.0] }]

[zones]
breakpoints = [17.0, 27.0, 53.0, 93.0]
pd = [0.95, 0.75, 0.25]
cell_side = [20.0, 30.0, 60.0]
"#;

    fn with(find: &str, replace: &str) -> String {
        assert!(BASE.contains(find), "{find}");
        BASE.replacen(find, replace, 1)
    }

    #[test]
    fn bundled_scenarios_load() {
        for (name, text) in BUNDLED {
            let s = load_scenario(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, name);
            s.build_zones().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        let building = load_scenario(bundled("building_60").unwrap()).unwrap();
        assert_eq!(building.horizon, 90);
        assert_eq!(building.detection_requirement, 0.9);
        assert_eq!(building.objects[0].object.parts()[0].dims(), &Vec3::new(60.0, 60.0, 60.0));
        assert!(bundled("nope").is_none());
    }

    #[test]
    fn base_loads() {
        let s = load_scenario(BASE).unwrap();
        assert_eq!(s.horizon, 90);
        assert_eq!(s.goal_window_start, 90);
        assert_eq!(s.sensor.fov_angle, 60f64.to_radians());
        let zones = s.build_zones().unwrap();
        let lens: Vec<_> = zones.iter().map(|z| z.len()).collect();
        assert_eq!(lens, vec![36, 16, 4]);
    }

    #[test]
    fn unmet_requirement_has_code() {
        let e = load_scenario(&with("detection_requirement = 0.9", "detection_requirement = 0.99")).unwrap_err();
        assert_eq!(e.code, ErrorCode::NoZoneMeetsQ);
        assert_eq!(e.code.as_str(), "E_NO_ZONE_MEETS_Q");
    }

    #[test]
    fn zero_window_start_is_schema_error() {
        let e = load_scenario(&with("horizon = 90", "horizon = 90\ngoal_window_start = 0")).unwrap_err();
        assert_eq!(e.code, ErrorCode::Schema);
        assert_eq!(e.path.as_deref(), Some("mission.goal_window_start"));
    }

    #[test]
    fn late_window_start_has_code() {
        let e = load_scenario(&with("horizon = 90", "horizon = 90\ngoal_window_start = 91")).unwrap_err();
        assert_eq!(e.code, ErrorCode::Window);
    }

    #[test]
    fn wrong_type_reports_path() {
        let e = load_scenario(&with("mass = 3.35", "mass = \"heavy\"")).unwrap_err();
        assert_eq!(e.code, ErrorCode::Schema);
        assert_eq!(e.path.as_deref(), Some("agent.mass"));
    }

    #[test]
    fn unknown_field_rejected() {
        let e = load_scenario(&with("mass = 3.35", "mass = 3.35\ncolour = 1")).unwrap_err();
        assert_eq!(e.code, ErrorCode::Schema);
    }

    #[test]
    fn start_inside_object_rejected() {
        let e = load_scenario(&with("start_position = [-60.0, -60.0, 20.0]", "start_position = [30.0, 30.0, 20.0]"))
            .unwrap_err();
        assert_eq!(e.code, ErrorCode::StartInObstacle);
    }

    #[test]
    fn malformed_text_is_parse_error() {
        assert_eq!(load_scenario("schema_version = ").unwrap_err().code, ErrorCode::Parse);
    }

    #[test]
    fn overrides_apply_before_validation() {
        let o = Overrides {
            detection_requirement: Some(0.7),
            horizon: Some(40),
            ..Default::default()
        };
        let s = load_scenario_with(BASE, &o).unwrap();
        assert_eq!(s.detection_requirement, 0.7);
        assert_eq!(s.horizon, 40);
        assert_eq!(s.goal_window_start, 40);
    }

    #[test]
    fn file_round_trip() {
        let s = load_scenario(BASE).unwrap();
        let text = s.to_file().to_toml();
        let back = load_scenario(&text).unwrap();
        assert_eq!(back, s);
    }
}
