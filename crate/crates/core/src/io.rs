//! Plan artifacts: trajectory tables, JSON documents and plot series.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{ControlInput, DynamicsError, State, Trajectory};
use crate::geometry::{Cuboid, FaceId, Vec3};
use crate::miqp::{BinaryCounts, MiqpModel};
use crate::scenario::Scenario;
use crate::solver::MipSolution;
use crate::zoning::Zone;

/// Column order of trajectory tables.
pub const TRAJECTORY_COLUMNS: [&str; 10] = ["t", "p_x", "p_y", "p_z", "v_x", "v_y", "v_z", "u_x", "u_y", "u_z"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("trajectory table: {0}")]
    Table(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Writes `x_0..x_T` with `u_t` on row `t`; the control cells of the last
/// row are empty.
pub fn write_trajectory<W: Write>(traj: &Trajectory, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for (t, s) in traj.states.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(s.position.iter().chain(s.velocity.iter()).map(|v| v.to_string()));
        match traj.controls.get(t) {
            Some(u) => row.extend(u.force.iter().map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), 3)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_to_string(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory(traj, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Reads a table written by [`write_trajectory`].
pub fn read_trajectory<R: Read>(input: R) -> Result<Trajectory, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TRAJECTORY_COLUMNS {
        return Err(IoError::Table(format!("expected columns {TRAJECTORY_COLUMNS:?}, found {header:?}")));
    }
    let mut states = Vec::new();
    let mut controls = Vec::new();
    let mut pending_last = false;
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        if pending_last {
            return Err(IoError::Table(format!("row {k} follows a row without controls")));
        }
        let t: usize = rec[0]
            .parse()
            .map_err(|_| IoError::Table(format!("row {k}: bad step index {:?}", &rec[0])))?;
        if t != k {
            return Err(IoError::Table(format!("row {k} has step index {t}")));
        }
        let num = |i: usize| -> Result<f64, IoError> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| IoError::Table(format!("row {k}, column {}: {:?}", TRAJECTORY_COLUMNS[i], &rec[i])))
        };
        states.push(State::new(
            Vec3::new(num(1)?, num(2)?, num(3)?),
            Vec3::new(num(4)?, num(5)?, num(6)?),
        ));
        if (7..10).all(|i| rec[i].trim().is_empty()) {
            pending_last = true;
        } else {
            controls.push(ControlInput::new(Vec3::new(num(7)?, num(8)?, num(9)?)));
        }
    }
    if !pending_last {
        return Err(IoError::Table("last row must leave the control columns empty".into()));
    }
    Ok(Trajectory::new(states, controls)?)
}

pub fn read_trajectory_file(path: &Path) -> Result<Trajectory, IoError> {
    read_trajectory(std::fs::File::open(path)?)
}

pub fn write_trajectory_file(traj: &Trajectory, path: &Path) -> Result<(), IoError> {
    write_trajectory(traj, std::fs::File::create(path)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl From<&Cuboid> for BoxRecord {
    fn from(c: &Cuboid) -> Self {
        Self {
            min: c.min().into(),
            max: c.max().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub label: String,
    pub part: usize,
    pub face: FaceId,
    pub grid_index: (usize, usize),
    /// `[u extent, v extent, depth]`.
    pub sigma: [f64; 3],
    pub cell: BoxRecord,
    pub cube: BoxRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneRecord {
    pub zone: usize,
    pub object: usize,
    pub band: usize,
    pub pd: f64,
    pub d_near: f64,
    pub depth: f64,
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedBoxes {
    pub name: String,
    pub parts: Vec<BoxRecord>,
}

/// Everything needed to draw the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDocument {
    pub workspace: BoxRecord,
    pub goal: BoxRecord,
    pub start: [f64; 3],
    pub objects: Vec<NamedBoxes>,
    pub obstacles: Vec<NamedBoxes>,
    pub zones: Vec<ZoneRecord>,
}

pub fn zone_records(zones: &[Zone]) -> Vec<ZoneRecord> {
    zones
        .iter()
        .enumerate()
        .map(|(i, z)| ZoneRecord {
            zone: i,
            object: z.object,
            band: z.spec.index,
            pd: z.spec.pd,
            d_near: z.spec.d_near,
            depth: z.spec.depth,
            cells: z
                .cells
                .iter()
                .map(|c| CellRecord {
                    label: c.label(),
                    part: c.part,
                    face: c.face.id,
                    grid_index: c.grid_index,
                    sigma: c.sigma(),
                    cell: (&c.cell_cuboid).into(),
                    cube: (&c.interior_cube).into(),
                })
                .collect(),
        })
        .collect()
}

pub fn scene_document(scenario: &Scenario, zones: &[Zone]) -> SceneDocument {
    let boxes = |name: &str, parts: &[Cuboid]| NamedBoxes {
        name: name.to_string(),
        parts: parts.iter().map(BoxRecord::from).collect(),
    };
    SceneDocument {
        workspace: (&scenario.workspace).into(),
        goal: (&scenario.goal).into(),
        start: scenario.start.position.into(),
        objects: scenario
            .objects
            .iter()
            .map(|o| boxes(&o.object.name, o.object.parts()))
            .collect(),
        obstacles: scenario.obstacles.iter().map(|o| boxes(&o.name, o.parts())).collect(),
        zones: zone_records(zones),
    }
}

/// Summary of a solve written next to the trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct PlanMetadata<'a> {
    pub scenario: &'a str,
    pub horizon: usize,
    pub detection_requirement: f64,
    pub weight_time: f64,
    pub weight_energy: f64,
    #[serde(flatten)]
    pub solution: &'a MipSolution,
    /// Model zone indices with their selection binary at one.
    pub selected_zones: Vec<usize>,
    pub selected_zone_pd: Vec<f64>,
    pub binaries: BinaryCounts,
    pub rows: usize,
    pub root_bound: Option<f64>,
    pub numerical_failures: u64,
}

impl<'a> PlanMetadata<'a> {
    pub fn new(scenario: &'a Scenario, zones: &[Zone], model: &MiqpModel, solution: &'a MipSolution) -> Self {
        let selected_zones = solution.selected_zones(model);
        Self {
            scenario: &scenario.name,
            horizon: scenario.horizon,
            detection_requirement: scenario.detection_requirement,
            weight_time: scenario.weight_time,
            weight_energy: scenario.weight_energy,
            solution,
            selected_zone_pd: selected_zones.iter().map(|&i| zones[i].spec.pd).collect(),
            selected_zones,
            binaries: model.layout().map(|l| l.counts()).unwrap_or_default(),
            rows: model.constraints().len(),
            root_bound: solution.stats.root_bound.filter(|b| b.is_finite()),
            numerical_failures: solution.stats.numerical_failures,
        }
    }
}

/// Penalty terms of a trajectory, recomputed from the states and controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Penalties {
    /// `sum_t |p_t - g|^2` over `t = 1..=T`.
    pub path_error: f64,
    /// `sum_t |u_t - u_{t-1}|^2` over `t = 1..T`.
    pub input_fluctuation: f64,
}

pub fn penalties(traj: &Trajectory, goal_center: &Vec3) -> Penalties {
    let path_error = (1..=traj.horizon())
        .map(|t| (traj.position(t) - goal_center).norm_squared())
        .sum();
    let input_fluctuation = traj
        .controls
        .windows(2)
        .map(|w| (w[1].force - w[0].force).norm_squared())
        .sum();
    Penalties {
        path_error,
        input_fluctuation,
    }
}

/// Writes `position.csv`, `velocity.csv` and `control.csv` (columns `t`,
/// `x`, `y`, `z`, `norm`) into `dir`. Returns the paths written.
pub fn write_plot_data(traj: &Trajectory, dir: &Path) -> Result<Vec<std::path::PathBuf>, IoError> {
    std::fs::create_dir_all(dir)?;
    let series: [(&str, Vec<(usize, Vec3)>); 3] = [
        ("position", traj.states.iter().enumerate().map(|(t, s)| (t, s.position)).collect()),
        ("velocity", traj.states.iter().enumerate().map(|(t, s)| (t, s.velocity)).collect()),
        ("control", traj.controls.iter().enumerate().map(|(t, u)| (t, u.force)).collect()),
    ];
    let mut written = Vec::new();
    for (name, rows) in series {
        let path = dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["t", "x", "y", "z", "norm"])?;
        for (t, v) in rows {
            w.write_record([
                t.to_string(),
                v.x.to_string(),
                v.y.to_string(),
                v.z.to_string(),
                v.norm().to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
