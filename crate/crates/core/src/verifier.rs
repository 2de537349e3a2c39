//! Solver-independent checks of a trajectory against the mission.
//!
//! Nothing here looks at the optimization model. Dynamics are recomputed
//! step by step, obstacles and cubes are tested geometrically, and face
//! coverage is rasterized from the camera footprints.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dynamics::{AgentParams, Dynamics, DynamicsError, Trajectory};
use crate::geometry::{Cuboid, Face, FaceId};
use crate::scenario::Scenario;
use crate::sensing::SensorModel;
use crate::zoning::Zone;

/// Default raster spacing for coverage, in metres.
pub const DEFAULT_RESOLUTION: f64 = 0.5;
/// Grazing distance reported as obstacle contact.
pub const CONTACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    /// Coverage raster spacing.
    pub resolution: f64,
    /// Slack on bounds, cube membership and obstacle penetration.
    pub tolerance: f64,
    /// Largest accepted dynamics residual.
    pub dynamics_tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            tolerance: 1e-6,
            dynamics_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub t: usize,
    /// `position`, `velocity` or `force`.
    pub quantity: &'static str,
    pub axis: usize,
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstacleHit {
    /// Sample index, or the end index of the offending segment.
    pub t: usize,
    /// Index in the avoidance set.
    pub id: usize,
    pub name: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ObstacleCheck {
    pub violations: Vec<ObstacleHit>,
    /// Segments between two admissible samples that cross an interior.
    pub corner_cuts: Vec<ObstacleHit>,
    /// Samples within the contact tolerance of a face or inside by less
    /// than the penetration tolerance.
    pub contacts: Vec<ObstacleHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellVisit {
    pub cell: usize,
    pub label: String,
    pub times: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneVisitation {
    pub zone: usize,
    pub object: usize,
    pub pd: f64,
    pub cells: Vec<CellVisit>,
}

impl ZoneVisitation {
    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(|c| !c.times.is_empty())
    }

    pub fn missed(&self) -> Vec<usize> {
        self.cells.iter().filter(|c| c.times.is_empty()).map(|c| c.cell).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceCoverage {
    pub object: usize,
    pub part: usize,
    pub face: FaceId,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub dynamics_residual_max: f64,
    pub bound_violations: Vec<BoundViolation>,
    pub obstacle_violations: Vec<ObstacleHit>,
    pub corner_cut_warnings: Vec<ObstacleHit>,
    pub contact_warnings: Vec<ObstacleHit>,
    pub visitation: Vec<ZoneVisitation>,
    /// Per object, the completed zone with the highest detection
    /// probability, if any.
    pub selected_zones: BTreeMap<usize, usize>,
    /// Smallest detection probability over objects; zero if some object
    /// has no completed zone, one when there are no objects.
    pub selected_zone_pd: f64,
    pub goal_reached_at: Option<usize>,
    pub face_coverage_fraction: Vec<FaceCoverage>,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Largest `|x_t - step(x_{t-1}, u_{t-1})|` component.
pub fn verify_dynamics(traj: &Trajectory, params: &AgentParams) -> Result<f64, DynamicsError> {
    if traj.states.len() != traj.controls.len() + 1 {
        return Err(DynamicsError::Length {
            states: traj.states.len(),
            controls: traj.controls.len(),
        });
    }
    let dynamics = Dynamics::new(params.clone())?;
    let mut worst: f64 = 0.0;
    for (t, u) in traj.controls.iter().enumerate() {
        let next = dynamics.step(&traj.states[t], u)?;
        worst = worst.max(next.max_abs_diff(&traj.states[t + 1]));
    }
    Ok(worst)
}

/// Workspace, speed and force limits at every step.
pub fn verify_bounds(traj: &Trajectory, workspace: &Cuboid, params: &AgentParams, tol: f64) -> Vec<BoundViolation> {
    let mut out = Vec::new();
    let mut check = |t, quantity, v: &crate::geometry::Vec3, lo: crate::geometry::Vec3, hi: crate::geometry::Vec3| {
        for d in 0..3 {
            if v[d] < lo[d] - tol || v[d] > hi[d] + tol || !v[d].is_finite() {
                out.push(BoundViolation {
                    t,
                    quantity,
                    axis: d,
                    value: v[d],
                    min: lo[d],
                    max: hi[d],
                });
            }
        }
    };
    for (t, s) in traj.states.iter().enumerate().skip(1) {
        check(t, "position", &s.position, workspace.min(), workspace.max());
        check(t, "velocity", &s.velocity, params.velocity_min, params.velocity_max);
    }
    for (t, u) in traj.controls.iter().enumerate() {
        check(t, "force", &u.force, params.force_min, params.force_max);
    }
    out
}

/// Interior penetration of samples `1..=T`, plus segment crossings between
/// samples that are themselves admissible.
pub fn verify_obstacles(traj: &Trajectory, obstacles: &[(&str, Cuboid)], tol: f64) -> ObstacleCheck {
    let mut out = ObstacleCheck::default();
    let hit = |t, id: usize| ObstacleHit {
        t,
        id,
        name: obstacles[id].0.to_string(),
    };
    for t in 1..traj.states.len() {
        let p = traj.position(t);
        for (id, (_, c)) in obstacles.iter().enumerate() {
            let depth = -c.max_side(&p);
            if depth > tol {
                out.violations.push(hit(t, id));
            } else if depth >= -CONTACT_TOL {
                out.contacts.push(hit(t, id));
            }
        }
    }
    for t in 1..traj.states.len() {
        let (p0, p1) = (traj.position(t - 1), traj.position(t));
        for (id, (_, c)) in obstacles.iter().enumerate() {
            if c.strictly_contains(&p0, tol) || c.strictly_contains(&p1, tol) {
                continue;
            }
            if c.segment_enters_interior(&p0, &p1, tol) {
                out.corner_cuts.push(hit(t, id));
            }
        }
    }
    out
}

/// Steps `1..=T` at which the agent is inside each interior cube of `zone`.
pub fn verify_visitation(traj: &Trajectory, zone: &Zone, zone_index: usize, tol: f64) -> ZoneVisitation {
    let cells = zone
        .cells
        .iter()
        .enumerate()
        .map(|(k, cell)| CellVisit {
            cell: k,
            label: cell.label(),
            times: (1..traj.states.len())
                .filter(|&t| cell.interior_cube.contains_within(&traj.position(t), tol))
                .collect(),
        })
        .collect();
    ZoneVisitation {
        zone: zone_index,
        object: zone.object,
        pd: zone.spec.pd,
        cells,
    }
}

/// Fraction of raster points of `face` covered by square footprints taken
/// from `positions`.
pub fn face_coverage(face: &Face, positions: &[crate::geometry::Vec3], sensor: &SensorModel, resolution: f64) -> f64 {
    assert!(resolution > 0.0, "raster resolution must be positive");
    let (l, w) = face.extent;
    let nu = ((l / resolution).ceil() as usize).max(1);
    let nv = ((w / resolution).ceil() as usize).max(1);
    let shots: Vec<(f64, f64, f64)> = positions
        .iter()
        .filter_map(|p| {
            let d = face.height_of(p);
            let r = sensor.footprint_side(d).ok()?;
            let (u, v) = face.project(p);
            Some((u, v, r / 2.0))
        })
        .collect();
    let mut covered = 0usize;
    for i in 0..nu {
        let u = (i as f64 + 0.5) * l / nu as f64;
        for j in 0..nv {
            let v = (j as f64 + 0.5) * w / nv as f64;
            if shots.iter().any(|&(su, sv, h)| (u - su).abs() <= h && (v - sv).abs() <= h) {
                covered += 1;
            }
        }
    }
    covered as f64 / (nu * nv) as f64
}

/// Coverage of every searched face of `zone`'s object from the in-cube
/// positions recorded in `visits`.
pub fn verify_coverage(
    traj: &Trajectory,
    zone: &Zone,
    visits: &ZoneVisitation,
    object: &Cuboid,
    part: usize,
    sensor: &SensorModel,
    resolution: f64,
) -> Vec<FaceCoverage> {
    let mut out = Vec::new();
    for (p, face_id) in zone.searched_faces() {
        if p != part {
            continue;
        }
        let positions: Vec<_> = zone
            .cells
            .iter()
            .zip(&visits.cells)
            .filter(|(c, _)| c.part == p && c.face.id == face_id)
            .flat_map(|(_, v)| v.times.iter().map(|&t| traj.position(t)))
            .collect();
        out.push(FaceCoverage {
            object: zone.object,
            part,
            face: face_id,
            fraction: face_coverage(&object.face(face_id), &positions, sensor, resolution),
        });
    }
    out
}

/// Earliest step in `tau..=T` with the agent inside `goal`.
pub fn verify_goal(traj: &Trajectory, goal: &Cuboid, tau: usize, tol: f64) -> Option<usize> {
    assert!(tau >= 1, "goal window starts at step 1 or later");
    (tau..traj.states.len()).find(|&t| goal.contains_within(&traj.position(t), tol))
}

/// Runs every check and aggregates the verdict.
pub fn verify(scenario: &Scenario, zones: &[Zone], traj: &Trajectory, opts: &VerifyOptions) -> VerificationReport {
    let tol = opts.tolerance;
    let mut failures = Vec::new();
    if traj.horizon() != scenario.horizon {
        failures.push(format!(
            "trajectory has {} steps, scenario horizon is {}",
            traj.horizon(),
            scenario.horizon
        ));
    }
    if traj.states[0].max_abs_diff(&scenario.start) > tol {
        failures.push("trajectory does not begin at the start state".into());
    }
    let dynamics_residual_max = match verify_dynamics(traj, &scenario.agent) {
        Ok(r) => r,
        Err(e) => {
            failures.push(format!("dynamics check failed: {e}"));
            f64::INFINITY
        }
    };
    if dynamics_residual_max.is_nan() || dynamics_residual_max > opts.dynamics_tolerance {
        failures.push(format!("dynamics residual {dynamics_residual_max:e} exceeds {:e}", opts.dynamics_tolerance));
    }
    let bound_violations = verify_bounds(traj, &scenario.workspace, &scenario.agent, tol);
    if !bound_violations.is_empty() {
        failures.push(format!("{} bound violations", bound_violations.len()));
    }
    let avoid = scenario.avoidance_set();
    let obstacles = verify_obstacles(traj, &avoid, tol);
    for h in &obstacles.violations {
        failures.push(format!("step {} inside {} (#{})", h.t, h.name, h.id));
    }

    let visitation: Vec<ZoneVisitation> = zones
        .iter()
        .enumerate()
        .map(|(i, z)| verify_visitation(traj, z, i, tol))
        .collect();
    let mut selected_zones = BTreeMap::new();
    let mut selected_zone_pd: f64 = 1.0;
    let mut face_coverage_fraction = Vec::new();
    for (o, object) in scenario.objects.iter().enumerate() {
        let best = visitation
            .iter()
            .filter(|v| v.object == o && v.is_complete())
            .max_by(|a, b| a.pd.total_cmp(&b.pd).then(b.zone.cmp(&a.zone)));
        match best {
            Some(v) => {
                selected_zones.insert(o, v.zone);
                selected_zone_pd = selected_zone_pd.min(v.pd);
                for (part, cuboid) in object.object.parts().iter().enumerate() {
                    face_coverage_fraction.extend(verify_coverage(
                        traj,
                        &zones[v.zone],
                        v,
                        cuboid,
                        part,
                        &scenario.sensor,
                        opts.resolution,
                    ));
                }
            }
            None => {
                selected_zone_pd = 0.0;
                for v in visitation.iter().filter(|v| v.object == o) {
                    let missed = v.missed();
                    failures.push(format!(
                        "object {o}: zone {} misses {} of {} cells (first: {})",
                        v.zone,
                        missed.len(),
                        v.cells.len(),
                        v.cells[missed[0]].label
                    ));
                }
            }
        }
    }
    if selected_zone_pd < scenario.detection_requirement {
        failures.push(format!(
            "detection probability {selected_zone_pd} below requirement {}",
            scenario.detection_requirement
        ));
    }
    for c in &face_coverage_fraction {
        if c.fraction < 1.0 {
            failures.push(format!(
                "object {} part {} face {} covered {:.4}",
                c.object,
                c.part,
                c.face.label(),
                c.fraction
            ));
        }
    }
    let goal_reached_at = verify_goal(traj, &scenario.goal, scenario.goal_window_start.max(1), tol);
    if goal_reached_at.is_none() {
        failures.push(format!(
            "goal not reached in steps {}..={}",
            scenario.goal_window_start,
            traj.horizon()
        ));
    }
    VerificationReport {
        dynamics_residual_max,
        bound_violations,
        obstacle_violations: obstacles.violations,
        corner_cut_warnings: obstacles.corner_cuts,
        contact_warnings: obstacles.contacts,
        visitation,
        selected_zones,
        selected_zone_pd,
        goal_reached_at,
        face_coverage_fraction,
        pass: failures.is_empty(),
        failures,
    }
}
