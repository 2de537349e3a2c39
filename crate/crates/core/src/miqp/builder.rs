//! Compiles a scenario and its zones into the search-planning MIQP.

use std::collections::BTreeMap;

use thiserror::Error;

use super::layout::{CompletionRole, VariableLayout};
use super::model::{MiqpModel, Sense};
use crate::dynamics::{Dynamics, DynamicsError};
use crate::geometry::{Cuboid, Plane, Vec3, FACES};
use crate::scenario::Scenario;
use crate::zoning::Zone;

/// Margin added to every big-M constant.
pub const BIG_M_MARGIN: f64 = 1.0;

/// Slack on reachable-box overlap tests.
const REACH_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("no zone of object {object} meets the detection requirement {q} (best {best})")]
    NoZoneMeetsQ { object: usize, q: f64, best: f64 },
    #[error("start position lies inside avoidance cuboid {0}")]
    StartInObstacle(usize),
    #[error("horizon must be at least one step")]
    EmptyHorizon,
    #[error("goal window start {tau} outside 1..={horizon}")]
    Window { tau: usize, horizon: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Knobs used by the rolling-horizon planner on top of a plain build.
#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Omit the goal rows (the objective still pulls towards the goal).
    pub skip_goal: bool,
    /// Control applied just before `u_0`; adds its fluctuation term.
    pub previous_control: Option<Vec3>,
}

/// Smallest constant that makes `a'x - b <= M` hold everywhere in the
/// workspace, plus the margin.
pub fn big_m(plane: &Plane, workspace: &Cuboid) -> f64 {
    workspace
        .corners()
        .iter()
        .map(|c| plane.side(c).abs())
        .fold(0.0, f64::max)
        + BIG_M_MARGIN
}

pub fn build(scenario: &Scenario, zones: &[Zone]) -> Result<MiqpModel, BuildError> {
    build_with(scenario, zones, &BuildOptions::default())
}

pub fn build_with(scenario: &Scenario, zones: &[Zone], opts: &BuildOptions) -> Result<MiqpModel, BuildError> {
    let t_len = scenario.horizon;
    if t_len == 0 {
        return Err(BuildError::EmptyHorizon);
    }
    let tau = scenario.goal_window_start;
    if tau == 0 || tau > t_len {
        return Err(BuildError::Window { tau, horizon: t_len });
    }
    let dynamics = Dynamics::new(scenario.agent.clone())?;
    let avoid: Vec<Cuboid> = scenario.avoidance_set().into_iter().map(|(_, c)| c).collect();
    for (k, c) in avoid.iter().enumerate() {
        if c.strictly_contains(&scenario.start.position, 1e-9) {
            return Err(BuildError::StartInObstacle(k));
        }
    }
    let q = scenario.detection_requirement;
    let mut by_object: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, z) in zones.iter().enumerate() {
        by_object.entry(z.object).or_default().push(i);
    }
    for (&object, members) in &by_object {
        let best = members.iter().map(|&i| zones[i].spec.pd).fold(f64::NEG_INFINITY, f64::max);
        if best < q {
            return Err(BuildError::NoZoneMeetsQ { object, q, best });
        }
    }

    let mut layout = VariableLayout::new(
        t_len,
        zones.iter().map(Zone::len).collect(),
        zones.iter().map(|z| z.object).collect(),
        avoid.len(),
    );
    let mut m = MiqpModel::new(if scenario.name.is_empty() { "search" } else { &scenario.name });
    let ws = &scenario.workspace;
    let p = &scenario.agent;

    // Continuous blocks: states then controls.
    for t in 1..=t_len {
        for d in 0..3 {
            m.add_continuous(layout.name(layout.state(t, d)), ws.min()[d], ws.max()[d]);
        }
        for d in 0..3 {
            m.add_continuous(layout.name(layout.state(t, d + 3)), p.velocity_min[d], p.velocity_max[d]);
        }
    }
    for t in 0..t_len {
        for d in 0..3 {
            m.add_continuous(layout.name(layout.control(t, d)), p.force_min[d], p.force_max[d]);
        }
    }
    // Binary blocks in layout order. Branching tiers: zone selection, then
    // cube and goal occupancy, then avoidance, face indicators last.
    for j in layout.binary_range() {
        let name = layout.name(j);
        let tier = match name.split('_').next() {
            Some("zh") => 0,
            Some("zt") | Some("yt") => 1,
            Some("e") => 2,
            _ => 3,
        };
        let k = m.add_binary(name, tier);
        debug_assert_eq!(k, j);
    }
    debug_assert_eq!(m.num_variables(), layout.len());

    add_dynamics(&mut m, &layout, &dynamics, scenario);
    add_search(&mut m, &mut layout, zones, &by_object, q, ws);
    add_avoidance(&mut m, &mut layout, &avoid, ws);
    if opts.skip_goal {
        for t in 1..=t_len {
            for l in 0..FACES {
                m.set_bounds(layout.y(t, l), 0.0, 0.0);
            }
            m.set_bounds(layout.y_tilde(t), 0.0, 0.0);
        }
    } else {
        add_goal(&mut m, &mut layout, &scenario.goal, tau, ws);
    }
    add_objective(&mut m, &layout, scenario, opts);
    fix_unreachable(&mut m, &layout, &dynamics, scenario, zones, opts.skip_goal);
    m.set_layout(layout);
    Ok(m)
}

/// Fixes occupancy binaries to zero at steps where their cube lies outside
/// the reachable box of the start state.
fn fix_unreachable(
    m: &mut MiqpModel,
    layout: &VariableLayout,
    dynamics: &Dynamics,
    scenario: &Scenario,
    zones: &[Zone],
    skip_goal: bool,
) {
    let reach = dynamics.reachable_boxes(&scenario.start, layout.horizon);
    let hits = |t: usize, cube: &Cuboid| match reach[t - 1] {
        Some((lo, hi)) => (0..3).all(|d| cube.min()[d] <= hi[d] + REACH_TOL && cube.max()[d] >= lo[d] - REACH_TOL),
        None => false,
    };
    for t in 1..=layout.horizon {
        for (i, zone) in zones.iter().enumerate() {
            for (c, cell) in zone.cells.iter().enumerate() {
                if !hits(t, &cell.interior_cube) {
                    m.set_bounds(layout.z_tilde(t, c, i), 0.0, 0.0);
                }
            }
        }
        if !skip_goal && !hits(t, &scenario.goal) {
            m.set_bounds(layout.y_tilde(t), 0.0, 0.0);
        }
    }
}

fn add_dynamics(m: &mut MiqpModel, layout: &VariableLayout, dynamics: &Dynamics, scenario: &Scenario) {
    let a = dynamics.transition();
    let b = dynamics.input_matrix();
    let offset = -(b * dynamics.params().hover_force());
    let x0 = scenario.start.to_vector();
    for t in 1..=layout.horizon {
        for d in 0..6 {
            let mut terms = vec![(layout.state(t, d), 1.0)];
            let mut rhs = offset[d];
            for k in 0..6 {
                let c = a[(d, k)];
                if c == 0.0 {
                    continue;
                }
                if t == 1 {
                    rhs += c * x0[k];
                } else {
                    terms.push((layout.state(t - 1, k), -c));
                }
            }
            for k in 0..3 {
                let c = b[(d, k)];
                if c != 0.0 {
                    terms.push((layout.control(t - 1, k), -c));
                }
            }
            m.add_constraint(format!("dyn_{t}_{d}"), terms, Sense::Eq, rhs);
        }
    }
}

/// `a' p_t + M z <= b + M` for an axis-aligned plane; returns the row index.
fn indicator_row(m: &mut MiqpModel, name: String, layout: &VariableLayout, t: usize, plane: &Plane, z: usize, big: f64) -> usize {
    let mut terms = position_terms(layout, t, plane.normal(), 1.0);
    terms.push((z, big));
    m.add_constraint(name, terms, Sense::Le, plane.offset() + big)
}

fn position_terms(layout: &VariableLayout, t: usize, normal: &Vec3, sign: f64) -> Vec<(usize, f64)> {
    (0..3)
        .filter(|&d| normal[d] != 0.0)
        .map(|d| (layout.position(t, d), sign * normal[d]))
        .collect()
}

fn add_search(
    m: &mut MiqpModel,
    layout: &mut VariableLayout,
    zones: &[Zone],
    by_object: &BTreeMap<usize, Vec<usize>>,
    q: f64,
    ws: &Cuboid,
) {
    let t_len = layout.horizon;
    let mut zone_rows: Vec<Vec<usize>> = vec![Vec::new(); zones.len()];
    for (i, zone) in zones.iter().enumerate() {
        let zh = layout.z_hat(i);
        for (c, cell) in zone.cells.iter().enumerate() {
            let planes = cell.interior_cube.planes();
            for t in 1..=t_len {
                for (l, plane) in planes.iter().enumerate() {
                    let z = layout.z(t, l, c, i);
                    let row = indicator_row(m, format!("cube_{t}_{l}_{c}_{i}"), layout, t, plane, z, big_m(plane, ws));
                    layout.push_role(0, z, CompletionRole::SetIfSatisfied { row });
                    layout.push_indicator(layout.z_tilde(t, c, i), z, row);
                }
                let zt = layout.z_tilde(t, c, i);
                let mut terms = vec![(zt, FACES as f64)];
                terms.extend((0..FACES).map(|l| (layout.z(t, l, c, i), -1.0)));
                let row = m.add_constraint(format!("inside_{t}_{c}_{i}"), terms, Sense::Le, 0.0);
                layout.push_role(1, zt, CompletionRole::SetIfSatisfied { row });
            }
            let mut terms: Vec<(usize, f64)> = (1..=t_len).map(|t| (layout.z_tilde(t, c, i), -1.0)).collect();
            terms.push((zh, 1.0));
            zone_rows[i].push(m.add_constraint(format!("visit_{c}_{i}"), terms, Sense::Le, 0.0));
        }
        let mut terms: Vec<(usize, f64)> = Vec::with_capacity(t_len * zone.len() + 1);
        for t in 1..=t_len {
            for c in 0..zone.len() {
                terms.push((layout.z_tilde(t, c, i), -1.0));
            }
        }
        terms.push((zh, zone.len() as f64));
        zone_rows[i].push(m.add_constraint(format!("zone_{i}"), terms, Sense::Le, 0.0));
    }
    for (&object, members) in by_object {
        let terms = members.iter().map(|&i| (layout.z_hat(i), -zones[i].spec.pd)).collect();
        let need = m.add_constraint(format!("detect_{object}"), terms, Sense::Le, -q);
        let terms = members.iter().map(|&i| (layout.z_hat(i), 1.0)).collect();
        let one = m.add_constraint(format!("select_{object}"), terms, Sense::Le, 1.0);
        for &i in members {
            let zh = layout.z_hat(i);
            let mut rows = zone_rows[i].clone();
            rows.extend([need, one]);
            layout.set_select_rows(zh, rows);
            layout.push_role(
                2,
                zh,
                CompletionRole::Select {
                    group: object,
                    priority: zones[i].spec.pd,
                },
            );
        }
    }
}

fn add_avoidance(m: &mut MiqpModel, layout: &mut VariableLayout, avoid: &[Cuboid], ws: &Cuboid) {
    for t in 1..=layout.horizon {
        for (k, cuboid) in avoid.iter().enumerate() {
            for (l, plane) in cuboid.planes().iter().enumerate() {
                let e = layout.eps(t, k, l);
                let big = big_m(plane, ws);
                let mut terms = position_terms(layout, t, plane.normal(), -1.0);
                terms.push((e, -big));
                let row = m.add_constraint(format!("avoid_{t}_{k}_{l}"), terms, Sense::Le, -plane.offset());
                layout.push_role(0, e, CompletionRole::SetIfNeeded { row });
            }
            let terms = (0..FACES).map(|l| (layout.eps(t, k, l), 1.0)).collect();
            m.add_constraint(format!("outside_{t}_{k}"), terms, Sense::Le, (FACES - 1) as f64);
        }
    }
}

fn add_goal(m: &mut MiqpModel, layout: &mut VariableLayout, goal: &Cuboid, tau: usize, ws: &Cuboid) {
    for t in 1..=layout.horizon {
        for (l, plane) in goal.planes().iter().enumerate() {
            let y = layout.y(t, l);
            let row = indicator_row(m, format!("goal_{t}_{l}"), layout, t, plane, y, big_m(plane, ws));
            layout.push_role(0, y, CompletionRole::SetIfSatisfied { row });
            layout.push_indicator(layout.y_tilde(t), y, row);
        }
        let yt = layout.y_tilde(t);
        let mut terms = vec![(yt, FACES as f64)];
        terms.extend((0..FACES).map(|l| (layout.y(t, l), -1.0)));
        let row = m.add_constraint(format!("in_goal_{t}"), terms, Sense::Le, 0.0);
        layout.push_role(1, yt, CompletionRole::SetIfSatisfied { row });
    }
    let terms = (tau..=layout.horizon).map(|t| (layout.y_tilde(t), -1.0)).collect();
    m.add_constraint("reach_goal", terms, Sense::Le, -1.0);
}

fn add_objective(m: &mut MiqpModel, layout: &VariableLayout, scenario: &Scenario, opts: &BuildOptions) {
    let w1 = scenario.weight_time;
    let w2 = scenario.weight_energy;
    let g = scenario.goal.center();
    if w1 != 0.0 {
        for t in 1..=layout.horizon {
            for d in 0..3 {
                let j = layout.position(t, d);
                m.add_quadratic(j, j, 2.0 * w1);
                m.add_linear(j, -2.0 * w1 * g[d]);
                m.add_constant(w1 * g[d] * g[d]);
            }
        }
    }
    if w2 != 0.0 {
        for t in 1..layout.horizon {
            for d in 0..3 {
                let (a, b) = (layout.control(t, d), layout.control(t - 1, d));
                m.add_quadratic(a, a, 2.0 * w2);
                m.add_quadratic(b, b, 2.0 * w2);
                m.add_quadratic(a, b, -2.0 * w2);
            }
        }
        if let Some(prev) = opts.previous_control {
            for d in 0..3 {
                let j = layout.control(0, d);
                m.add_quadratic(j, j, 2.0 * w2);
                m.add_linear(j, -2.0 * w2 * prev[d]);
                m.add_constant(w2 * prev[d] * prev[d]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::dynamics::{ControlInput, Trajectory};
    use crate::miqp::count_binaries;
    use crate::scenario::{bundled, load_scenario_with, Overrides};

    fn scenario(o: Overrides) -> Scenario {
        load_scenario_with(bundled("zone_selection").unwrap(), &o).unwrap()
    }

    fn horizon(t: usize) -> Scenario {
        scenario(Overrides {
            horizon: Some(t),
            ..Default::default()
        })
    }

    /// Full variable vector for a trajectory with every binary at zero.
    fn point_of(m: &MiqpModel, traj: &Trajectory) -> Vec<f64> {
        let layout = m.layout().unwrap();
        let mut x = vec![0.0; m.num_variables()];
        for t in 1..=layout.horizon {
            let s = traj.states[t].to_vector();
            for d in 0..6 {
                x[layout.state(t, d)] = s[d];
            }
            for d in 0..3 {
                x[layout.control(t - 1, d)] = traj.controls[t - 1].force[d];
            }
        }
        x
    }

    #[test]
    fn big_m_examples() {
        let ws = Cuboid::from_bounds(Vec3::zeros(), Vec3::repeat(100.0)).unwrap();
        let plane = Plane::new(Vec3::x(), 5.0).unwrap();
        assert_eq!(big_m(&plane, &ws), 96.0);
        let centered = Plane::new(Vec3::y(), 50.0).unwrap();
        assert_eq!(big_m(&centered, &ws), 51.0);
    }

    #[test]
    fn variable_blocks_match_counts() {
        let s = horizon(5);
        let zones = s.build_zones().unwrap();
        let sizes: Vec<usize> = zones.iter().map(Zone::len).collect();
        assert_eq!(sizes, vec![9, 4, 1]);
        let m = build(&s, &zones).unwrap();
        let counts = count_binaries(5, &sizes, s.avoidance_set().len());
        assert_eq!(m.layout().unwrap().counts(), counts);
        assert_eq!(m.num_binaries(), counts.total());
        assert_eq!(m.num_variables(), counts.total() + 9 * 5);
    }

    #[test]
    fn one_step_single_cell_zone_has_eight_search_binaries() {
        let counts = count_binaries(1, &[1], 0);
        assert_eq!(counts.search(), 8);
        assert_eq!(count_binaries(4, &[], 2).search(), 0);
    }

    #[test]
    fn hover_satisfies_dynamics_rows() {
        let s = horizon(4);
        let m = build(&s, &s.build_zones().unwrap()).unwrap();
        let dynamics = Dynamics::new(s.agent.clone()).unwrap();
        let hover = ControlInput::new(s.agent.hover_force());
        let traj = Trajectory::simulate(&dynamics, s.start, vec![hover; 4]).unwrap();
        let x = point_of(&m, &traj);
        for row in m.constraints().iter().filter(|r| r.name.starts_with("dyn_")) {
            assert!(row.violation(&x) < 1e-9, "{}", row.name);
        }
    }

    #[test]
    fn zero_time_weight_leaves_states_out_of_objective() {
        let s = scenario(Overrides {
            horizon: Some(3),
            weight_time: Some(0.0),
            ..Default::default()
        });
        let m = build(&s, &s.build_zones().unwrap()).unwrap();
        let layout = m.layout().unwrap();
        let states: Vec<usize> = (1..=3).flat_map(|t| (0..6).map(move |d| (t, d))).map(|(t, d)| layout.state(t, d)).collect();
        let obj = m.objective();
        assert!(states.iter().all(|&j| obj.linear[j] == 0.0));
        assert!(obj.quadratic.keys().all(|(i, j)| !states.contains(i) && !states.contains(j)));
        assert_eq!(obj.constant, 0.0);
    }

    #[test]
    fn unmet_requirement_and_bad_window_are_errors() {
        let s = horizon(3);
        let zones = s.build_zones().unwrap();
        let mut strict = s.clone();
        strict.detection_requirement = 0.99;
        assert!(matches!(build(&strict, &zones), Err(BuildError::NoZoneMeetsQ { object: 0, .. })));
        let mut late = s.clone();
        late.goal_window_start = 4;
        assert_eq!(build(&late, &zones).unwrap_err(), BuildError::Window { tau: 4, horizon: 3 });
        let mut empty = s;
        empty.horizon = 0;
        assert_eq!(build(&empty, &zones).unwrap_err(), BuildError::EmptyHorizon);
    }

    #[test]
    fn indicator_rows_are_vacuous_when_off() {
        let s = horizon(2);
        let m = build(&s, &s.build_zones().unwrap()).unwrap();
        let vars = m.variables();
        for row in m.constraints() {
            let kind = row.name.split('_').next().unwrap();
            if !matches!(kind, "cube" | "goal" | "avoid") {
                continue;
            }
            // Off means zero for occupancy faces and one for avoidance.
            let off = if kind == "avoid" { 1.0 } else { 0.0 };
            for corner in s.workspace.corners() {
                let mut x = vec![0.0; m.num_variables()];
                for &(j, _) in &row.terms {
                    if vars[j].binary {
                        x[j] = off;
                    } else {
                        let d = vars[j].name.rsplit('_').next().unwrap().parse::<usize>().unwrap();
                        x[j] = corner[d];
                    }
                }
                assert!(row.violation(&x) == 0.0, "{} at {corner:?}", row.name);
            }
        }
    }

    #[test]
    fn reachability_fixing_keeps_every_reachable_cube() {
        let s = horizon(6);
        let zones = s.build_zones().unwrap();
        let m = build(&s, &zones).unwrap();
        let layout = m.layout().unwrap();
        let dynamics = Dynamics::new(s.agent.clone()).unwrap();
        let upper = m.upper_bounds();
        assert!(layout.binary_range().any(|j| upper[j] == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (lo, hi) = (s.agent.force_min, s.agent.force_max);
        for _ in 0..200 {
            let controls = (0..6)
                .map(|_| ControlInput::new(Vec3::from_fn(|d, _| rng.random_range(lo[d]..=hi[d]))))
                .collect();
            let traj = Trajectory::simulate(&dynamics, s.start, controls).unwrap();
            for t in 1..=6 {
                let p = traj.position(t);
                for (i, zone) in zones.iter().enumerate() {
                    for (c, cell) in zone.cells.iter().enumerate() {
                        if cell.interior_cube.contains(&p) {
                            assert_eq!(upper[layout.z_tilde(t, c, i)], 1.0);
                        }
                    }
                }
                if s.goal.contains(&p) {
                    assert_eq!(upper[layout.y_tilde(t)], 1.0);
                }
            }
        }
    }
}
