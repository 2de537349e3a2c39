//! Discrete-time point-mass dynamics with gravity compensation and linear
//! air resistance.
//!
//! The state is `[position, velocity]` and the transition is
//!
//! ```text
//! position' = position + dt * velocity
//! velocity' = (1 - eta) * velocity + (dt / m) * (u - u_g),   u_g = [0, 0, m g]
//! ```
//!
//! [`Dynamics::step`] evaluates this component-wise and is the simulator used
//! by the verifier. [`Dynamics::closed_form_state`] evaluates the unrolled
//! matrix form through powers of the cached transition matrix and serves as
//! an independent check.

use nalgebra::{Matrix6, Matrix6x3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;

pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("mass must be positive, got {0}")]
    Mass(f64),
    #[error("sampling interval must be positive, got {0}")]
    Interval(f64),
    #[error("air resistance must lie in [0, 1), got {0}")]
    AirResistance(f64),
    #[error("{what} bounds must satisfy min < max on every axis")]
    Bounds { what: &'static str },
    #[error("hover force [0, 0, {hover}] lies outside the z force bounds [{lo}, {hi}]")]
    HoverInfeasible { hover: f64, lo: f64, hi: f64 },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("time index {t} outside 1..={len}")]
    TimeIndex { t: usize, len: usize },
    #[error("control sequence is empty")]
    EmptyControls,
    #[error("trajectory has {states} states for {controls} controls; expected one more state than controls")]
    Length { states: usize, controls: usize },
}

/// Physical and actuation parameters of the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub mass: f64,
    pub air_resistance: f64,
    pub dt: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub force_min: Vec3,
    pub force_max: Vec3,
    pub velocity_min: Vec3,
    pub velocity_max: Vec3,
}

fn default_gravity() -> f64 {
    DEFAULT_GRAVITY
}

impl AgentParams {
    /// Quadrotor parameters used throughout the evaluation scenarios.
    pub fn reference() -> Self {
        Self {
            mass: 3.35,
            air_resistance: 0.2,
            dt: 1.0,
            gravity: DEFAULT_GRAVITY,
            force_min: Vec3::new(-35.0, -35.0, -10.0),
            force_max: Vec3::new(35.0, 35.0, 35.0),
            velocity_min: Vec3::new(-15.0, -15.0, -15.0),
            velocity_max: Vec3::new(15.0, 15.0, 15.0),
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(DynamicsError::Mass(self.mass));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(DynamicsError::Interval(self.dt));
        }
        if !(0.0..1.0).contains(&self.air_resistance) {
            return Err(DynamicsError::AirResistance(self.air_resistance));
        }
        if !self.gravity.is_finite() {
            return Err(DynamicsError::NonFinite("gravity"));
        }
        let ordered = |lo: &Vec3, hi: &Vec3| (0..3).all(|k| lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]);
        if !ordered(&self.force_min, &self.force_max) {
            return Err(DynamicsError::Bounds { what: "force" });
        }
        if !ordered(&self.velocity_min, &self.velocity_max) {
            return Err(DynamicsError::Bounds { what: "velocity" });
        }
        let hover = self.hover_force().z;
        if hover < self.force_min.z || hover > self.force_max.z {
            return Err(DynamicsError::HoverInfeasible {
                hover,
                lo: self.force_min.z,
                hi: self.force_max.z,
            });
        }
        Ok(())
    }

    /// Velocity retention factor `1 - eta`.
    pub fn damping(&self) -> f64 {
        1.0 - self.air_resistance
    }

    /// `dt / m`.
    pub fn input_gain(&self) -> f64 {
        self.dt / self.mass
    }

    /// `[0, 0, m g]`, the input that exactly cancels gravity.
    pub fn hover_force(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.mass * self.gravity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl State {
    pub fn new(position: Vec3, velocity: Vec3) -> Self {
        Self { position, velocity }
    }

    pub fn at_rest(position: Vec3) -> Self {
        Self::new(position, Vec3::zeros())
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.position.x,
            self.position.y,
            self.position.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|c| c.is_finite())
    }

    /// Max-norm distance between two states.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        (self.to_vector() - other.to_vector()).amax()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub force: Vec3,
}

impl ControlInput {
    pub fn new(force: Vec3) -> Self {
        Self { force }
    }
}

/// Cached linear model built from [`AgentParams`].
#[derive(Debug, Clone)]
pub struct Dynamics {
    params: AgentParams,
    transition: Matrix6<f64>,
    input: Matrix6x3<f64>,
}

impl Dynamics {
    pub fn new(params: AgentParams) -> Result<Self, DynamicsError> {
        params.validate()?;
        let mut transition = Matrix6::identity();
        let mut input = Matrix6x3::zeros();
        for k in 0..3 {
            transition[(k, k + 3)] = params.dt;
            transition[(k + 3, k + 3)] = params.damping();
            input[(k + 3, k)] = params.input_gain();
        }
        Ok(Self {
            params,
            transition,
            input,
        })
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    /// The 6x6 state transition matrix.
    pub fn transition(&self) -> &Matrix6<f64> {
        &self.transition
    }

    /// The 6x3 input matrix.
    pub fn input_matrix(&self) -> &Matrix6x3<f64> {
        &self.input
    }

    pub fn step(&self, x: &State, u: &ControlInput) -> Result<State, DynamicsError> {
        if !x.is_finite() {
            return Err(DynamicsError::NonFinite("state"));
        }
        if !u.force.iter().all(|c| c.is_finite()) {
            return Err(DynamicsError::NonFinite("control"));
        }
        Ok(self.step_unchecked(x, u))
    }

    pub(crate) fn step_unchecked(&self, x: &State, u: &ControlInput) -> State {
        let p = &self.params;
        let position = x.position + x.velocity * p.dt;
        let velocity = x.velocity * p.damping() + (u.force - p.hover_force()) * p.input_gain();
        State::new(position, velocity)
    }

    /// States `x_1..x_n` produced by applying `controls` from `x0`.
    pub fn rollout(&self, x0: &State, controls: &[ControlInput]) -> Result<Vec<State>, DynamicsError> {
        if controls.is_empty() {
            return Err(DynamicsError::EmptyControls);
        }
        let mut out = Vec::with_capacity(controls.len());
        let mut x = *x0;
        for u in controls {
            x = self.step(&x, u)?;
            out.push(x);
        }
        Ok(out)
    }

    /// `x_t = A^t x_0 + sum_{k<t} A^k B (u_{t-k-1} - u_g)`.
    pub fn closed_form_state(
        &self,
        x0: &State,
        controls: &[ControlInput],
        t: usize,
    ) -> Result<State, DynamicsError> {
        if t == 0 || t > controls.len() {
            return Err(DynamicsError::TimeIndex {
                t,
                len: controls.len(),
            });
        }
        let ug = self.params.hover_force();
        let mut power = Matrix6::identity();
        let mut acc = Vector6::zeros();
        for k in 0..t {
            acc += power * self.input * (controls[t - k - 1].force - ug);
            power *= self.transition;
        }
        Ok(State::from_vector(&(power * x0.to_vector() + acc)))
    }

    /// Axis-aligned boxes `(min, max)` containing every position reachable
    /// at steps `1..=steps` under the force and velocity bounds. Each axis is
    /// propagated as an interval, so the boxes over-approximate. `None` once
    /// the velocity bounds cannot be met.
    pub fn reachable_boxes(&self, x0: &State, steps: usize) -> Vec<Option<(Vec3, Vec3)>> {
        let p = &self.params;
        let ug = p.hover_force();
        let (damp, gain) = (p.damping(), p.input_gain());
        let scale = |k: f64, lo: f64, hi: f64| if k >= 0.0 { (k * lo, k * hi) } else { (k * hi, k * lo) };
        let mut pos = [(0.0, 0.0); 3];
        let mut vel = [(0.0, 0.0); 3];
        for d in 0..3 {
            pos[d] = (x0.position[d], x0.position[d]);
            vel[d] = (x0.velocity[d], x0.velocity[d]);
        }
        let mut out = Vec::with_capacity(steps);
        let mut empty = false;
        for _ in 0..steps {
            for d in 0..3 {
                let (a, b) = scale(p.dt, vel[d].0, vel[d].1);
                pos[d] = (pos[d].0 + a, pos[d].1 + b);
                let (va, vb) = scale(damp, vel[d].0, vel[d].1);
                let (fa, fb) = scale(gain, p.force_min[d] - ug[d], p.force_max[d] - ug[d]);
                vel[d] = ((va + fa).max(p.velocity_min[d]), (vb + fb).min(p.velocity_max[d]));
                empty |= vel[d].0 > vel[d].1;
            }
            out.push((!empty).then(|| {
                (
                    Vec3::new(pos[0].0, pos[1].0, pos[2].0),
                    Vec3::new(pos[0].1, pos[1].1, pos[2].1),
                )
            }));
        }
        out
    }
}

/// States `x_0..x_T` together with the controls `u_0..u_{T-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub controls: Vec<ControlInput>,
}

impl Trajectory {
    pub fn new(states: Vec<State>, controls: Vec<ControlInput>) -> Result<Self, DynamicsError> {
        if controls.is_empty() {
            return Err(DynamicsError::EmptyControls);
        }
        if states.len() != controls.len() + 1 {
            return Err(DynamicsError::Length {
                states: states.len(),
                controls: controls.len(),
            });
        }
        Ok(Self { states, controls })
    }

    /// Simulates `controls` from `x0`.
    pub fn simulate(dynamics: &Dynamics, x0: State, controls: Vec<ControlInput>) -> Result<Self, DynamicsError> {
        let mut states = vec![x0];
        states.extend(dynamics.rollout(&x0, &controls)?);
        Ok(Self { states, controls })
    }

    /// Number of control steps `T`.
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn position(&self, t: usize) -> Vec3 {
        self.states[t].position
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.states.iter().map(|s| s.position)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dynamics() -> Dynamics {
        Dynamics::new(AgentParams::reference()).unwrap()
    }

    fn hover() -> ControlInput {
        ControlInput::new(AgentParams::reference().hover_force())
    }

    #[test]
    fn hover_holds_position() {
        let d = dynamics();
        let x = State::at_rest(Vec3::new(0.0, 0.0, 10.0));
        let y = d.step(&x, &ControlInput::new(Vec3::new(0.0, 0.0, 32.8635))).unwrap();
        assert!(y.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn reachable_boxes_from_rest() {
        let d = dynamics();
        let boxes = d.reachable_boxes(&State::at_rest(Vec3::new(0.0, 0.0, 10.0)), 2);
        let (lo, hi) = boxes[0].unwrap();
        assert_eq!(lo, Vec3::new(0.0, 0.0, 10.0));
        assert_eq!(hi, lo);
        // v_1 spans +-35/3.35 horizontally, clipped to the speed limit of 15
        let (lo, hi) = boxes[1].unwrap();
        assert!((hi.x - 35.0 / 3.35).abs() < 1e-12);
        assert!((lo.y + 35.0 / 3.35).abs() < 1e-12);
        let g = 3.35 * 9.81;
        assert!((lo.z - (10.0 + (-10.0 - g) / 3.35)).abs() < 1e-12);
    }

    #[test]
    fn coasting_decays_velocity() {
        let d = dynamics();
        let x = State::new(Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0));
        let y = d.step(&x, &hover()).unwrap();
        assert!((y.position - Vec3::new(1.0, 2.0, 3.0)).amax() < 1e-12);
        assert!((y.velocity - Vec3::new(0.8, 1.6, 2.4)).amax() < 1e-12);
    }

    #[test]
    fn unit_impulse() {
        let d = dynamics();
        let y = d
            .step(&State::at_rest(Vec3::zeros()), &ControlInput::new(Vec3::new(3.35, 0.0, 32.8635)))
            .unwrap();
        assert!(y.position.amax() < 1e-12);
        assert!((y.velocity - Vec3::new(1.0, 0.0, 0.0)).amax() < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let d = dynamics();
        let x = State::at_rest(Vec3::new(f64::NAN, 0.0, 0.0));
        assert!(d.step(&x, &hover()).is_err());
        let u = ControlInput::new(Vec3::new(0.0, f64::INFINITY, 0.0));
        assert!(d.step(&State::at_rest(Vec3::zeros()), &u).is_err());
    }

    #[test]
    fn rollout_of_hover_is_constant() {
        let d = dynamics();
        let x0 = State::at_rest(Vec3::new(5.0, 6.0, 7.0));
        let xs = d.rollout(&x0, &[hover(); 10]).unwrap();
        assert_eq!(xs.len(), 10);
        assert!(xs.iter().all(|x| x.max_abs_diff(&x0) < 1e-12));
    }

    #[test]
    fn rollout_coasting_is_geometric() {
        let d = dynamics();
        let x0 = State::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0));
        let xs = d.rollout(&x0, &[hover(); 12]).unwrap();
        for (i, x) in xs.iter().enumerate() {
            let t = i + 1;
            let expected: f64 = (0..t).map(|k| 0.8_f64.powi(k as i32)).sum();
            assert!((x.position.x - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rollout_single_and_empty() {
        let d = dynamics();
        let x0 = State::new(Vec3::new(1.0, 1.0, 1.0), Vec3::new(0.5, 0.0, -0.5));
        let u = ControlInput::new(Vec3::new(2.0, -1.0, 30.0));
        assert_eq!(d.rollout(&x0, &[u]).unwrap(), vec![d.step(&x0, &u).unwrap()]);
        assert_eq!(d.rollout(&x0, &[]), Err(DynamicsError::EmptyControls));
    }

    #[test]
    fn closed_form_first_step_matches() {
        let d = dynamics();
        let x0 = State::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.5, 2.0));
        let u = [ControlInput::new(Vec3::new(4.0, -3.0, 20.0))];
        let a = d.closed_form_state(&x0, &u, 1).unwrap();
        assert!(a.max_abs_diff(&d.step(&x0, &u[0]).unwrap()) < 1e-12);
    }

    #[test]
    fn closed_form_index_errors() {
        let d = dynamics();
        let x0 = State::at_rest(Vec3::zeros());
        assert!(d.closed_form_state(&x0, &[hover()], 0).is_err());
        assert!(d.closed_form_state(&x0, &[hover()], 2).is_err());
    }

    #[test]
    fn zero_drag_velocity_is_running_sum() {
        let mut p = AgentParams::reference();
        p.air_resistance = 0.0;
        let d = Dynamics::new(p.clone()).unwrap();
        let controls: Vec<_> = (0..8)
            .map(|k| ControlInput::new(Vec3::new(k as f64, -(k as f64), 30.0)))
            .collect();
        let x0 = State::at_rest(Vec3::zeros());
        let g = p.input_gain();
        let mut v = Vec3::zeros();
        for t in 1..=controls.len() {
            v += (controls[t - 1].force - p.hover_force()) * g;
            let x = d.closed_form_state(&x0, &controls, t).unwrap();
            assert!((x.velocity - v).amax() < 1e-12);
        }
    }

    #[test]
    fn parameter_validation() {
        let ok = AgentParams::reference();
        assert!(ok.validate().is_ok());
        let mut p = ok.clone();
        p.mass = 0.0;
        assert_eq!(p.validate(), Err(DynamicsError::Mass(0.0)));
        let mut p = ok.clone();
        p.air_resistance = 1.0;
        assert!(matches!(p.validate(), Err(DynamicsError::AirResistance(_))));
        let mut p = ok.clone();
        p.force_max.z = 30.0;
        assert!(matches!(p.validate(), Err(DynamicsError::HoverInfeasible { .. })));
        let mut p = ok;
        p.velocity_min.x = 20.0;
        assert!(matches!(p.validate(), Err(DynamicsError::Bounds { what: "velocity" })));
    }
}
