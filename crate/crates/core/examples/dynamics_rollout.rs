//! Rolls the reference agent forward under a constant climb-and-cruise force
//! and checks the closed-form state against the step-by-step rollout.

use searchplan::dynamics::{AgentParams, ControlInput, Dynamics, State};
use searchplan::geometry::Vec3;

fn main() {
    let dynamics = Dynamics::new(AgentParams::reference()).expect("reference agent is valid");
    let hover = dynamics.params().hover_force();
    println!("hover force: {:.3} N", hover.z);

    let x0 = State::at_rest(Vec3::new(0.0, 0.0, 10.0));
    let u = ControlInput::new(Vec3::new(5.0, 0.0, hover.z + 1.0));
    let controls = vec![u; 10];
    let states = dynamics.rollout(&x0, &controls).expect("finite rollout");

    println!("t      x       z      vx      vz");
    for (t, s) in std::iter::once(&x0).chain(&states).enumerate() {
        println!(
            "{t:2} {:7.3} {:7.3} {:7.3} {:7.3}",
            s.position.x, s.position.z, s.velocity.x, s.velocity.z
        );
    }

    let closed = dynamics.closed_form_state(&x0, &controls, 10).expect("closed form");
    println!("closed form vs rollout at t=10: {:.2e}", closed.max_abs_diff(&states[9]));

    let boxes = dynamics.reachable_boxes(&x0, 3);
    if let Some(Some((lo, hi))) = boxes.last() {
        println!("reachable after 3 steps: x in [{:.1}, {:.1}], z in [{:.1}, {:.1}]", lo.x, hi.x, lo.z, hi.z);
    }
}
