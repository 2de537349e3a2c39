//! Builds the model for a short weights mission and writes it in CPLEX LP
//! format so an external MIQP solver can cross-check it.
//!
//! ```text
//! cargo run --example export_lp -- /tmp/weights.lp
//! ```

use searchplan::miqp::{build, export_lp};
use searchplan::scenario::{bundled, load_scenario_with, Overrides};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "weights.lp".to_string());
    let overrides = Overrides {
        horizon: Some(8),
        goal_window_start: Some(6),
        ..Default::default()
    };
    let scenario = load_scenario_with(bundled("weights").unwrap(), &overrides).expect("scenario loads");
    let zones = scenario.build_zones().unwrap();
    let model = build(&scenario, &zones).expect("model builds");

    let text = export_lp(&model);
    std::fs::write(&path, &text).expect("LP file written");
    println!(
        "wrote {path}: {} variables ({} binary), {} rows, {} lines",
        model.num_variables(),
        model.num_binaries(),
        model.constraints().len(),
        text.lines().count()
    );
    for line in text.lines().take(6) {
        println!("  {line}");
    }
}
