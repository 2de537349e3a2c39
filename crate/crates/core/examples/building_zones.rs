//! Discretizes the space around the 60 m building into search zones and
//! prints each zone's distance band, cell dimensions and sensing margins.

use searchplan::scenario::{bundled, load_scenario};
use searchplan::zoning::coverage_margin_check;

fn main() {
    let scenario = load_scenario(bundled("building_60").unwrap()).expect("bundled scenario");
    let zones = scenario.build_zones().expect("zones build");

    for zone in &zones {
        let spec = &zone.spec;
        let first = &zone.cells[0];
        let sigma = first.sigma();
        let margins_ok = zone.cells.iter().all(|c| coverage_margin_check(c, &scenario.sensor));
        println!(
            "zone {}: d in [{:.1}, {:.1}] m, pd {:.2}, {} cells of {:.0} x {:.0} x {:.0} m, footprint margin ok: {margins_ok}",
            spec.index,
            spec.d_near,
            spec.d_far(),
            spec.pd,
            zone.len(),
            sigma[0],
            sigma[1],
            sigma[2],
        );
        for (part, face) in zone.searched_faces() {
            let n = zone.cells.iter().filter(|c| c.part == part && c.face.id == face).count();
            println!("    part {part} face {}: {n} cells", face.label());
        }
    }

    let cell = &zones[0].cells[0];
    println!(
        "first cell {}: waypoint cube center {:?}, half side {:.2} m",
        cell.label(),
        cell.interior_cube.center().as_slice(),
        cell.cube_half_side()
    );
}
