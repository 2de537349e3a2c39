//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use searchplan::miqp::{MiqpModel, Sense};
use searchplan::solver::{solve_qp_relaxation, SolveOptions};

/// One 12 m block searched on `+x` with a single one-cell zone.
pub fn single_cell_text(start: [f64; 3], horizon: usize) -> String {
    format!(
        r#"
schema_version = 1
name = "single_cell"

[workspace]
min = [-20.0, -30.0, 0.0]
max = [70.0, 30.0, 40.0]

[agent]
mass = 3.35
air_resistance = 0.2
dt = 1.0
force_min = [-35.0, -35.0, -10.0]
force_max = [35.0, 35.0, 35.0]
velocity_min = [-15.0, -15.0, -15.0]
velocity_max = [15.0, 15.0, 15.0]
start_position = [{}, {}, {}]

[sensor]
fov_deg = 60.0
d_min = 17.0
d_max = 93.0

[mission]
horizon = {horizon}
weight_time = 1.0
weight_energy = 1.0
detection_requirement = 0.9

[goal]
center = [40.0, 0.0, 6.0]
dims = [8.0, 8.0, 8.0]

[[objects]]
name = "block"
faces = ["+x"]
parts = [{{ center = [0.0, 0.0, 6.0], dims = [12.0, 12.0, 12.0] }}]

[zones]
breakpoints = [17.0, 27.0]
pd = [0.95]
cell_side = [12.0]
"#,
        start[0], start[1], start[2]
    )
}

/// Solver options tight enough to compare objectives at 1e-6.
pub fn exact() -> SolveOptions {
    SolveOptions {
        relative_gap: 1e-9,
        absolute_gap: 1e-9,
        ..Default::default()
    }
}

/// Minimum over every assignment of the free binaries, or `None`.
pub fn brute_force(m: &MiqpModel) -> Option<f64> {
    let (lo, hi) = (m.lower_bounds(), m.upper_bounds());
    let free: Vec<usize> = m.binary_indices().into_iter().filter(|&j| lo[j] != hi[j]).collect();
    assert!(free.len() <= 20, "{} free binaries", free.len());
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << free.len()) {
        let (mut l, mut h) = (lo.clone(), hi.clone());
        for (k, &j) in free.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            l[j] = v;
            h[j] = v;
        }
        let sol = solve_qp_relaxation(m, &l, &h);
        if sol.is_optimal() && m.violations(&sol.values).max() <= 1e-6 {
            best = Some(best.map_or(sol.objective, |b: f64| b.min(sol.objective)));
        }
    }
    best
}

/// Small random MIQP: a convex objective over three continuous variables
/// and `n` binaries, linked by mixed rows. Odd seeds add a covering row
/// that no assignment can meet.
pub fn random_miqp(seed: u64, n: usize) -> MiqpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = MiqpModel::new(format!("random_{seed}"));
    let xs: Vec<usize> = (0..3).map(|d| m.add_continuous(format!("x{d}"), -10.0, 10.0)).collect();
    for &x in &xs {
        let a: f64 = rng.random_range(-5.0..5.0);
        m.add_quadratic(x, x, 2.0);
        m.add_linear(x, -2.0 * a);
        m.add_constant(a * a);
    }
    let bs: Vec<usize> = (0..n).map(|j| m.add_binary(format!("b{j}"), (j % 2) as u8)).collect();
    // Diagonally dominant, hence convex.
    for &b in &bs {
        m.add_linear(b, rng.random_range(-3.0..3.0));
        m.add_quadratic(b, b, 2.0);
    }
    for w in bs.windows(2) {
        m.add_quadratic(w[0], w[1], rng.random_range(-1.0..1.0));
    }
    for r in 0..n / 2 {
        let mut terms: Vec<(usize, f64)> = xs.iter().map(|&x| (x, rng.random_range(-1.0..1.0))).collect();
        for &b in &bs {
            if rng.random_bool(0.4) {
                terms.push((b, rng.random_range(-8.0..8.0)));
            }
        }
        m.add_constraint(format!("r{r}"), terms, Sense::Le, rng.random_range(0.0..4.0));
    }
    let picks: Vec<(usize, f64)> = bs.iter().take(3).map(|&b| (b, -1.0)).collect();
    let need = if seed % 2 == 1 { -4.0 } else { -1.0 };
    m.add_constraint("cover", picks, Sense::Le, need);
    m
}
