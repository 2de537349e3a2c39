//! Flat variable indexing for the search-planning MIQP.
//!
//! Block order: states `x_1..x_T` (6 each), controls `u_0..u_{T-1}` (3 each),
//! then the binary blocks `z`, `z~`, `z^`, `eps`, `y`, `y~`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geometry::FACES;

/// How the completion step derives a binary from a relaxed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompletionRole {
    /// One when `row` holds with the binary at one.
    SetIfSatisfied { row: usize },
    /// One only when `row` fails with the binary at zero.
    SetIfNeeded { row: usize },
    /// At most one member of `group` is one; higher priority tried first.
    Select { group: usize, priority: f64 },
}

/// Per-block binary counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BinaryCounts {
    pub z: usize,
    pub z_tilde: usize,
    pub z_hat: usize,
    pub eps: usize,
    pub y: usize,
    pub y_tilde: usize,
    /// `T * |Z_max| * (L + 1)` for the largest zone.
    pub worst_case: usize,
}

impl BinaryCounts {
    pub fn search(&self) -> usize {
        self.z + self.z_tilde + self.z_hat
    }

    pub fn total(&self) -> usize {
        self.search() + self.eps + self.y + self.y_tilde
    }
}

/// Per-block binary counts for a horizon, zone sizes and avoidance set size.
pub fn count_binaries(horizon: usize, zone_sizes: &[usize], avoid_count: usize) -> BinaryCounts {
    let t = horizon;
    let cells: usize = zone_sizes.iter().sum();
    let largest = zone_sizes.iter().copied().max().unwrap_or(0);
    BinaryCounts {
        z: FACES * t * cells,
        z_tilde: t * cells,
        z_hat: zone_sizes.len(),
        eps: FACES * t * avoid_count,
        y: FACES * t,
        y_tilde: t,
        worst_case: t * largest * (FACES + 1),
    }
}

#[derive(Debug, Clone)]
pub struct VariableLayout {
    pub horizon: usize,
    /// Cells per zone, in model zone order.
    pub zone_sizes: Vec<usize>,
    /// Object index of each zone.
    pub zone_objects: Vec<usize>,
    /// Number of cuboids in the avoidance set.
    pub avoid_count: usize,
    cell_offsets: Vec<usize>,
    total_cells: usize,
    z_base: usize,
    zt_base: usize,
    zh_base: usize,
    eps_base: usize,
    y_base: usize,
    yt_base: usize,
    len: usize,
    stages: Vec<Vec<(usize, CompletionRole)>>,
    select_rows: BTreeMap<usize, Vec<usize>>,
    indicators: BTreeMap<usize, Vec<(usize, usize)>>,
}

impl VariableLayout {
    pub fn new(horizon: usize, zone_sizes: Vec<usize>, zone_objects: Vec<usize>, avoid_count: usize) -> Self {
        assert!(horizon >= 1, "horizon must be at least one step");
        assert_eq!(zone_sizes.len(), zone_objects.len());
        let mut cell_offsets = Vec::with_capacity(zone_sizes.len());
        let mut total_cells = 0;
        for s in &zone_sizes {
            cell_offsets.push(total_cells);
            total_cells += s;
        }
        let t = horizon;
        let z_base = 9 * t;
        let zt_base = z_base + FACES * t * total_cells;
        let zh_base = zt_base + t * total_cells;
        let eps_base = zh_base + zone_sizes.len();
        let y_base = eps_base + FACES * t * avoid_count;
        let yt_base = y_base + FACES * t;
        let len = yt_base + t;
        Self {
            horizon,
            zone_sizes,
            zone_objects,
            avoid_count,
            cell_offsets,
            total_cells,
            z_base,
            zt_base,
            zh_base,
            eps_base,
            y_base,
            yt_base,
            len,
            stages: vec![Vec::new(); 3],
            select_rows: BTreeMap::new(),
            indicators: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_zones(&self) -> usize {
        self.zone_sizes.len()
    }

    pub fn total_cells(&self) -> usize {
        self.total_cells
    }

    /// State component `d` (0..6: position then velocity) at `t` in `1..=T`.
    pub fn state(&self, t: usize, d: usize) -> usize {
        debug_assert!((1..=self.horizon).contains(&t) && d < 6);
        (t - 1) * 6 + d
    }

    pub fn position(&self, t: usize, d: usize) -> usize {
        debug_assert!(d < 3);
        self.state(t, d)
    }

    /// Control component `d` at `t` in `0..T`.
    pub fn control(&self, t: usize, d: usize) -> usize {
        debug_assert!(t < self.horizon && d < 3);
        6 * self.horizon + 3 * t + d
    }

    fn cell(&self, zone: usize, cell: usize) -> usize {
        debug_assert!(cell < self.zone_sizes[zone]);
        self.cell_offsets[zone] + cell
    }

    /// Face indicator `z_{t l c i}`.
    pub fn z(&self, t: usize, l: usize, cell: usize, zone: usize) -> usize {
        self.z_base + ((t - 1) * self.total_cells + self.cell(zone, cell)) * FACES + l
    }

    /// Cube occupancy `z~_{t c i}`.
    pub fn z_tilde(&self, t: usize, cell: usize, zone: usize) -> usize {
        self.zt_base + (t - 1) * self.total_cells + self.cell(zone, cell)
    }

    /// Zone selection `z^_i`.
    pub fn z_hat(&self, zone: usize) -> usize {
        self.zh_base + zone
    }

    /// Avoidance face indicator `eps_{t psi l}`.
    pub fn eps(&self, t: usize, psi: usize, l: usize) -> usize {
        self.eps_base + ((t - 1) * self.avoid_count + psi) * FACES + l
    }

    pub fn y(&self, t: usize, l: usize) -> usize {
        self.y_base + (t - 1) * FACES + l
    }

    pub fn y_tilde(&self, t: usize) -> usize {
        self.yt_base + t - 1
    }

    pub fn binary_range(&self) -> std::ops::Range<usize> {
        self.z_base..self.len
    }

    pub fn counts(&self) -> BinaryCounts {
        count_binaries(self.horizon, &self.zone_sizes, self.avoid_count)
    }

    /// Stable LP-style name of a variable.
    pub fn name(&self, j: usize) -> String {
        let t_len = self.horizon;
        if j < 6 * t_len {
            return format!("x_{}_{}", j / 6 + 1, j % 6);
        }
        if j < self.z_base {
            let k = j - 6 * t_len;
            return format!("u_{}_{}", k / 3, k % 3);
        }
        if j < self.zt_base {
            let k = j - self.z_base;
            let t = k / FACES / self.total_cells + 1;
            let (i, c) = self.split_cell(k / FACES % self.total_cells);
            return format!("z_{t}_{}_{c}_{i}", k % FACES);
        }
        if j < self.zh_base {
            let k = j - self.zt_base;
            let (i, c) = self.split_cell(k % self.total_cells);
            return format!("zt_{}_{c}_{i}", k / self.total_cells + 1);
        }
        if j < self.eps_base {
            return format!("zh_{}", j - self.zh_base);
        }
        if j < self.y_base {
            let k = j - self.eps_base;
            let l = k % FACES;
            let t = k / FACES / self.avoid_count + 1;
            let p = k / FACES % self.avoid_count;
            return format!("e_{t}_{p}_{l}");
        }
        if j < self.yt_base {
            let k = j - self.y_base;
            return format!("y_{}_{}", k / FACES + 1, k % FACES);
        }
        format!("yt_{}", j - self.yt_base + 1)
    }

    /// Global cell index to `(zone, cell within zone)`.
    fn split_cell(&self, g: usize) -> (usize, usize) {
        let zone = self.cell_offsets.partition_point(|&o| o <= g) - 1;
        (zone, g - self.cell_offsets[zone])
    }

    pub(crate) fn push_role(&mut self, stage: usize, var: usize, role: CompletionRole) {
        self.stages[stage].push((var, role));
    }

    pub(crate) fn set_select_rows(&mut self, var: usize, rows: Vec<usize>) {
        self.select_rows.insert(var, rows);
    }

    pub(crate) fn push_indicator(&mut self, occupancy: usize, face: usize, row: usize) {
        self.indicators.entry(occupancy).or_default().push((face, row));
    }

    /// `(face binary, face row)` pairs behind an occupancy binary.
    pub fn indicators_of(&self, var: usize) -> &[(usize, usize)] {
        self.indicators.get(&var).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn completion_stages(&self) -> &[Vec<(usize, CompletionRole)>] {
        &self.stages
    }

    /// Rows that must hold before a selection binary may be switched on.
    pub fn rows_of(&self, var: usize) -> &[usize] {
        self.select_rows.get(&var).map(Vec::as_slice).unwrap_or(&[])
    }
}
