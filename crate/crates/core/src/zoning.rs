//! Discretization of the space in front of an object's faces into 3D search
//! zones.
//!
//! Each zone is a shell of equally sized cell cuboids at a fixed distance
//! band from the object. A cell covers one grid cell of one object face; its
//! square side faces the object and its depth spans the zone band. The agent
//! counts a cell as searched once it is inside the small interior cube at the
//! cell center, from where the camera footprint is guaranteed to enclose the
//! whole grid cell (see [`coverage_margin_check`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CompoundObject, Cuboid, Face, FaceId, Vec3};
use crate::sensing::SensorModel;

pub const DEFAULT_CUBE_FRACTION: f64 = 0.2;

/// Slack used when counting how many cells are needed along a face edge.
const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZoningError {
    #[error("zone breakpoints must be strictly increasing, at least two, and finite: {0:?}")]
    Breakpoints(Vec<f64>),
    #[error("first breakpoint {first} lies below the sensor minimum distance {d_min}")]
    BelowMinDistance { first: f64, d_min: f64 },
    #[error("last breakpoint {last} lies beyond the sensor maximum distance {d_max}")]
    BeyondMaxDistance { last: f64, d_max: f64 },
    #[error("zone {index}: {what}")]
    BadSpec { index: usize, what: String },
    #[error("no faces selected for search")]
    NoFaces,
    #[error("the ground face (-z) cannot be searched")]
    GroundFace,
    #[error("cube fraction must lie in (0, 1], got {0}")]
    CubeFraction(f64),
    #[error("cell side must be positive, got {0}")]
    CellSide(f64),
    #[error("zone {zone}: cells {a} and {b} overlap")]
    Overlap { zone: usize, a: usize, b: usize },
    #[error(
        "zone {zone}, cell {cell}: footprint {footprint:.3} m from the interior cube is smaller \
         than the required {required:.3} m"
    )]
    CoverageMargin {
        zone: usize,
        cell: usize,
        footprint: f64,
        required: f64,
    },
}

/// Distance band and detection probability of one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub index: usize,
    /// Distance from the object face to the near side of the zone.
    pub d_near: f64,
    pub depth: f64,
    pub pd: f64,
    pub cell_side_override: Option<f64>,
}

impl ZoneSpec {
    pub fn d_far(&self) -> f64 {
        self.d_near + self.depth
    }

    pub fn validate(&self) -> Result<(), ZoningError> {
        let bad = |what: &str| ZoningError::BadSpec {
            index: self.index,
            what: what.to_string(),
        };
        if !(self.d_near > 0.0 && self.d_near.is_finite()) {
            return Err(bad("near distance must be positive"));
        }
        if !(self.depth > 0.0 && self.depth.is_finite()) {
            return Err(bad("depth must be positive"));
        }
        if !(0.0..=1.0).contains(&self.pd) {
            return Err(bad("detection probability must lie in [0, 1]"));
        }
        if let Some(s) = self.cell_side_override {
            if !(s > 0.0 && s.is_finite()) {
                return Err(bad("cell side override must be positive"));
            }
        }
        Ok(())
    }

    /// Grid cell side used on the object faces.
    pub fn cell_side(&self, sensor: &SensorModel) -> f64 {
        self.cell_side_override
            .unwrap_or_else(|| sensor.footprint_side(self.d_near).unwrap_or(0.0))
    }
}

/// Splits `[b_0, b_N]` into `N` zones `[b_i, b_{i+1})`, each assigned the
/// detection probability at its far edge (the lowest value over the band).
pub fn quantize_detection(
    sensor: &SensorModel,
    breakpoints: &[f64],
) -> Result<Vec<ZoneSpec>, ZoningError> {
    let increasing = breakpoints.windows(2).all(|w| w[0] < w[1]);
    if breakpoints.len() < 2 || !increasing || !breakpoints.iter().all(|b| b.is_finite()) {
        return Err(ZoningError::Breakpoints(breakpoints.to_vec()));
    }
    let (first, last) = (breakpoints[0], breakpoints[breakpoints.len() - 1]);
    // The first band may start at d_min itself; the band is half-open and
    // every interior cube sits strictly beyond it.
    if first < sensor.d_min || first <= 0.0 {
        return Err(ZoningError::BelowMinDistance {
            first,
            d_min: sensor.d_min,
        });
    }
    if last > sensor.d_max {
        return Err(ZoningError::BeyondMaxDistance {
            last,
            d_max: sensor.d_max,
        });
    }
    Ok(breakpoints
        .windows(2)
        .enumerate()
        .map(|(index, w)| ZoneSpec {
            index,
            d_near: w[0],
            depth: w[1] - w[0],
            pd: sensor.detection_prob(w[1]),
            cell_side_override: None,
        })
        .collect())
}

/// One rectangle of a face tiling, in face coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub row: usize,
    pub col: usize,
    pub u0: f64,
    pub v0: f64,
    pub du: f64,
    pub dv: f64,
}

impl GridCell {
    pub fn center(&self) -> (f64, f64) {
        (self.u0 + self.du / 2.0, self.v0 + self.dv / 2.0)
    }
}

fn cells_along(extent: f64, side: f64) -> usize {
    ((extent / side) - GRID_EPS).ceil().max(1.0) as usize
}

/// Tiles `face` with the fewest equal rectangles no larger than `cell_side`.
pub fn face_grid(face: &Face, cell_side: f64) -> Result<Vec<GridCell>, ZoningError> {
    if !(cell_side > 0.0 && cell_side.is_finite()) {
        return Err(ZoningError::CellSide(cell_side));
    }
    let (l, w) = face.extent;
    let (rows, cols) = (cells_along(l, cell_side), cells_along(w, cell_side));
    let (du, dv) = (l / rows as f64, w / cols as f64);
    let mut out = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            out.push(GridCell {
                row,
                col,
                u0: row as f64 * du,
                v0: col as f64 * dv,
                du,
                dv,
            });
        }
    }
    Ok(out)
}

/// A zone cuboid together with its waypoint cube.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchCell {
    pub cell_cuboid: Cuboid,
    pub interior_cube: Cuboid,
    /// Which constituent cuboid of the object this cell faces.
    pub part: usize,
    pub face: Face,
    pub grid_index: (usize, usize),
    pub zone_index: usize,
    /// Grid rectangle covered on the face.
    pub grid: GridCell,
    /// Near-side distance from the face.
    pub d_near: f64,
    pub depth: f64,
}

impl SearchCell {
    /// `[u extent, v extent, depth]` in the face frame.
    pub fn sigma(&self) -> [f64; 3] {
        [self.grid.du, self.grid.dv, self.depth]
    }

    /// Half the side of the interior cube.
    pub fn cube_half_side(&self) -> f64 {
        self.interior_cube.dims().x / 2.0
    }

    /// Distance from the object face to the near side of the interior cube.
    pub fn inner_distance(&self) -> f64 {
        self.d_near + self.depth / 2.0 - self.cube_half_side()
    }

    /// Larger side of the covered grid rectangle.
    pub fn grid_side(&self) -> f64 {
        self.grid.du.max(self.grid.dv)
    }

    pub fn label(&self) -> String {
        format!(
            "p{}{}r{}c{}",
            self.part,
            self.face.id.label(),
            self.grid_index.0,
            self.grid_index.1
        )
    }
}

/// All cells of one distance band around one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub spec: ZoneSpec,
    /// Index of the object of interest this zone belongs to.
    pub object: usize,
    pub cells: Vec<SearchCell>,
}

impl Zone {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn searched_faces(&self) -> Vec<(usize, FaceId)> {
        let mut out: Vec<(usize, FaceId)> = Vec::new();
        for c in &self.cells {
            if !out.contains(&(c.part, c.face.id)) {
                out.push((c.part, c.face.id));
            }
        }
        out
    }
}

/// True iff a footprint taken anywhere inside the interior cube encloses the
/// whole grid rectangle of the cell.
pub fn coverage_margin_check(cell: &SearchCell, sensor: &SensorModel) -> bool {
    let h = cell.cube_half_side();
    match sensor.footprint_side(cell.inner_distance()) {
        Ok(r) => r >= cell.grid_side() + 2.0 * h,
        Err(_) => false,
    }
}

fn validate_faces(faces: &[FaceId]) -> Result<(), ZoningError> {
    if faces.is_empty() {
        return Err(ZoningError::NoFaces);
    }
    if faces.contains(&FaceId::NegZ) {
        return Err(ZoningError::GroundFace);
    }
    Ok(())
}

fn cells_for_face(
    object: &Cuboid,
    part: usize,
    face_id: FaceId,
    spec: &ZoneSpec,
    cell_side: f64,
    cube_fraction: f64,
) -> Result<Vec<SearchCell>, ZoningError> {
    let face = object.face(face_id);
    let grid = face_grid(&face, cell_side)?;
    let mut out = Vec::with_capacity(grid.len());
    for g in grid {
        let a = face.point(g.u0, g.v0, spec.d_near);
        let b = face.point(g.u0 + g.du, g.v0 + g.dv, spec.d_far());
        let lo = a.zip_map(&b, f64::min);
        let hi = a.zip_map(&b, f64::max);
        let cell_cuboid = Cuboid::from_bounds(lo, hi).map_err(|e| ZoningError::BadSpec {
            index: spec.index,
            what: e.to_string(),
        })?;
        let side = cube_fraction * g.du.min(g.dv).min(spec.depth);
        let interior_cube = Cuboid::new(*cell_cuboid.center(), Vec3::repeat(side)).map_err(|e| {
            ZoningError::BadSpec {
                index: spec.index,
                what: e.to_string(),
            }
        })?;
        out.push(SearchCell {
            cell_cuboid,
            interior_cube,
            part,
            face: face.clone(),
            grid_index: (g.row, g.col),
            zone_index: spec.index,
            grid: g,
            d_near: spec.d_near,
            depth: spec.depth,
        });
    }
    Ok(out)
}

fn check_zone(zone: &Zone, sensor: &SensorModel) -> Result<(), ZoningError> {
    for (i, a) in zone.cells.iter().enumerate() {
        for (j, b) in zone.cells.iter().enumerate().skip(i + 1) {
            if a.cell_cuboid.interiors_overlap(&b.cell_cuboid) {
                return Err(ZoningError::Overlap {
                    zone: zone.spec.index,
                    a: i,
                    b: j,
                });
            }
        }
    }
    for (i, c) in zone.cells.iter().enumerate() {
        if !coverage_margin_check(c, sensor) {
            return Err(ZoningError::CoverageMargin {
                zone: zone.spec.index,
                cell: i,
                footprint: sensor.footprint_side(c.inner_distance()).unwrap_or(0.0),
                required: c.grid_side() + 2.0 * c.cube_half_side(),
            });
        }
    }
    Ok(())
}

/// Builds the cells of one zone around a single cuboid.
pub fn build_zone(
    object: &Cuboid,
    faces_to_search: &[FaceId],
    spec: &ZoneSpec,
    sensor: &SensorModel,
    cube_fraction: f64,
) -> Result<Zone, ZoningError> {
    build_zone_for_parts(
        std::slice::from_ref(object),
        0,
        faces_to_search,
        spec,
        sensor,
        cube_fraction,
    )
}

fn build_zone_for_parts(
    parts: &[Cuboid],
    object_index: usize,
    faces_to_search: &[FaceId],
    spec: &ZoneSpec,
    sensor: &SensorModel,
    cube_fraction: f64,
) -> Result<Zone, ZoningError> {
    validate_faces(faces_to_search)?;
    spec.validate()?;
    if !(cube_fraction > 0.0 && cube_fraction <= 1.0) {
        return Err(ZoningError::CubeFraction(cube_fraction));
    }
    let cell_side = spec.cell_side(sensor);
    let mut cells = Vec::new();
    for (part, cuboid) in parts.iter().enumerate() {
        for f in FaceId::ALL.iter().filter(|f| faces_to_search.contains(f)) {
            cells.extend(cells_for_face(cuboid, part, *f, spec, cell_side, cube_fraction)?);
        }
    }
    let zone = Zone {
        spec: spec.clone(),
        object: object_index,
        cells,
    };
    check_zone(&zone, sensor)?;
    Ok(zone)
}

/// Builds every zone around a compound object; each constituent cuboid is
/// zoned on the requested faces.
pub fn build_object_zones(
    object: &CompoundObject,
    object_index: usize,
    faces_to_search: &[FaceId],
    specs: &[ZoneSpec],
    sensor: &SensorModel,
    cube_fraction: f64,
) -> Result<Vec<Zone>, ZoningError> {
    specs
        .iter()
        .map(|s| {
            build_zone_for_parts(
                object.parts(),
                object_index,
                faces_to_search,
                s,
                sensor,
                cube_fraction,
            )
        })
        .collect()
}
