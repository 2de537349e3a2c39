//! Planes, half-spaces and axis-aligned cuboids.
//!
//! A cuboid is stored both in box form (center and dimensions) and as the
//! intersection of six negative half-spaces with outward normals. Faces are
//! always enumerated in the canonical order `+x, -x, +y, -y, +z, -z`, which
//! is also the order of the big-M rows emitted for every cuboid.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Number of faces (and bounding planes) of a cuboid.
pub const FACES: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("plane normal must be nonzero and finite")]
    DegenerateNormal,
    #[error("cuboid dimensions must be positive and finite, got {0:?}")]
    BadDimensions([f64; 3]),
    #[error("cuboid center must be finite, got {0:?}")]
    BadCenter([f64; 3]),
    #[error("unknown face label `{0}` (expected one of +x, -x, +y, -y, +z, -z)")]
    UnknownFace(String),
}

/// The plane `normal · x = offset`; `normal` points to the positive side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Vec3,
    offset: f64,
}

impl Plane {
    pub fn new(normal: Vec3, offset: f64) -> Result<Self, GeometryError> {
        if !normal.iter().all(|c| c.is_finite()) || normal.norm() == 0.0 || !offset.is_finite() {
            return Err(GeometryError::DegenerateNormal);
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &Vec3 {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed value `normal · p - offset`. Negative on the inner side.
    pub fn side(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Signed half-space test: negative means `p` lies in the negative half-space.
pub fn halfspace_side(plane: &Plane, p: &Vec3) -> f64 {
    plane.side(p)
}

/// Identifies one face of an axis-aligned cuboid by its outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaceId {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+z")]
    PosZ,
    #[serde(rename = "-z")]
    NegZ,
}

impl FaceId {
    pub const ALL: [FaceId; FACES] = [
        FaceId::PosX,
        FaceId::NegX,
        FaceId::PosY,
        FaceId::NegY,
        FaceId::PosZ,
        FaceId::NegZ,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Coordinate axis the face is perpendicular to (0 = x, 1 = y, 2 = z).
    pub fn axis(self) -> usize {
        self.index() / 2
    }

    /// `+1.0` for the max-side face of its axis, `-1.0` for the min side.
    pub fn sign(self) -> f64 {
        if self.index() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn normal(self) -> Vec3 {
        let mut n = Vec3::zeros();
        n[self.axis()] = self.sign();
        n
    }

    /// In-plane axes `(u, v)` of the face, in increasing axis order.
    pub fn tangent_axes(self) -> (usize, usize) {
        match self.axis() {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FaceId::PosX => "+x",
            FaceId::NegX => "-x",
            FaceId::PosY => "+y",
            FaceId::NegY => "-y",
            FaceId::PosZ => "+z",
            FaceId::NegZ => "-z",
        }
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FaceId {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaceId::ALL
            .iter()
            .copied()
            .find(|f| f.label() == s.trim())
            .ok_or_else(|| GeometryError::UnknownFace(s.to_string()))
    }
}

/// Axis-aligned rectangular cuboid, closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cuboid {
    center: Vec3,
    dims: Vec3,
    planes: [Plane; FACES],
}

impl Cuboid {
    pub fn new(center: Vec3, dims: Vec3) -> Result<Self, GeometryError> {
        if !center.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::BadCenter([center.x, center.y, center.z]));
        }
        if !dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            return Err(GeometryError::BadDimensions([dims.x, dims.y, dims.z]));
        }
        let half = dims / 2.0;
        let planes = FaceId::ALL.map(|f| {
            let a = f.axis();
            let offset = f.sign() * (center[a] + f.sign() * half[a]);
            Plane {
                normal: f.normal(),
                offset,
            }
        });
        Ok(Self {
            center,
            dims,
            planes,
        })
    }

    pub fn from_bounds(min: Vec3, max: Vec3) -> Result<Self, GeometryError> {
        Self::new((min + max) / 2.0, max - min)
    }

    pub fn center(&self) -> &Vec3 {
        &self.center
    }

    /// `[length, height, depth]` along x, y, z.
    pub fn dims(&self) -> &Vec3 {
        &self.dims
    }

    pub fn planes(&self) -> &[Plane; FACES] {
        &self.planes
    }

    pub fn plane(&self, face: FaceId) -> &Plane {
        &self.planes[face.index()]
    }

    pub fn min(&self) -> Vec3 {
        self.center - self.dims / 2.0
    }

    pub fn max(&self) -> Vec3 {
        self.center + self.dims / 2.0
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (lo, hi) = (self.min(), self.max());
        std::array::from_fn(|k| {
            Vec3::new(
                if k & 1 == 0 { lo.x } else { hi.x },
                if k & 2 == 0 { lo.y } else { hi.y },
                if k & 4 == 0 { lo.z } else { hi.z },
            )
        })
    }

    /// Closed containment through the six half-spaces.
    pub fn contains(&self, p: &Vec3) -> bool {
        self.planes.iter().all(|pl| pl.side(p) <= 0.0)
    }

    /// Containment in the cuboid grown by `tol` on every side.
    pub fn contains_within(&self, p: &Vec3, tol: f64) -> bool {
        self.planes.iter().all(|pl| pl.side(p) <= tol)
    }

    /// True when `p` is inside the cuboid shrunk by `tol` on every side.
    pub fn strictly_contains(&self, p: &Vec3, tol: f64) -> bool {
        self.planes.iter().all(|pl| pl.side(p) < -tol)
    }

    /// Largest outward distance of `p` past any face; non-positive inside.
    pub fn max_side(&self, p: &Vec3) -> f64 {
        self.planes
            .iter()
            .map(|pl| pl.side(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains_cuboid(&self, other: &Cuboid) -> bool {
        other.corners().iter().all(|c| self.contains(c))
    }

    /// True when the open interiors of the two boxes overlap.
    pub fn interiors_overlap(&self, other: &Cuboid) -> bool {
        let (a0, a1, b0, b1) = (self.min(), self.max(), other.min(), other.max());
        (0..3).all(|k| a0[k] < b1[k] && b0[k] < a1[k])
    }

    /// Slab test for the closed segment `p0 -> p1` against the closed box.
    pub fn segment_intersects(&self, p0: &Vec3, p1: &Vec3) -> bool {
        let (lo, hi) = (self.min(), self.max());
        let d = p1 - p0;
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        for k in 0..3 {
            if d[k] == 0.0 {
                if p0[k] < lo[k] || p0[k] > hi[k] {
                    return false;
                }
                continue;
            }
            let inv = 1.0 / d[k];
            let (mut ta, mut tb) = ((lo[k] - p0[k]) * inv, (hi[k] - p0[k]) * inv);
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }

    /// Same as [`Cuboid::segment_intersects`] against the box shrunk by `tol`.
    pub fn segment_enters_interior(&self, p0: &Vec3, p1: &Vec3, tol: f64) -> bool {
        let shrunk = self.dims.map(|d| d - 2.0 * tol);
        if shrunk.iter().any(|d| *d <= 0.0) {
            return false;
        }
        Cuboid::new(self.center, shrunk)
            .map(|c| c.segment_intersects(p0, p1))
            .unwrap_or(false)
    }

    pub fn face(&self, id: FaceId) -> Face {
        let (ua, va) = id.tangent_axes();
        let lo = self.min();
        let mut origin = lo;
        if id.sign() > 0.0 {
            origin[id.axis()] = self.max()[id.axis()];
        }
        let mut u_axis = Vec3::zeros();
        u_axis[ua] = 1.0;
        let mut v_axis = Vec3::zeros();
        v_axis[va] = 1.0;
        Face {
            id,
            origin,
            u_axis,
            v_axis,
            extent: (self.dims[ua], self.dims[va]),
            outward_normal: id.normal(),
        }
    }

    /// The six faces in canonical order.
    pub fn faces(&self) -> [Face; FACES] {
        FaceId::ALL.map(|f| self.face(f))
    }
}

/// A rectangular face of a cuboid with an in-plane frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub id: FaceId,
    /// Corner with the smallest in-plane coordinates.
    pub origin: Vec3,
    pub u_axis: Vec3,
    pub v_axis: Vec3,
    /// `(l, w)` measured along `u_axis` and `v_axis`.
    pub extent: (f64, f64),
    pub outward_normal: Vec3,
}

impl Face {
    /// World point at in-plane coordinates `(u, v)` and height `h` along the normal.
    pub fn point(&self, u: f64, v: f64, h: f64) -> Vec3 {
        self.origin + self.u_axis * u + self.v_axis * v + self.outward_normal * h
    }

    /// Signed distance of `p` from the face plane along the outward normal.
    pub fn height_of(&self, p: &Vec3) -> f64 {
        (p - self.origin).dot(&self.outward_normal)
    }

    /// In-plane coordinates of the perpendicular foot of `p`.
    pub fn project(&self, p: &Vec3) -> (f64, f64) {
        let rel = p - self.origin;
        (rel.dot(&self.u_axis), rel.dot(&self.v_axis))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Obstacle,
    ObjectOfInterest,
    Goal,
}

/// Union of simple cuboids.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundObject {
    pub name: String,
    pub kind: ObjectKind,
    parts: Vec<Cuboid>,
}

impl CompoundObject {
    /// Returns `None` when `parts` is empty.
    pub fn new(name: impl Into<String>, kind: ObjectKind, parts: Vec<Cuboid>) -> Option<Self> {
        if parts.is_empty() {
            return None;
        }
        Some(Self {
            name: name.into(),
            kind,
            parts,
        })
    }

    pub fn parts(&self) -> &[Cuboid] {
        &self.parts
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.parts.iter().any(|c| c.contains(p))
    }

    pub fn faces(&self) -> Vec<Face> {
        self.parts.iter().flat_map(|c| c.faces()).collect()
    }
}
