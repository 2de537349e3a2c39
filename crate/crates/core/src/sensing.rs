//! Camera footprint and detection-probability model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensingError {
    #[error("field-of-view angle must lie in (0, 180) degrees, got {0} rad")]
    FovAngle(f64),
    #[error("working distances must satisfy 0 <= d_min < d_max, got [{0}, {1}]")]
    WorkingRange(f64, f64),
    #[error("distance must be non-negative, got {0}")]
    NegativeDistance(f64),
}

/// Square-FoV camera with a linear fall-off in detection probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// Full opening angle, radians.
    pub fov_angle: f64,
    pub d_min: f64,
    pub d_max: f64,
}

impl SensorModel {
    pub fn new(fov_angle: f64, d_min: f64, d_max: f64) -> Result<Self, SensingError> {
        if !(fov_angle > 0.0 && fov_angle < std::f64::consts::PI) {
            return Err(SensingError::FovAngle(fov_angle));
        }
        if !(d_min.is_finite() && d_max.is_finite() && d_min >= 0.0 && d_min < d_max) {
            return Err(SensingError::WorkingRange(d_min, d_max));
        }
        Ok(Self {
            fov_angle,
            d_min,
            d_max,
        })
    }

    pub fn from_degrees(fov_deg: f64, d_min: f64, d_max: f64) -> Result<Self, SensingError> {
        Self::new(fov_deg.to_radians(), d_min, d_max)
    }

    /// 60 degree camera with a 17..93 m working range.
    pub fn reference() -> Self {
        Self::from_degrees(60.0, 17.0, 93.0).expect("reference sensor is valid")
    }

    pub fn fov_degrees(&self) -> f64 {
        self.fov_angle.to_degrees()
    }

    /// Side of the square footprint at distance `d`: `2 d tan(fov / 2)`.
    pub fn footprint_side(&self, d: f64) -> Result<f64, SensingError> {
        if d.is_nan() || d < 0.0 {
            return Err(SensingError::NegativeDistance(d));
        }
        Ok(2.0 * d * (self.fov_angle / 2.0).tan())
    }

    /// Zero up to and including `d_min`, then linear down to zero at `d_max`.
    pub fn detection_prob(&self, d: f64) -> f64 {
        if d <= self.d_min {
            return 0.0;
        }
        (1.0 - (d - self.d_min) / (self.d_max - self.d_min)).max(0.0)
    }

    /// Detection probability scaled by the footprint area (m^2).
    pub fn search_confidence(&self, d: f64) -> Result<f64, SensingError> {
        let r = self.footprint_side(d)?;
        Ok(self.detection_prob(d) * r * r)
    }
}
