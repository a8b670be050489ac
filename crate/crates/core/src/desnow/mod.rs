//! Background recovery under snow occlusion.
//!
//! A flake brighter than the scene raises a pixel's intensity while it
//! passes, so the events fired at occlusion onset measure how far the
//! background lies below the flake: `I_b = I_r - C * E`. Flakes are located
//! as straight streaks in the x-y-t event volume, masked, and the estimate is
//! blended into the input image.

mod estimate;
mod mask;
mod restore;
mod streak;
mod warp;

use serde::{Deserialize, Serialize};

use crate::event::{EventStream, TimeWindow};
use crate::{Error, IntensityImage, OcclusionMask};

pub use estimate::{estimate_background_motion, BackgroundEstimate, EstimateOptions, FlakeIntensity};
pub use mask::{build_occlusion_mask, build_swept_mask, Exposure};
pub use restore::{restore_image, IntensitySource, RestoreConfig, Restored};
pub use streak::{detect_streaks, detect_streaks_with, DetectorConfig, Streak};
pub use warp::warp_events;

/// Linear event generation model: one event per `contrast` of intensity change.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContrastModel {
    pub contrast: f64,
    /// Assumed intensity of an occluding flake.
    pub flake_intensity: f64,
}

impl Default for ContrastModel {
    fn default() -> Self {
        Self {
            contrast: 0.15,
            flake_intensity: 0.9,
        }
    }
}

impl ContrastModel {
    pub fn new(contrast: f64, flake_intensity: f64) -> Result<Self, Error> {
        let model = Self {
            contrast,
            flake_intensity,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.contrast > 0.0 && self.contrast < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "contrast threshold must lie in (0, 1), got {}",
                self.contrast
            )));
        }
        if !(self.flake_intensity > 0.0 && self.flake_intensity <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "flake intensity must lie in (0, 1], got {}",
                self.flake_intensity
            )));
        }
        Ok(())
    }
}

/// Admissible flake motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VelocityPrior {
    /// Pixels per second.
    pub min_speed: f64,
    pub max_speed: f64,
    /// Centre of the direction cone; need not be normalised.
    pub direction: (f64, f64),
    /// Radians, in (0, pi]. pi accepts every direction.
    pub half_angle: f64,
    /// Maximum distance in pixels between a member event and its streak line.
    pub tolerance: f64,
}

impl Default for VelocityPrior {
    fn default() -> Self {
        Self {
            min_speed: 30.0,
            max_speed: 3000.0,
            direction: (0.0, 1.0),
            half_angle: std::f64::consts::PI,
            tolerance: 1.5,
        }
    }
}

impl VelocityPrior {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.min_speed >= 0.0 && self.min_speed < self.max_speed) {
            return bad(format!(
                "speed range [{}, {}] is empty",
                self.min_speed, self.max_speed
            ));
        }
        if !(self.half_angle > 0.0 && self.half_angle <= std::f64::consts::PI) {
            return bad(format!("cone half-angle must lie in (0, pi], got {}", self.half_angle));
        }
        if self.half_angle < std::f64::consts::PI && self.direction.0.hypot(self.direction.1) == 0.0 {
            return bad("cone direction must be non-zero".into());
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad(format!("spatial tolerance must be positive, got {}", self.tolerance));
        }
        Ok(())
    }

    /// True when `velocity` (px/s) passes both the speed and the cone gate.
    pub fn admits(&self, velocity: (f64, f64)) -> bool {
        let speed = velocity.0.hypot(velocity.1);
        if !(speed >= self.min_speed && speed <= self.max_speed) {
            return false;
        }
        if self.half_angle >= std::f64::consts::PI {
            return true;
        }
        if speed == 0.0 {
            return false;
        }
        let (dx, dy) = self.direction;
        let cos = (velocity.0 * dx + velocity.1 * dy) / (speed * dx.hypot(dy));
        cos.clamp(-1.0, 1.0).acos() <= self.half_angle
    }
}

/// Signed polarity sum of the events at exactly `pixel` within `window`.
pub fn accumulate_polarity(stream: &EventStream, pixel: (u16, u16), window: TimeWindow) -> Result<f64, Error> {
    let (x, y) = pixel;
    if u32::from(x) >= stream.width() || u32::from(y) >= stream.height() {
        return Err(Error::PixelOutOfBounds {
            x: u32::from(x),
            y: u32::from(y),
            width: stream.width(),
            height: stream.height(),
        });
    }
    Ok(stream.events()[stream.window_range(window)]
        .iter()
        .filter(|e| e.x == x && e.y == y)
        .map(|e| e.p.sign())
        .sum())
}

/// Background intensity behind a flake given the accumulated polarity `e`.
#[inline]
pub fn estimate_background_static(model: &ContrastModel, e: f64) -> f64 {
    (model.flake_intensity - model.contrast * e).clamp(0.0, 1.0)
}

/// Mask-guided blend: `mask * predicted + (1 - mask) * input`, per pixel.
pub fn fuse(input: &IntensityImage, predicted: &IntensityImage, mask: &OcclusionMask) -> Result<IntensityImage, Error> {
    input.check_same_dims(predicted.dims())?;
    input.check_same_dims(mask.dims())?;
    let data = input
        .as_slice()
        .iter()
        .zip(predicted.as_slice())
        .zip(mask.as_slice())
        .map(|((&i, &p), &m)| {
            let (lo, hi) = if i <= p { (i, p) } else { (p, i) };
            // the clamp to [lo, hi] only absorbs rounding
            (m * p + (1.0 - m) * i).clamp(lo, hi).clamp(0.0, 1.0)
        })
        .collect();
    IntensityImage::from_vec(input.width(), input.height(), data)
}
