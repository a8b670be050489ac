use serde::{Deserialize, Serialize};

use super::estimate::{estimate_background_motion, EstimateOptions, FlakeIntensity};
use super::mask::Exposure;
use super::streak::{detect_streaks_with, DetectorConfig, Streak};
use super::{fuse, ContrastModel, VelocityPrior};
use crate::event::{EventStream, TimeWindow};
use crate::{Error, IntensityImage, OcclusionMask};

/// Source of the flake brightness used to invert the event count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensitySource {
    /// [`ContrastModel::flake_intensity`].
    #[default]
    Model,
    /// The input image itself.
    Observed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestoreConfig {
    pub model: ContrastModel,
    pub prior: VelocityPrior,
    pub min_support: usize,
    /// Background translation in px/s, supplied from outside.
    pub background_flow: (f64, f64),
    /// Fixed mask radius; `None` derives it per streak.
    pub radius: Option<f64>,
    pub intensity: IntensitySource,
    pub exposure: Exposure,
    /// RANSAC hypotheses per streak.
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RestoreConfig {
    fn default() -> Self {
        Self {
            model: ContrastModel::default(),
            prior: VelocityPrior::default(),
            min_support: 5,
            background_flow: (0.0, 0.0),
            radius: None,
            intensity: IntensitySource::Model,
            exposure: Exposure::Instant,
            iterations: 300,
            seed: 0,
        }
    }
}

/// Output of [`restore_image`].
#[derive(Clone, Debug, PartialEq)]
pub struct Restored {
    pub image: IntensityImage,
    /// The blend weights actually applied.
    pub mask: OcclusionMask,
    /// Streaks found in the window; support indices refer to the window's events.
    pub streaks: Vec<Streak>,
}

/// Removes snow from `image` using the events of `window`; the image is
/// taken to show the scene at the window end.
///
/// Streaks are detected, the background behind them is estimated, and the
/// estimate is blended in where the streak mask overlaps positive occlusion
/// evidence. Everything else keeps the input value.
pub fn restore_image(
    image: &IntensityImage,
    stream: &EventStream,
    config: &RestoreConfig,
    window: TimeWindow,
) -> Result<Restored, Error> {
    let geometry = (stream.width() as usize, stream.height() as usize);
    image.check_same_dims(geometry)?;
    config.model.validate()?;
    config.prior.validate()?;
    if let Some(r) = config.radius {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("mask radius must be non-negative, got {r}")));
        }
    }

    let events = stream.slice(window);
    if events.is_empty() {
        return Ok(Restored {
            image: image.clone(),
            mask: OcclusionMask::zeros(geometry.0, geometry.1),
            streaks: Vec::new(),
        });
    }

    let detector = DetectorConfig {
        iterations: config.iterations,
        seed: config.seed,
        ..DetectorConfig::new(config.prior, config.min_support)
    };
    let streaks = detect_streaks_with(&events, &detector);
    let options = EstimateOptions {
        radius: config.radius,
        exposure: config.exposure,
        intensity: match config.intensity {
            IntensitySource::Model => FlakeIntensity::Model,
            IntensitySource::Observed => FlakeIntensity::Observed(image),
        },
    };
    let estimate = estimate_background_motion(
        &config.model,
        &events,
        &streaks,
        config.background_flow,
        window.end(),
        window,
        &options,
    )?;
    let mask = estimate.supported_mask();
    let restored = fuse(image, &estimate.to_image(image), &mask)?;
    Ok(Restored {
        image: restored,
        mask,
        streaks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_events_no_change() {
        let img = IntensityImage::from_fn(12, 9, |x, y| (x + y) as f64 / 20.0);
        let out = restore_image(
            &img,
            &EventStream::empty(12, 9),
            &RestoreConfig::default(),
            TimeWindow::new(0, 10_000).unwrap(),
        )
        .unwrap();
        assert_eq!(out.image, img);
        assert!(out.mask.as_slice().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn geometry_must_match() {
        let err = restore_image(
            &IntensityImage::new(5, 5),
            &EventStream::empty(6, 5),
            &RestoreConfig::default(),
            TimeWindow::new(0, 10).unwrap(),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }
}
