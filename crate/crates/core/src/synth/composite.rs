use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::event::{apply_homography, flip_horizontal, scale_time, shift_time, Event, EventStream, Homography};
use crate::{Error, IntensityImage};

/// One step of the foreground augmentation pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Augmentation {
    /// Speed change: timestamps multiplied by `factor`.
    ScaleTime { factor: f64 },
    /// Direction change: mirror along the horizontal axis.
    Flip,
    Homography { matrix: Homography },
    /// Density change: union of `count` copies, copy `i` shifted by
    /// `offsets_us[i]` and warped by `homographies[i]`.
    Stagger {
        count: usize,
        offsets_us: Vec<u64>,
        homographies: Vec<Homography>,
    },
}

/// Parameters of the chroma-key event compositor and snow overlay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeConfig {
    /// Ambient-illumination blend of the flake layer.
    pub alpha: f64,
    /// Contrast threshold used for the visibility gate.
    pub contrast: f64,
    pub snow_intensity: f64,
    /// Background events within this many microseconds of an admitted snow
    /// event at the same pixel are suppressed.
    pub overlap_window_us: u64,
    #[serde(default)]
    pub augmentations: Vec<Augmentation>,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            contrast: 0.15,
            snow_intensity: 0.9,
            overlap_window_us: 100,
            augmentations: Vec::new(),
        }
    }
}

impl CompositeConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.contrast > 0.0 && self.contrast < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "contrast threshold must lie in (0, 1), got {}",
                self.contrast
            )));
        }
        if !(self.snow_intensity > 0.0 && self.snow_intensity <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "snow intensity must lie in (0, 1], got {}",
                self.snow_intensity
            )));
        }
        if self.overlap_window_us == 0 {
            return Err(Error::InvalidParameter("overlap window must be positive".into()));
        }
        self.augmentations.iter().try_for_each(Augmentation::validate)
    }
}

impl Augmentation {
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            Augmentation::ScaleTime { factor } if !(factor.is_finite() && *factor > 0.0) => Err(
                Error::InvalidParameter(format!("time scale must be positive, got {factor}")),
            ),
            Augmentation::Stagger {
                count,
                offsets_us,
                homographies,
            } => {
                if offsets_us.len() != *count || homographies.len() != *count {
                    return Err(Error::InvalidParameter(format!(
                        "stagger of {count} copies needs {count} offsets and homographies, got {} and {}",
                        offsets_us.len(),
                        homographies.len()
                    )));
                }
                if offsets_us.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter(
                        "stagger offsets must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Applies this step to a stream.
    pub fn apply(&self, stream: &EventStream) -> Result<EventStream, Error> {
        self.validate()?;
        match self {
            Augmentation::ScaleTime { factor } => scale_time(stream, *factor),
            Augmentation::Flip => Ok(flip_horizontal(stream)),
            Augmentation::Homography { matrix } => Ok(apply_homography(stream, matrix)),
            Augmentation::Stagger {
                offsets_us,
                homographies,
                ..
            } => {
                let mut events = Vec::new();
                for (offset, h) in offsets_us.iter().zip(homographies) {
                    let copy = apply_homography(&shift_time(stream, *offset)?, h);
                    events.extend(copy.into_events());
                }
                Ok(EventStream::from_in_bounds(stream.width(), stream.height(), events))
            }
        }
    }
}

/// Runs the configured augmentation list over the foreground snow events, in order.
pub fn augment_foreground(snow: &EventStream, config: &CompositeConfig) -> Result<EventStream, Error> {
    config
        .augmentations
        .iter()
        .try_fold(snow.clone(), |s, aug| aug.apply(&s))
}

/// Merges background and foreground snow events with two per-pixel rules.
///
/// * A snow event is kept only where the flake would be visible against the
///   hazy background: `|I_haze(x, y) - I_snow| > C`.
/// * A background event is kept only if no kept snow event fired at the same
///   pixel within `overlap_window_us`; the occluder wins.
///
/// The output consists of unmodified input events in canonical order.
pub fn composite_events(
    background: &EventStream,
    snow: &EventStream,
    hazy: &IntensityImage,
    config: &CompositeConfig,
) -> Result<EventStream, Error> {
    config.validate()?;
    let geometry = background.geometry();
    if snow.geometry() != geometry {
        return Err(Error::GeometryMismatch(format!(
            "background events are {}x{}, snow events are {}x{}",
            geometry.0,
            geometry.1,
            snow.width(),
            snow.height()
        )));
    }
    if hazy.dims() != (geometry.0 as usize, geometry.1 as usize) {
        return Err(Error::GeometryMismatch(format!(
            "events are {}x{}, hazy image is {}x{}",
            geometry.0,
            geometry.1,
            hazy.width(),
            hazy.height()
        )));
    }

    let visible = |e: &Event| {
        let background = hazy.get(usize::from(e.x), usize::from(e.y));
        (background - config.snow_intensity).abs() > config.contrast
    };
    let admitted: Vec<Event> = snow.events().iter().copied().filter(visible).collect();

    // snow events are canonical, so each pixel's list is already time-sorted
    let mut snow_times: HashMap<(u16, u16), Vec<u64>> = HashMap::new();
    for e in &admitted {
        snow_times.entry((e.x, e.y)).or_default().push(e.t);
    }
    let window = config.overlap_window_us;
    let overlaps = |e: &Event| {
        snow_times.get(&(e.x, e.y)).is_some_and(|times| {
            let first = times.partition_point(|&t| t < e.t.saturating_sub(window));
            times.get(first).is_some_and(|&t| t <= e.t.saturating_add(window))
        })
    };

    let mut events = admitted;
    events.extend(background.events().iter().copied().filter(|e| !overlaps(e)));
    Ok(EventStream::from_in_bounds(geometry.0, geometry.1, events))
}
