//! Event-guided snow removal and synthetic snowfall data generation.
//!
//! The crate is organised around five concerns:
//!
//! * [`event`]: the event data model, canonical ordering, voxelisation and
//!   geometric/temporal transforms of event streams.
//! * [`desnow`]: model-based background recovery under snow occlusion,
//!   streak detection with a velocity prior, occlusion masks and blending.
//! * [`synth`]: haze and snow rendering, chroma-key event compositing,
//!   foreground augmentation and an ideal-sensor flake scene simulator.
//! * [`metrics`]: PSNR, SSIM and occlusion statistics.
//! * [`image`]: the dense luminance and mask fields shared by all of the above.

pub mod desnow;
mod error;
pub mod event;
pub mod image;
pub mod metrics;
pub mod synth;

pub use error::Error;
pub use event::{Event, EventStream, Homography, Polarity, TimeWindow, VoxelGrid};
pub use image::{IntensityImage, OcclusionMask};

pub type Result<T, E = Error> = std::result::Result<T, E>;
