//! Synthetic snowfall data: haze, flake overlays, event compositing and an
//! ideal-sensor scene simulator.

mod composite;
mod frame;
mod haze;
pub mod procedural;
mod simulate;
mod snow;

pub use composite::{augment_foreground, composite_events, Augmentation, CompositeConfig};
pub use frame::{compose_frame, ComposedFrame};
pub use haze::{render_haze, HazeParams};
pub use simulate::{simulate_flake_scene, Flake, FlakeScene, SimulatedScene};
pub use snow::{rasterize_snow_layer, render_snow_image};
