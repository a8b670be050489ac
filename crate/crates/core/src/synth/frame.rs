use crate::event::{EventStream, TimeWindow};
use crate::{Error, IntensityImage, OcclusionMask};

use super::composite::{composite_events, CompositeConfig};
use super::snow::{rasterize_snow_layer, render_snow_image};

/// One synthetic training sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedFrame {
    /// Hazy background with the flake layer blended on top.
    pub snowy: IntensityImage,
    /// Composited events inside the frame window.
    pub events: EventStream,
    pub layer: IntensityImage,
    pub mask: OcclusionMask,
}

/// Builds the snowy image and event slice for one frame window.
///
/// `snow` should already be augmented; both streams are restricted to
/// `window` before compositing.
pub fn compose_frame(
    background: &EventStream,
    snow: &EventStream,
    hazy: &IntensityImage,
    config: &CompositeConfig,
    window: TimeWindow,
) -> Result<ComposedFrame, Error> {
    let bg = background.slice(window);
    let fg = snow.slice(window);
    let events = composite_events(&bg, &fg, hazy, config)?;
    let (layer, mask) = rasterize_snow_layer(&fg, window, config.snow_intensity)?;
    let snowy = render_snow_image(hazy, &layer, &mask, config.alpha)?;
    Ok(ComposedFrame {
        snowy,
        events,
        layer,
        mask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{canonicalize, Event};

    #[test]
    fn frame_only_sees_its_window() {
        let bg = canonicalize(16, 16, vec![Event::negative(5, 1, 1), Event::negative(50, 2, 2)]).unwrap();
        let snow = canonicalize(16, 16, vec![Event::positive(20, 8, 8), Event::positive(60, 3, 3)]).unwrap();
        let hazy = IntensityImage::filled(16, 16, 0.3);
        let config = CompositeConfig::default();
        let frame = compose_frame(&bg, &snow, &hazy, &config, TimeWindow::new(0, 40).unwrap()).unwrap();
        assert_eq!(frame.events.events(), &[Event::negative(5, 1, 1), Event::positive(20, 8, 8)]);
        assert_eq!(frame.mask.get(8, 8), 1.0);
        assert_eq!(frame.mask.get(3, 3), 0.0);
        assert!((frame.snowy.get(8, 8) - (0.3 + 0.7 * 0.9)).abs() < 1e-12);
        assert_eq!(frame.snowy.get(0, 0), 0.3);
    }
}
