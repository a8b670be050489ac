use crate::event::{round_to_pixel, Event, EventStream};

/// Moves each event along `velocity` (px/s) to where it would sit at `t_ref`.
///
/// Positions are rounded to the nearest pixel and events that leave the
/// sensor are dropped. Timestamps are kept.
pub fn warp_events(stream: &EventStream, velocity: (f64, f64), t_ref: u64) -> EventStream {
    if velocity == (0.0, 0.0) {
        return stream.clone();
    }
    let (w, h) = stream.geometry();
    let events = stream
        .events()
        .iter()
        .filter_map(|e| {
            let (x, y) = warp_point(e, velocity, t_ref);
            let (x, y) = round_to_pixel(x, y, w, h)?;
            Some(Event { x, y, ..*e })
        })
        .collect();
    EventStream::from_in_bounds(w, h, events)
}

/// Unrounded warped position.
#[inline]
pub(crate) fn warp_point(e: &Event, velocity: (f64, f64), t_ref: u64) -> (f64, f64) {
    let dt = (t_ref as f64 - e.t as f64) * 1e-6;
    (
        f64::from(e.x) + velocity.0 * dt,
        f64::from(e.y) + velocity.1 * dt,
    )
}
