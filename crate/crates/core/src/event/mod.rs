//! Event data model and stream-level operations.
//!
//! An [`EventStream`] always holds its events in canonical order: ascending
//! timestamp, ties broken by row, then column, then polarity. Every transform
//! in this module returns a stream that is again canonical, so streams can be
//! compared bit-for-bit and written to golden files.

mod homography;
mod transform;
mod voxel;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::Error;

pub use homography::Homography;
pub use transform::{apply_homography, flip_horizontal, scale_time, shift_time};
pub(crate) use transform::round_to_pixel;
pub use voxel::{voxelize, VoxelGrid};

/// Sign of the brightness change that triggered an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    #[inline]
    pub fn as_i8(self) -> i8 {
        match self {
            Polarity::Negative => -1,
            Polarity::Positive => 1,
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        f64::from(self.as_i8())
    }

    /// Only exactly `-1` and `+1` are valid polarities.
    pub fn from_i8(p: i8) -> Option<Self> {
        match p {
            -1 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }
}

/// A single brightness-change record. `t` is in microseconds since the stream epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, p: Polarity) -> Self {
        Self { t, x, y, p }
    }

    pub fn positive(t: u64, x: u16, y: u16) -> Self {
        Self::new(t, x, y, Polarity::Positive)
    }

    pub fn negative(t: u64, x: u16, y: u16) -> Self {
        Self::new(t, x, y, Polarity::Negative)
    }

    #[inline]
    fn canonical_key(&self) -> (u64, u16, u16, Polarity) {
        (self.t, self.y, self.x, self.p)
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_key().cmp(&other.canonical_key())
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Half-open time interval `[t0, t1)` in microseconds with `t1 > t0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    t0: u64,
    t1: u64,
}

impl TimeWindow {
    pub fn new(t0: u64, t1: u64) -> Result<Self, Error> {
        if t1 <= t0 {
            return Err(Error::InvalidWindow { t0, t1 });
        }
        Ok(Self { t0, t1 })
    }

    /// The window of length `len` ending (exclusively) at `end`, saturating at zero.
    pub fn ending_at(end: u64, len: u64) -> Result<Self, Error> {
        Self::new(end.saturating_sub(len), end)
    }

    #[inline]
    pub fn start(&self) -> u64 {
        self.t0
    }

    #[inline]
    pub fn end(&self) -> u64 {
        self.t1
    }

    #[inline]
    pub fn duration(&self) -> u64 {
        self.t1 - self.t0
    }

    #[inline]
    pub fn contains(&self, t: u64) -> bool {
        t >= self.t0 && t < self.t1
    }
}

/// Events of one sensor, in canonical order and within the sensor bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStream {
    width: u32,
    height: u32,
    events: Vec<Event>,
}

impl EventStream {
    /// Validates and canonicalises `events`; see [`canonicalize`].
    pub fn new(width: u32, height: u32, events: Vec<Event>) -> Result<Self, Error> {
        canonicalize(width, height, events)
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            events: Vec::new(),
        }
    }

    /// Callers guarantee bounds; the events are sorted here.
    pub(crate) fn from_in_bounds(width: u32, height: u32, mut events: Vec<Event>) -> Self {
        debug_assert!(events
            .iter()
            .all(|e| u32::from(e.x) < width && u32::from(e.y) < height));
        events.sort_unstable();
        Self {
            width,
            height,
            events,
        }
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn geometry(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.events.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Timestamp of the first and last event, if any.
    pub fn time_span(&self) -> Option<(u64, u64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }

    /// Index range of the events falling inside `window`.
    pub fn window_range(&self, window: TimeWindow) -> std::ops::Range<usize> {
        let lo = self.events.partition_point(|e| e.t < window.start());
        let hi = self.events.partition_point(|e| e.t < window.end());
        lo..hi
    }

    /// The sub-stream of events inside `window`.
    pub fn slice(&self, window: TimeWindow) -> EventStream {
        EventStream {
            width: self.width,
            height: self.height,
            events: self.events[self.window_range(window)].to_vec(),
        }
    }

    /// Sum of polarities of all events.
    pub fn polarity_sum(&self) -> i64 {
        self.events.iter().map(|e| i64::from(e.p.as_i8())).sum()
    }
}

/// Sorts `events` into canonical order `(t, y, x, p)` after checking that every
/// event lies inside the `width` × `height` sensor.
///
/// The sort is a total order on the full event record, so the result does not
/// depend on the input permutation and canonicalising twice is a no-op.
pub fn canonicalize(width: u32, height: u32, mut events: Vec<Event>) -> Result<EventStream, Error> {
    if let Some(index) = events
        .iter()
        .position(|e| u32::from(e.x) >= width || u32::from(e.y) >= height)
    {
        return Err(Error::OutOfBounds {
            index,
            width,
            height,
        });
    }
    events.sort_unstable();
    Ok(EventStream {
        width,
        height,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream_stays_empty() {
        let s = canonicalize(10, 10, vec![]).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn sorts_by_time_then_row_column_polarity() {
        let events = vec![
            Event::positive(5, 0, 0),
            Event::positive(3, 2, 1),
            Event::negative(3, 2, 1),
            Event::positive(3, 7, 0),
        ];
        let s = canonicalize(10, 10, events).unwrap();
        assert_eq!(
            s.events(),
            &[
                Event::positive(3, 7, 0),
                Event::negative(3, 2, 1),
                Event::positive(3, 2, 1),
                Event::positive(5, 0, 0),
            ]
        );
    }

    #[test]
    fn out_of_bounds_event_is_reported_by_index() {
        let events = vec![Event::positive(0, 1, 1), Event::positive(1, 10, 0)];
        assert_eq!(
            canonicalize(10, 10, events),
            Err(Error::OutOfBounds {
                index: 1,
                width: 10,
                height: 10
            })
        );
    }

    #[test]
    fn polarity_codes() {
        assert_eq!(Polarity::from_i8(1), Some(Polarity::Positive));
        assert_eq!(Polarity::from_i8(-1), Some(Polarity::Negative));
        assert_eq!(Polarity::from_i8(0), None);
        assert!(Polarity::Negative < Polarity::Positive);
    }

    #[test]
    fn window_rejects_reversed_bounds() {
        assert!(TimeWindow::new(5, 5).is_err());
        assert!(TimeWindow::new(6, 5).is_err());
        let w = TimeWindow::new(5, 6).unwrap();
        assert!(w.contains(5) && !w.contains(6));
    }

    #[test]
    fn slicing_uses_half_open_window() {
        let s = canonicalize(
            4,
            4,
            (0..10).map(|t| Event::positive(t, 0, 0)).collect(),
        )
        .unwrap();
        let w = TimeWindow::new(2, 5).unwrap();
        let ts: Vec<u64> = s.slice(w).events().iter().map(|e| e.t).collect();
        assert_eq!(ts, vec![2, 3, 4]);
    }
}
