use super::{Event, EventStream, Homography};
use crate::Error;

/// Multiplies every timestamp by `factor`, rounding half up.
///
/// The product is evaluated exactly: `factor` is decomposed into its integer
/// mantissa and binary exponent, so the only rounding is the final one to
/// whole microseconds.
pub fn scale_time(stream: &EventStream, factor: f64) -> Result<EventStream, Error> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time scale must be a positive finite number, got {factor}"
        )));
    }
    let (mantissa, exponent) = decompose(factor);
    let events = stream
        .events()
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let t = scale_exact(e.t, mantissa, exponent).ok_or(Error::TimestampOverflow { index })?;
            Ok(Event { t, ..*e })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    // distinct timestamps may collapse onto the same microsecond, so re-sort
    Ok(EventStream::from_in_bounds(stream.width(), stream.height(), events))
}

/// Adds `offset` microseconds to every timestamp.
pub fn shift_time(stream: &EventStream, offset: u64) -> Result<EventStream, Error> {
    let events = stream
        .events()
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let t = e.t.checked_add(offset).ok_or(Error::TimestampOverflow { index })?;
            Ok(Event { t, ..*e })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(EventStream::from_in_bounds(stream.width(), stream.height(), events))
}

/// Mirrors the stream about the vertical centre line: `x -> width - 1 - x`.
pub fn flip_horizontal(stream: &EventStream) -> EventStream {
    let last = stream.width() - 1;
    let events = stream
        .events()
        .iter()
        .map(|e| Event {
            x: (last - u32::from(e.x)) as u16,
            ..*e
        })
        .collect();
    EventStream::from_in_bounds(stream.width(), stream.height(), events)
}

/// Maps every event position through `h` and rounds to the nearest pixel.
/// Events that land outside the sensor are dropped.
pub fn apply_homography(stream: &EventStream, h: &Homography) -> EventStream {
    if h.is_identity() {
        return stream.clone();
    }
    let (w, ht) = stream.geometry();
    let events = stream
        .events()
        .iter()
        .filter_map(|e| {
            let (u, v) = h.apply(f64::from(e.x), f64::from(e.y))?;
            let (x, y) = round_to_pixel(u, v, w, ht)?;
            Some(Event { x, y, ..*e })
        })
        .collect();
    EventStream::from_in_bounds(w, ht, events)
}

/// Nearest pixel (half up) for a continuous position, or `None` outside the sensor.
#[inline]
pub(crate) fn round_to_pixel(u: f64, v: f64, width: u32, height: u32) -> Option<(u16, u16)> {
    let x = (u + 0.5).floor();
    let y = (v + 0.5).floor();
    if !(x >= 0.0 && y >= 0.0 && x < f64::from(width) && y < f64::from(height)) {
        return None;
    }
    Some((x as u16, y as u16))
}

fn decompose(v: f64) -> (u128, i32) {
    let bits = v.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let frac = u128::from(bits & ((1u64 << 52) - 1));
    if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u128 << 52), exp_bits - 1075)
    }
}

fn scale_exact(t: u64, mantissa: u128, exponent: i32) -> Option<u64> {
    let product = u128::from(t) * mantissa;
    let scaled = if exponent >= 0 {
        if product == 0 {
            0
        } else {
            let shift = u32::try_from(exponent).ok()?;
            if shift >= 128 || product.leading_zeros() < shift {
                return None;
            }
            product << shift
        }
    } else {
        let shift = exponent.unsigned_abs();
        if shift >= 127 {
            0
        } else {
            (product + (1u128 << (shift - 1))) >> shift
        }
    };
    u64::try_from(scaled).ok()
}
