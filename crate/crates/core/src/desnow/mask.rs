use serde::{Deserialize, Serialize};

use super::Streak;
use crate::event::TimeWindow;
use crate::OcclusionMask;

/// Which flake positions count as occluding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exposure {
    /// Only where each flake is at the reference time.
    #[default]
    Instant,
    /// Everywhere a flake passed during the window, as in a long exposure.
    Swept,
}

/// Disc of `radius` around every streak's position at `t_ref`, ramped to zero
/// over one pixel. Streaks whose span does not reach `t_ref` are skipped.
pub fn build_occlusion_mask(streaks: &[Streak], t_ref: u64, geometry: (usize, usize), radius: f64) -> OcclusionMask {
    coverage(streaks, geometry, |_| radius, Exposure::Instant, (t_ref, t_ref)).mask
}

/// Capsule swept by each streak's disc over the part of its span inside `window`.
pub fn build_swept_mask(streaks: &[Streak], window: TimeWindow, geometry: (usize, usize), radius: f64) -> OcclusionMask {
    coverage(streaks, geometry, |_| radius, Exposure::Swept, (window.start(), window.end())).mask
}

/// Soft mask plus, per covered pixel, the streak that covers it most and the
/// time that streak is closest to the pixel.
pub(crate) struct Coverage {
    pub mask: OcclusionMask,
    pub owner: Vec<Option<Owner>>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Owner {
    pub streak: usize,
    pub closest_us: f64,
    distance: f64,
}

#[inline]
fn ramp(radius: f64, d: f64) -> f64 {
    (radius + 1.0 - d).clamp(0.0, 1.0)
}

/// Shared rasteriser over the time interval `limits`. For `Instant` only the
/// end of the interval is used, as the reference time.
pub(crate) fn coverage(
    streaks: &[Streak],
    geometry: (usize, usize),
    radius_of: impl Fn(&Streak) -> f64,
    exposure: Exposure,
    limits: (u64, u64),
) -> Coverage {
    let (start, end) = (limits.0 as f64, limits.1 as f64);
    let (w, h) = geometry;
    let mut mask = OcclusionMask::zeros(w, h);
    let mut owner: Vec<Option<Owner>> = vec![None; w * h];
    for (index, s) in streaks.iter().enumerate() {
        let radius = radius_of(s).max(0.0);
        let pad = s.transit_us(radius + 1.0);
        let (lo, hi) = (s.span_us.0 as f64 - pad, s.span_us.1 as f64 + pad);
        let (ta, tb) = match exposure {
            Exposure::Instant => (end, end),
            Exposure::Swept => (lo.max(start), hi.min(end)),
        };
        if ta > tb || tb < lo || ta > hi {
            continue;
        }
        let (ax, ay) = s.position_at(ta);
        let (bx, by) = s.position_at(tb);
        let reach = radius + 1.0;
        let x0 = (ax.min(bx) - reach).floor().max(0.0);
        let y0 = (ay.min(by) - reach).floor().max(0.0);
        let x1 = (ax.max(bx) + reach).ceil().min(w as f64 - 1.0);
        let y1 = (ay.max(by) + reach).ceil().min(h as f64 - 1.0);
        if x1 < x0 || y1 < y0 {
            continue;
        }
        for y in y0 as usize..=y1 as usize {
            for x in x0 as usize..=x1 as usize {
                let (px, py) = (x as f64, y as f64);
                let closest = s.closest_approach_us(px, py);
                let t_near = closest.clamp(ta, tb);
                let d = s.distance(px, py, t_near);
                let value = ramp(radius, d);
                if value <= 0.0 {
                    continue;
                }
                let slot = &mut owner[y * w + x];
                let better = match slot {
                    None => true,
                    Some(o) => {
                        let current = mask.get(x, y);
                        value > current || (value == current && d < o.distance)
                    }
                };
                if better {
                    *slot = Some(Owner {
                        streak: index,
                        closest_us: closest,
                        distance: d,
                    });
                }
                mask.raise(x, y, value);
            }
        }
    }
    Coverage { mask, owner }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn streak_at(x: f64, y: f64, t: u64, v: (f64, f64)) -> Streak {
        Streak {
            velocity: v,
            anchor: (x, y),
            anchor_us: t,
            span_us: (t.saturating_sub(5000), t + 5000),
            support: vec![0, 1],
            tolerance: 1.5,
            radius: 1.0,
        }
    }

    #[test]
    fn no_streaks_no_mask() {
        let m = build_occlusion_mask(&[], 100, (8, 8), 2.0);
        assert!(m.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disc_around_position_at_reference_time() {
        let s = streak_at(50.0, 50.0, 10_000, (100.0, 0.0));
        let m = build_occlusion_mask(&[s], 10_000, (100, 100), 2.0);
        assert_eq!(m.get(50, 50), 1.0);
        assert_eq!(m.get(52, 50), 1.0);
        assert_eq!(m.get(53, 50), 0.0);
        assert_eq!(m.get(60, 60), 0.0);
        // ramp: distance sqrt(5) from the centre
        assert!((m.get(52, 51) - (3.0 - 5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn streak_outside_its_span_is_ignored() {
        let s = streak_at(50.0, 50.0, 10_000, (100.0, 0.0));
        let m = build_occlusion_mask(&[s], 100_000, (100, 100), 2.0);
        assert!(m.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn swept_mask_covers_the_path() {
        let s = streak_at(20.0, 10.0, 10_000, (1000.0, 0.0));
        let window = TimeWindow::new(5_000, 15_000).unwrap();
        let m = build_swept_mask(&[s], window, (64, 32), 1.0);
        // centre moves from x = 15 to x = 25
        for x in 15..=25 {
            assert_eq!(m.get(x, 10), 1.0, "x = {x}");
            assert_eq!(m.get(x, 11), 1.0);
            assert_eq!(m.get(x, 12), 0.0);
        }
        assert_eq!(m.get(13, 10), 0.0);
        assert_eq!(m.get(27, 10), 0.0);
    }
}
