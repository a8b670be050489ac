use super::mask::{coverage, Exposure};
use super::warp::warp_events;
use super::{ContrastModel, Streak};
use crate::event::{EventStream, TimeWindow};
use crate::{Error, IntensityImage, OcclusionMask};

/// Extra pixels added to a streak's estimated radius when no fixed radius is given.
pub(crate) const RADIUS_MARGIN: f64 = 1.0;

/// Where the flake brightness `I_r` comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum FlakeIntensity<'a> {
    /// The constant of the contrast model.
    #[default]
    Model,
    /// The observed pixel value. Only the flake's own onset events are then
    /// counted, so `I_b = observed - C * (onset events)`.
    Observed(&'a IntensityImage),
}

/// Knobs of [`estimate_background_motion`] beyond the scene description.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EstimateOptions<'a> {
    /// Fixed occlusion radius; `None` uses each streak's estimate plus one pixel.
    pub radius: Option<f64>,
    pub exposure: Exposure,
    pub intensity: FlakeIntensity<'a>,
}

/// Background values recovered under streak coverage.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundEstimate {
    width: usize,
    height: usize,
    values: Vec<Option<f64>>,
    evidence: Vec<f64>,
    coverage: OcclusionMask,
}

impl BackgroundEstimate {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Estimated background, `None` outside streak coverage.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.values[y * self.width + x]
    }

    /// Accumulated (warped) polarity behind the estimate; 0 where uncovered.
    pub fn evidence(&self, x: usize, y: usize) -> f64 {
        self.evidence[y * self.width + x]
    }

    /// Soft streak coverage the estimate was computed under.
    pub fn coverage(&self) -> &OcclusionMask {
        &self.coverage
    }

    /// Coverage restricted to pixels with positive occlusion evidence.
    pub fn supported_mask(&self) -> OcclusionMask {
        OcclusionMask::from_fn(self.width, self.height, |x, y| {
            if self.evidence(x, y) > 0.0 {
                self.coverage.get(x, y)
            } else {
                0.0
            }
        })
    }

    /// Estimate where available, `fallback` elsewhere.
    pub fn to_image(&self, fallback: &IntensityImage) -> IntensityImage {
        IntensityImage::from_fn(self.width, self.height, |x, y| {
            self.get(x, y).unwrap_or_else(|| fallback.get(x, y))
        })
    }
}

/// Recovers the background behind detected streaks from the events in
/// `[window.start(), t_ref)`.
///
/// Events are first moved along `background_flow` to `t_ref`, so that each
/// output pixel sees the polarity history of the scene point that sits there
/// at the reference time. For each covered pixel the accumulated polarity is
/// taken over:
///
/// * model intensity: from the window start up to `t_ref` (instant exposure)
///   or up to the peak inside the flake's passage (swept exposure);
/// * observed intensity: the same end point, but starting when the owning
///   flake arrives, so only its own onset events count.
///
/// The result is `clamp(I_r - C * E, 0, 1)`. Uncovered pixels stay unset.
pub fn estimate_background_motion(
    model: &ContrastModel,
    stream: &EventStream,
    streaks: &[Streak],
    background_flow: (f64, f64),
    t_ref: u64,
    window: TimeWindow,
    options: &EstimateOptions<'_>,
) -> Result<BackgroundEstimate, Error> {
    model.validate()?;
    let t0 = window.start();
    if t_ref <= t0 {
        return Err(Error::EmptyWindow { t0, t1: t_ref });
    }
    if t_ref > window.end() {
        return Err(Error::InvalidParameter(format!(
            "reference time {t_ref} lies after the window end {}",
            window.end()
        )));
    }
    let (w, h) = (stream.width() as usize, stream.height() as usize);
    if let FlakeIntensity::Observed(image) = options.intensity {
        image.check_same_dims((w, h))?;
    }

    let radius_of = |s: &Streak| options.radius.unwrap_or(s.radius + RADIUS_MARGIN);
    let cover = coverage(streaks, (w, h), radius_of, options.exposure, (t0, t_ref));

    // per covered pixel: time-ordered (t, polarity) after warping
    let active = TimeWindow::new(t0, t_ref)?;
    let warped = warp_events(&stream.slice(active), background_flow, t_ref);
    let mut slot = vec![usize::MAX; w * h];
    let mut histories: Vec<Vec<(u64, f64)>> = Vec::new();
    for (i, o) in cover.owner.iter().enumerate() {
        if o.is_some() {
            slot[i] = histories.len();
            histories.push(Vec::new());
        }
    }
    for e in warped.events() {
        let s = slot[usize::from(e.y) * w + usize::from(e.x)];
        if s != usize::MAX {
            histories[s].push((e.t, e.p.sign()));
        }
    }

    let mut values = vec![None; w * h];
    let mut evidence = vec![0.0; w * h];
    let (start, end) = (t0 as f64, t_ref as f64);
    for (i, owner) in cover.owner.iter().enumerate() {
        let Some(owner) = owner else { continue };
        let streak = &streaks[owner.streak];
        let reach = streak.transit_us(radius_of(streak) + 1.0);
        let arrival = (owner.closest_us - reach).clamp(start, end);
        let (from, peak_until) = match (options.intensity, options.exposure) {
            (FlakeIntensity::Model, Exposure::Instant) => (start, None),
            (FlakeIntensity::Model, Exposure::Swept) => (start, Some(owner.closest_us + reach)),
            (FlakeIntensity::Observed(_), Exposure::Instant) => (arrival, None),
            (FlakeIntensity::Observed(_), Exposure::Swept) => (arrival, Some(owner.closest_us + reach)),
        };
        let history = &histories[slot[i]];
        let e = match peak_until {
            None => sum_between(history, from, end),
            Some(until) => peak_between(history, from, arrival, until.clamp(arrival, end)),
        };
        let flake = match options.intensity {
            FlakeIntensity::Model => model.flake_intensity,
            FlakeIntensity::Observed(image) => image.as_slice()[i],
        };
        evidence[i] = e;
        values[i] = Some((flake - model.contrast * e).clamp(0.0, 1.0));
    }

    Ok(BackgroundEstimate {
        width: w,
        height: h,
        values,
        evidence,
        coverage: cover.mask,
    })
}

/// Polarity sum of events with `from <= t < to`.
fn sum_between(history: &[(u64, f64)], from: f64, to: f64) -> f64 {
    history
        .iter()
        .filter(|&&(t, _)| t as f64 >= from && (t as f64) < to)
        .map(|&(_, p)| p)
        .sum()
}

/// Largest running sum measured from `from`, over end points in `[lo, hi]`.
fn peak_between(history: &[(u64, f64)], from: f64, lo: f64, hi: f64) -> f64 {
    let mut running = sum_between(history, from, lo);
    let mut best = running;
    for &(t, p) in history {
        let t = t as f64;
        if t >= lo && t < hi {
            running += p;
            best = best.max(running);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desnow::estimate_background_static;
    use crate::event::{canonicalize, Event};

    fn still_streak(x: f64, y: f64) -> Streak {
        Streak {
            velocity: (0.0, 0.0),
            anchor: (x, y),
            anchor_us: 0,
            span_us: (0, 10_000),
            support: vec![0, 1],
            tolerance: 1.5,
            radius: 1.0,
        }
    }

    #[test]
    fn still_scene_matches_the_static_estimate() {
        let events = vec![
            Event::positive(100, 4, 4),
            Event::positive(200, 4, 4),
            Event::negative(300, 5, 4),
            Event::positive(400, 4, 5),
            Event::positive(20_000, 4, 4),
        ];
        let s = canonicalize(10, 10, events).unwrap();
        let model = ContrastModel::new(0.1, 0.9).unwrap();
        let window = TimeWindow::new(0, 10_000).unwrap();
        let est = estimate_background_motion(
            &model,
            &s,
            &[still_streak(4.0, 4.0)],
            (0.0, 0.0),
            10_000,
            window,
            &EstimateOptions::default(),
        )
        .unwrap();
        for (x, y) in [(4u16, 4u16), (5, 4), (4, 5), (3, 3)] {
            let e = crate::desnow::accumulate_polarity(&s, (x, y), window).unwrap();
            let expected = estimate_background_static(&model, e);
            let got = est.get(usize::from(x), usize::from(y)).unwrap();
            assert!((got - expected).abs() < 1e-9);
        }
        assert!(est.get(9, 9).is_none());
    }

    #[test]
    fn reference_time_must_follow_window_start() {
        let s = EventStream::empty(4, 4);
        let model = ContrastModel::default();
        let err = estimate_background_motion(
            &model,
            &s,
            &[],
            (0.0, 0.0),
            50,
            TimeWindow::new(50, 60).unwrap(),
            &EstimateOptions::default(),
        );
        assert!(matches!(err, Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn peak_ignores_later_offset_events() {
        let h = [(10, 1.0), (11, 1.0), (12, 1.0), (30, -1.0), (31, -1.0), (32, -1.0)];
        assert_eq!(peak_between(&h, 0.0, 0.0, 40.0), 3.0);
        assert_eq!(sum_between(&h, 0.0, 40.0), 0.0);
        assert_eq!(peak_between(&h, 11.0, 11.0, 40.0), 2.0);
    }
}
