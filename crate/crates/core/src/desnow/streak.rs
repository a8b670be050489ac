use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::VelocityPrior;
use crate::EventStream;

/// A flake track: constant velocity in x-y-t and the events it explains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Streak {
    /// Pixels per second.
    pub velocity: (f64, f64),
    /// Position of the track at `anchor_us`.
    pub anchor: (f64, f64),
    pub anchor_us: u64,
    /// First and last support timestamp.
    pub span_us: (u64, u64),
    /// Indices into the stream the streak was detected in, ascending.
    pub support: Vec<usize>,
    /// Inlier distance used when the streak was fitted.
    pub tolerance: f64,
    /// Estimated flake radius in pixels.
    pub radius: f64,
}

impl Streak {
    pub fn speed(&self) -> f64 {
        self.velocity.0.hypot(self.velocity.1)
    }

    pub fn position_at(&self, t_us: f64) -> (f64, f64) {
        let dt = (t_us - self.anchor_us as f64) * 1e-6;
        (
            self.anchor.0 + self.velocity.0 * dt,
            self.anchor.1 + self.velocity.1 * dt,
        )
    }

    /// Distance between `(x, y)` and the track position at `t_us`.
    pub fn distance(&self, x: f64, y: f64, t_us: f64) -> f64 {
        let (px, py) = self.position_at(t_us);
        (x - px).hypot(y - py)
    }

    /// Time at which the track passes closest to `(x, y)`; the anchor time
    /// for a stationary track.
    pub fn closest_approach_us(&self, x: f64, y: f64) -> f64 {
        let (vx, vy) = self.velocity;
        let v2 = vx * vx + vy * vy;
        if v2 == 0.0 {
            return self.anchor_us as f64;
        }
        let s = ((x - self.anchor.0) * vx + (y - self.anchor.1) * vy) / v2;
        self.anchor_us as f64 + s * 1e6
    }

    /// Time for the track to move `pixels`, in microseconds (infinite when stationary).
    pub fn transit_us(&self, pixels: f64) -> f64 {
        let speed = self.speed();
        if speed == 0.0 {
            f64::INFINITY
        } else {
            pixels / speed * 1e6
        }
    }
}

/// Tuning of the greedy RANSAC streak search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub prior: VelocityPrior,
    pub min_support: usize,
    /// Two-event hypotheses drawn per streak.
    pub iterations: usize,
    /// Hypotheses are scored on at most this many randomly chosen events.
    pub score_sample: usize,
    pub max_streaks: usize,
    pub seed: u64,
}

impl DetectorConfig {
    pub fn new(prior: VelocityPrior, min_support: usize) -> Self {
        Self {
            prior,
            min_support,
            iterations: 300,
            score_sample: 2048,
            max_streaks: 4096,
            seed: 0,
        }
    }
}

const REFINE_ROUNDS: usize = 10;
const GIVE_UP_AFTER: usize = 3;
const RADIUS_QUANTILE: f64 = 0.9;

/// Finds flake streaks with default search settings.
pub fn detect_streaks(stream: &EventStream, prior: &VelocityPrior, min_support: usize) -> Vec<Streak> {
    detect_streaks_with(stream, &DetectorConfig::new(*prior, min_support))
}

#[derive(Clone, Copy)]
struct Line {
    x0: f64,
    y0: f64,
    t0: f64,
    vx: f64,
    vy: f64,
}

impl Line {
    #[inline]
    fn dist2(&self, p: &[f64; 3]) -> f64 {
        let dt = p[2] - self.t0;
        let dx = p[0] - self.x0 - self.vx * dt;
        let dy = p[1] - self.y0 - self.vy * dt;
        dx * dx + dy * dy
    }
}

/// Greedy RANSAC: draw two-event hypotheses, gate them by the velocity prior,
/// keep the one with most inliers, refine it by least squares, accept it if
/// it still has `min_support` inliers, remove those and repeat.
///
/// Returned streaks have disjoint supports and every support event lies
/// within `prior.tolerance` of its line.
pub fn detect_streaks_with(stream: &EventStream, config: &DetectorConfig) -> Vec<Streak> {
    let events = stream.events();
    let min_support = config.min_support.max(2);
    if events.len() < min_support {
        return Vec::new();
    }
    let origin = events[0].t;
    // time in seconds since the first event keeps velocities in px/s
    let points: Vec<[f64; 3]> = events
        .iter()
        .map(|e| [f64::from(e.x), f64::from(e.y), (e.t - origin) as f64 * 1e-6])
        .collect();
    let tol2 = config.prior.tolerance * config.prior.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pool: Vec<usize> = (0..events.len()).collect();
    let mut streaks = Vec::new();
    let mut failures = 0;

    while pool.len() >= min_support && streaks.len() < config.max_streaks && failures < GIVE_UP_AFTER {
        let scored: Vec<usize> = if pool.len() > config.score_sample {
            let mut picked: Vec<usize> = sample(&mut rng, pool.len(), config.score_sample)
                .into_iter()
                .map(|k| pool[k])
                .collect();
            picked.sort_unstable();
            picked
        } else {
            pool.clone()
        };

        let mut best: Option<(usize, Line)> = None;
        for _ in 0..config.iterations {
            let a = &points[scored[rng.random_range(0..scored.len())]];
            let b = &points[scored[rng.random_range(0..scored.len())]];
            let dt = b[2] - a[2];
            if dt == 0.0 {
                continue;
            }
            let v = ((b[0] - a[0]) / dt, (b[1] - a[1]) / dt);
            if !config.prior.admits(v) {
                continue;
            }
            let line = Line {
                x0: a[0],
                y0: a[1],
                t0: a[2],
                vx: v.0,
                vy: v.1,
            };
            let count = scored.iter().filter(|&&k| line.dist2(&points[k]) <= tol2).count();
            if best.is_none_or(|(c, _)| count > c) {
                best = Some((count, line));
            }
        }
        let Some((_, line)) = best else {
            failures += 1;
            continue;
        };

        let (line, support) = refine(line, &pool, &points, tol2);
        if support.len() < min_support || !config.prior.admits((line.vx, line.vy)) {
            failures += 1;
            continue;
        }
        failures = 0;
        streaks.push(make_streak(line, support.clone(), &points, origin, stream, config.prior.tolerance));
        let mut taken = support.into_iter().peekable();
        pool.retain(|&k| {
            if taken.peek() == Some(&k) {
                taken.next();
                false
            } else {
                true
            }
        });
    }
    streaks
}

fn inliers(line: &Line, pool: &[usize], points: &[[f64; 3]], tol2: f64) -> Vec<usize> {
    pool.iter().copied().filter(|&k| line.dist2(&points[k]) <= tol2).collect()
}

/// Alternates inlier selection and a least-squares fit of x(t), y(t).
fn refine(mut line: Line, pool: &[usize], points: &[[f64; 3]], tol2: f64) -> (Line, Vec<usize>) {
    let mut support = inliers(&line, pool, points, tol2);
    for _ in 0..REFINE_ROUNDS {
        let Some(fitted) = fit(&support, points, line) else {
            break;
        };
        let next = inliers(&fitted, pool, points, tol2);
        if next.len() < 2 {
            break;
        }
        let converged = next == support;
        line = fitted;
        support = next;
        if converged {
            break;
        }
    }
    // the returned support always matches the returned line
    let support = inliers(&line, pool, points, tol2);
    (line, support)
}

fn fit(support: &[usize], points: &[[f64; 3]], previous: Line) -> Option<Line> {
    if support.is_empty() {
        return None;
    }
    let n = support.len() as f64;
    let mean = support.iter().fold([0.0; 3], |acc, &k| {
        let p = &points[k];
        [acc[0] + p[0], acc[1] + p[1], acc[2] + p[2]]
    });
    let (mx, my, mt) = (mean[0] / n, mean[1] / n, mean[2] / n);
    let (mut stt, mut sxt, mut syt) = (0.0, 0.0, 0.0);
    for &k in support {
        let p = &points[k];
        let dt = p[2] - mt;
        stt += dt * dt;
        sxt += dt * (p[0] - mx);
        syt += dt * (p[1] - my);
    }
    let (vx, vy) = if stt > 0.0 {
        (sxt / stt, syt / stt)
    } else {
        (previous.vx, previous.vy)
    };
    Some(Line {
        x0: mx,
        y0: my,
        t0: mt,
        vx,
        vy,
    })
}

fn make_streak(
    line: Line,
    support: Vec<usize>,
    points: &[[f64; 3]],
    origin: u64,
    stream: &EventStream,
    tolerance: f64,
) -> Streak {
    let events = stream.events();
    let t_start = support.iter().map(|&k| events[k].t).min().unwrap_or(origin);
    let t_end = support.iter().map(|&k| events[k].t).max().unwrap_or(origin);
    // anchor on a whole microsecond and move the position to match
    let anchor_s = (line.t0 * 1e6).round() * 1e-6;
    let shift = anchor_s - line.t0;
    let anchored = Line {
        x0: line.x0 + line.vx * shift,
        y0: line.y0 + line.vy * shift,
        t0: anchor_s,
        ..line
    };
    let mut dists: Vec<f64> = support.iter().map(|&k| anchored.dist2(&points[k]).sqrt()).collect();
    dists.sort_by(f64::total_cmp);
    let q = ((dists.len() - 1) as f64 * RADIUS_QUANTILE).round() as usize;
    Streak {
        velocity: (line.vx, line.vy),
        anchor: (anchored.x0, anchored.y0),
        anchor_us: origin + (anchor_s * 1e6).round() as u64,
        span_us: (t_start, t_end),
        support,
        tolerance,
        radius: dists[q],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{canonicalize, Event};

    fn line_events(v: (f64, f64), start: (f64, f64), n: u64, dt_us: u64) -> Vec<Event> {
        (0..n)
            .map(|i| {
                let t = 1000 + i * dt_us;
                let s = (i * dt_us) as f64 * 1e-6;
                let x = (start.0 + v.0 * s).round() as u16;
                let y = (start.1 + v.1 * s).round() as u16;
                Event::positive(t, x, y)
            })
            .collect()
    }

    #[test]
    fn empty_stream_has_no_streaks() {
        assert!(detect_streaks(&EventStream::empty(10, 10), &VelocityPrior::default(), 5).is_empty());
    }

    #[test]
    fn recovers_a_clean_line() {
        let s = canonicalize(100, 100, line_events((200.0, 400.0), (10.0, 5.0), 100, 1000)).unwrap();
        let streaks = detect_streaks(&s, &VelocityPrior::default(), 5);
        assert_eq!(streaks.len(), 1);
        let st = &streaks[0];
        assert_eq!(st.support.len(), 100);
        assert!((st.velocity.0 - 200.0).abs() < 5.0, "{:?}", st.velocity);
        assert!((st.velocity.1 - 400.0).abs() < 5.0, "{:?}", st.velocity);
        assert_eq!(st.span_us, (1000, 100_000));
    }

    #[test]
    fn flicker_in_place_is_not_a_streak() {
        let events = (0..50)
            .map(|i| Event::new(i * 1000, 7, 7, if i % 2 == 0 { crate::Polarity::Positive } else { crate::Polarity::Negative }))
            .collect();
        let s = canonicalize(20, 20, events).unwrap();
        let prior = VelocityPrior {
            min_speed: 50.0,
            ..Default::default()
        };
        assert!(detect_streaks(&s, &prior, 5).is_empty());
    }

    #[test]
    fn two_lines_partition_their_events() {
        let mut events = line_events((0.0, 300.0), (10.0, 2.0), 60, 1000);
        events.extend(line_events((0.0, 300.0), (40.0, 2.0), 60, 1000));
        let s = canonicalize(64, 64, events).unwrap();
        let streaks = detect_streaks(&s, &VelocityPrior::default(), 5);
        assert_eq!(streaks.len(), 2);
        let total: usize = streaks.iter().map(|s| s.support.len()).sum();
        assert_eq!(total, 120);
    }

    #[test]
    fn detection_is_seeded() {
        let s = canonicalize(100, 100, line_events((150.0, 80.0), (3.0, 3.0), 80, 700)).unwrap();
        let a = detect_streaks(&s, &VelocityPrior::default(), 5);
        let b = detect_streaks(&s, &VelocityPrior::default(), 5);
        assert_eq!(a, b);
    }
}
