use serde::{Deserialize, Serialize};

use crate::event::{Event, EventStream};
use crate::{Error, IntensityImage, OcclusionMask};

/// Guards level comparisons against accumulated floating-point drift.
const LEVEL_EPS: f64 = 1e-9;

fn default_sample_rate() -> f64 {
    1000.0
}

/// A disc-shaped flake moving at constant velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flake {
    pub radius: f64,
    pub intensity: f64,
    /// Centre at `birth_us`, in pixels.
    pub start: (f64, f64),
    /// Pixels per second.
    pub velocity: (f64, f64),
    #[serde(default)]
    pub birth_us: u64,
    #[serde(default)]
    pub death_us: Option<u64>,
}

impl Flake {
    #[inline]
    pub fn is_alive(&self, t_us: u64) -> bool {
        t_us >= self.birth_us && self.death_us.is_none_or(|d| t_us < d)
    }

    /// Centre position at `t_us` (extrapolated, regardless of lifetime).
    #[inline]
    pub fn center(&self, t_us: u64) -> (f64, f64) {
        let dt = (t_us as f64 - self.birth_us as f64) * 1e-6;
        (
            self.start.0 + self.velocity.0 * dt,
            self.start.1 + self.velocity.1 * dt,
        )
    }

    /// True when the pixel centre `(x, y)` lies inside the disc at `t_us`.
    #[inline]
    pub fn covers(&self, x: usize, y: usize, t_us: u64) -> bool {
        if !self.is_alive(t_us) {
            return false;
        }
        let (cx, cy) = self.center(t_us);
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        dx * dx + dy * dy <= self.radius * self.radius
    }
}

/// Parametric description of a snow scene for the ideal-sensor simulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlakeScene {
    pub background: IntensityImage,
    /// Translation of the background in pixels per second.
    #[serde(default)]
    pub background_flow: (f64, f64),
    pub flakes: Vec<Flake>,
    pub duration_us: u64,
    /// Contrast threshold of the simulated sensor (linear intensity units).
    pub contrast: f64,
    /// Time of the returned frame, mask and ground truth; defaults to `duration_us`.
    #[serde(default)]
    pub reference_time_us: Option<u64>,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
}

/// Output of [`simulate_flake_scene`].
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedScene {
    pub events: EventStream,
    /// Snow-free background at the reference time.
    pub ground_truth: IntensityImage,
    /// What a camera sees at the reference time, flakes included.
    pub observed: IntensityImage,
    /// Binary mask of pixels covered by a flake at the reference time.
    pub occlusion: OcclusionMask,
    pub reference_time_us: u64,
}

impl FlakeScene {
    pub fn new(background: IntensityImage, contrast: f64, duration_us: u64) -> Self {
        Self {
            background,
            background_flow: (0.0, 0.0),
            flakes: Vec::new(),
            duration_us,
            contrast,
            reference_time_us: None,
            sample_rate_hz: default_sample_rate(),
        }
    }

    pub fn reference_time(&self) -> u64 {
        self.reference_time_us.unwrap_or(self.duration_us)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let invalid = |msg: String| Err(Error::InvalidScene(msg));
        let (w, h) = self.background.dims();
        if w == 0 || h == 0 || w > usize::from(u16::MAX) || h > usize::from(u16::MAX) {
            return invalid(format!("unsupported background size {w}x{h}"));
        }
        if self.duration_us == 0 {
            return invalid("duration must be positive".into());
        }
        if !(self.contrast > 0.0 && self.contrast < 1.0) {
            return invalid(format!("contrast must lie in (0, 1), got {}", self.contrast));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz >= 1.0) {
            return invalid(format!("sample rate must be >= 1 Hz, got {}", self.sample_rate_hz));
        }
        if self.reference_time() > self.duration_us {
            return invalid("reference time lies after the end of the scene".into());
        }
        if !(self.background_flow.0.is_finite() && self.background_flow.1.is_finite()) {
            return invalid("background flow must be finite".into());
        }
        for (i, f) in self.flakes.iter().enumerate() {
            if !(f.intensity > 0.0 && f.intensity <= 1.0) {
                return invalid(format!("flake {i}: intensity must lie in (0, 1]"));
            }
            if !(f.radius > 0.0 && f.radius.is_finite()) {
                return invalid(format!("flake {i}: radius must be positive"));
            }
            if !(f.velocity.0.is_finite() && f.velocity.1.is_finite()) {
                return invalid(format!("flake {i}: velocity must be finite"));
            }
            let (x, y) = f.start;
            if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
                return invalid(format!("flake {i}: starts outside the image at ({x}, {y})"));
            }
            if f.death_us.is_some_and(|d| d <= f.birth_us) {
                return invalid(format!("flake {i}: dies before it is born"));
            }
        }
        Ok(())
    }

    /// The snow-free background at `t_us`.
    pub fn background_at(&self, t_us: u64) -> IntensityImage {
        let (fx, fy) = self.background_flow;
        if fx == 0.0 && fy == 0.0 {
            return self.background.clone();
        }
        let dt = t_us as f64 * 1e-6;
        let (ox, oy) = (fx * dt, fy * dt);
        let (w, h) = self.background.dims();
        IntensityImage::from_fn(w, h, |x, y| {
            self.background.sample_bilinear(x as f64 - ox, y as f64 - oy)
        })
    }

    /// The observed frame at `t_us`: background with live flakes painted on
    /// top, later flakes in front of earlier ones.
    pub fn render(&self, t_us: u64) -> IntensityImage {
        let mut frame = self.background_at(t_us);
        self.for_each_covered(t_us, |x, y, flake| frame.set(x, y, flake.intensity));
        frame
    }

    pub fn occlusion_at(&self, t_us: u64) -> OcclusionMask {
        let (w, h) = self.background.dims();
        let mut mask = OcclusionMask::zeros(w, h);
        self.for_each_covered(t_us, |x, y, _| mask.set(x, y, 1.0));
        mask
    }

    fn for_each_covered(&self, t_us: u64, mut f: impl FnMut(usize, usize, &Flake)) {
        let (w, h) = self.background.dims();
        for flake in self.flakes.iter().filter(|f| f.is_alive(t_us)) {
            let (cx, cy) = flake.center(t_us);
            let r = flake.radius;
            let x0 = (cx - r).ceil().max(0.0);
            let y0 = (cy - r).ceil().max(0.0);
            let x1 = (cx + r).floor().min((w - 1) as f64);
            let y1 = (cy + r).floor().min((h - 1) as f64);
            if x1 < x0 || y1 < y0 {
                continue;
            }
            for y in y0 as usize..=y1 as usize {
                for x in x0 as usize..=x1 as usize {
                    if flake.covers(x, y, t_us) {
                        f(x, y, flake);
                    }
                }
            }
        }
    }

    fn sample_times(&self) -> Vec<u64> {
        let step = ((1e6 / self.sample_rate_hz).round() as u64).max(1);
        let mut times: Vec<u64> = (0..)
            .map(|k| k * step)
            .take_while(|&t| t < self.duration_us)
            .collect();
        times.push(self.duration_us);
        times.push(self.reference_time());
        // flake appearances and disappearances are sampled exactly
        for f in &self.flakes {
            times.push(f.birth_us.min(self.duration_us));
            if let Some(d) = f.death_us {
                times.push(d.min(self.duration_us));
            }
        }
        times.sort_unstable();
        times.dedup();
        times
    }
}

/// Runs an ideal linear-contrast event sensor over the scene.
///
/// The scene is rendered at `sample_rate_hz` (plus the reference time and
/// every flake birth and death). Each pixel keeps a reference level
/// `base + k * C`; whenever the rendered intensity moves at least one
/// threshold away from it, one event per crossed level is emitted, with its
/// timestamp interpolated linearly between the two samples.
pub fn simulate_flake_scene(scene: &FlakeScene) -> Result<SimulatedScene, Error> {
    scene.validate()?;
    let (w, h) = scene.background.dims();
    let c = scene.contrast;
    let times = scene.sample_times();

    let mut previous = scene.render(times[0]);
    let base: Vec<f64> = previous.as_slice().to_vec();
    let mut level = vec![0i64; w * h];
    let mut events = Vec::new();

    for pair in times.windows(2) {
        let (ta, tb) = (pair[0], pair[1]);
        let current = scene.render(tb);
        let span = (tb - ta) as f64;
        for (i, (&ia, &ib)) in previous.as_slice().iter().zip(current.as_slice()).enumerate() {
            if ia == ib {
                continue;
            }
            let (x, y) = ((i % w) as u16, (i / w) as u16);
            let stamp = |crossing: f64| {
                let frac = ((crossing - ia) / (ib - ia)).clamp(0.0, 1.0);
                ta + (frac * span).round() as u64
            };
            while ib >= base[i] + (level[i] + 1) as f64 * c - LEVEL_EPS {
                level[i] += 1;
                events.push(Event::positive(stamp(base[i] + level[i] as f64 * c), x, y));
            }
            while ib <= base[i] + (level[i] - 1) as f64 * c + LEVEL_EPS {
                level[i] -= 1;
                events.push(Event::negative(stamp(base[i] + level[i] as f64 * c), x, y));
            }
        }
        previous = current;
    }

    let t_ref = scene.reference_time();
    Ok(SimulatedScene {
        events: EventStream::from_in_bounds(w as u32, h as u32, events),
        ground_truth: scene.background_at(t_ref),
        observed: scene.render(t_ref),
        occlusion: scene.occlusion_at(t_ref),
        reference_time_us: t_ref,
    })
}
