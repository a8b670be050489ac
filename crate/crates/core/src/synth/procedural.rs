//! Seeded procedural inputs: textured backgrounds, depth maps and flake sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::composite::Augmentation;
use super::simulate::Flake;
use crate::{Error, Homography, IntensityImage};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth value-noise texture with values in `[low, high]`.
///
/// `cell` is the spacing in pixels of the random lattice; larger cells give
/// smoother images. Two octaves are mixed.
pub fn value_noise(width: usize, height: usize, cell: f64, low: f64, high: f64, seed: u64) -> IntensityImage {
    let mut r = rng(seed);
    let octave = |r: &mut ChaCha8Rng, cell: f64| {
        let gw = (width as f64 / cell).ceil() as usize + 2;
        let gh = (height as f64 / cell).ceil() as usize + 2;
        let lattice: Vec<f64> = (0..gw * gh).map(|_| r.random::<f64>()).collect();
        IntensityImage::from_fn(width, height, |x, y| {
            let gx = x as f64 / cell;
            let gy = y as f64 / cell;
            let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
            let (fx, fy) = (smoothstep(gx.fract()), smoothstep(gy.fract()));
            let at = |i: usize, j: usize| lattice[j * gw + i];
            let top = at(ix, iy) * (1.0 - fx) + at(ix + 1, iy) * fx;
            let bottom = at(ix, iy + 1) * (1.0 - fx) + at(ix + 1, iy + 1) * fx;
            top * (1.0 - fy) + bottom * fy
        })
    };
    let coarse = octave(&mut r, cell);
    let fine = octave(&mut r, (cell / 2.0).max(1.0));
    let mixed: Vec<f64> = coarse
        .as_slice()
        .iter()
        .zip(fine.as_slice())
        .map(|(a, b)| 0.7 * a + 0.3 * b)
        .collect();
    let (lo, hi) = mixed
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = (hi - lo).max(1e-12);
    let data = mixed
        .into_iter()
        .map(|v| low + (high - low) * (v - lo) / range)
        .collect();
    IntensityImage::from_vec(width, height, data).expect("dimensions match")
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Depth growing from `near` at the bottom row to `far` at the top row, as
/// in a forward-facing road scene.
pub fn depth_ramp(width: usize, height: usize, near: f64, far: f64) -> IntensityImage {
    let denom = (height.max(2) - 1) as f64;
    IntensityImage::from_fn(width, height, |_, y| far + (near - far) * y as f64 / denom)
}

/// Ranges for [`random_flakes`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlakeSampler {
    pub radius: (f64, f64),
    pub intensity: (f64, f64),
    pub speed: (f64, f64),
    /// Direction of motion in radians (image coordinates, +y is down), sampled uniformly.
    pub direction: (f64, f64),
    pub birth_us: (u64, u64),
    /// Keep this many pixels between the start position and the image border.
    pub margin: f64,
}

impl Default for FlakeSampler {
    fn default() -> Self {
        Self {
            radius: (1.0, 2.0),
            intensity: (0.9, 0.9),
            speed: (100.0, 800.0),
            direction: (std::f64::consts::FRAC_PI_4, 3.0 * std::f64::consts::FRAC_PI_4),
            birth_us: (500, 2000),
            margin: 4.0,
        }
    }
}

fn uniform(r: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.1 <= range.0 {
        range.0
    } else {
        r.random_range(range.0..range.1)
    }
}

impl FlakeSampler {
    pub fn sample(&self, r: &mut ChaCha8Rng, width: usize, height: usize) -> Flake {
        let speed = uniform(r, self.speed);
        let dir = uniform(r, self.direction);
        let m = self.margin.min(width as f64 / 2.0 - 1.0).min(height as f64 / 2.0 - 1.0);
        let birth_us = if self.birth_us.1 <= self.birth_us.0 {
            self.birth_us.0
        } else {
            r.random_range(self.birth_us.0..self.birth_us.1)
        };
        Flake {
            radius: uniform(r, self.radius),
            intensity: uniform(r, self.intensity),
            start: (
                uniform(r, (m, width as f64 - 1.0 - m)),
                uniform(r, (m, height as f64 - 1.0 - m)),
            ),
            velocity: (speed * dir.cos(), speed * dir.sin()),
            birth_us,
            death_us: None,
        }
    }
}

/// `count` flakes drawn from `sampler` with a seeded generator.
pub fn random_flakes(count: usize, width: usize, height: usize, sampler: &FlakeSampler, seed: u64) -> Vec<Flake> {
    let mut r = rng(seed);
    (0..count).map(|_| sampler.sample(&mut r, width, height)).collect()
}

/// A density augmentation with `count` copies of the foreground.
///
/// Copy 0 is untouched. The others get distinct time offsets below
/// `max_offset_us` and translations of at most a quarter of the sensor size.
pub fn random_stagger(
    count: usize,
    max_offset_us: u64,
    (width, height): (u32, u32),
    seed: u64,
) -> Result<Augmentation, Error> {
    if count == 0 || (count as u64) > max_offset_us.max(1) {
        return Err(Error::InvalidParameter(format!(
            "cannot stagger {count} copies within {max_offset_us} us"
        )));
    }
    let mut r = rng(seed);
    let mut offsets = vec![0u64];
    while offsets.len() < count {
        let t = r.random_range(1..max_offset_us);
        if !offsets.contains(&t) {
            offsets.push(t);
        }
    }
    offsets.sort_unstable();
    let (qx, qy) = (f64::from(width) / 4.0, f64::from(height) / 4.0);
    let homographies = (0..count)
        .map(|i| {
            if i == 0 {
                Homography::identity()
            } else {
                Homography::translation(
                    r.random_range(-qx..=qx).round(),
                    r.random_range(-qy..=qy).round(),
                )
            }
        })
        .collect();
    Ok(Augmentation::Stagger {
        count,
        offsets_us: offsets,
        homographies,
    })
}
