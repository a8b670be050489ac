//! Browser bindings: simulate-and-restore, haze and voxel-grid demos.
//!
//! Every image crosses the boundary as a row-major RGBA byte buffer ready for
//! `ImageData`.

use evdesnow_core::desnow::{restore_image, ContrastModel, RestoreConfig, VelocityPrior};
use evdesnow_core::event::voxelize;
use evdesnow_core::metrics::{psnr, ssim};
use evdesnow_core::synth::procedural::{depth_ramp, random_flakes, value_noise, FlakeSampler};
use evdesnow_core::synth::{render_haze, simulate_flake_scene, FlakeScene, HazeParams};
use evdesnow_core::{IntensityImage, TimeWindow};
use wasm_bindgen::prelude::*;

fn gray_rgba(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .flat_map(|v| {
            let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            [g, g, g, 255]
        })
        .collect()
}

/// Blue for negative, red for positive, scaled by `limit`.
fn signed_rgba(values: &[f64], limit: f64) -> Vec<u8> {
    values
        .iter()
        .flat_map(|&v| {
            let a = ((v.abs() / limit).min(1.0) * 255.0).round() as u8;
            if v >= 0.0 {
                [255, 255 - a, 255 - a, 255]
            } else {
                [255 - a, 255 - a, 255, 255]
            }
        })
        .collect()
}

fn js_err(e: evdesnow_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Result of [`simulate_and_restore`].
#[wasm_bindgen]
pub struct RestoreDemo {
    snowy: Vec<u8>,
    restored: Vec<u8>,
    truth: Vec<u8>,
    mask: Vec<u8>,
    psnr_before: f64,
    psnr_after: f64,
    ssim_before: f64,
    ssim_after: f64,
    events: usize,
    streaks: usize,
}

#[wasm_bindgen]
impl RestoreDemo {
    #[wasm_bindgen(getter)]
    pub fn snowy(&self) -> Vec<u8> {
        self.snowy.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn restored(&self) -> Vec<u8> {
        self.restored.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn truth(&self) -> Vec<u8> {
        self.truth.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn mask(&self) -> Vec<u8> {
        self.mask.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn psnr_before(&self) -> f64 {
        self.psnr_before
    }
    #[wasm_bindgen(getter)]
    pub fn psnr_after(&self) -> f64 {
        self.psnr_after
    }
    #[wasm_bindgen(getter)]
    pub fn ssim_before(&self) -> f64 {
        self.ssim_before
    }
    #[wasm_bindgen(getter)]
    pub fn ssim_after(&self) -> f64 {
        self.ssim_after
    }
    #[wasm_bindgen(getter)]
    pub fn events(&self) -> usize {
        self.events
    }
    #[wasm_bindgen(getter)]
    pub fn streaks(&self) -> usize {
        self.streaks
    }
}

/// Simulates `flakes` random flakes over a textured background and removes them.
#[wasm_bindgen]
pub fn simulate_and_restore(
    size: usize,
    flakes: usize,
    contrast: f64,
    flow_x: f64,
    seed: u64,
) -> Result<RestoreDemo, JsError> {
    let duration = 20_000;
    let mut scene = FlakeScene::new(value_noise(size, size, 16.0, 0.1, 0.6, seed), contrast, duration);
    scene.background_flow = (flow_x, 0.0);
    let sampler = FlakeSampler {
        radius: (1.0, 2.5),
        speed: (200.0, 1000.0),
        direction: (0.0, std::f64::consts::TAU),
        birth_us: (500, 3000),
        margin: 6.0,
        ..Default::default()
    };
    scene.flakes = random_flakes(flakes, size, size, &sampler, seed.wrapping_add(1));
    let sim = simulate_flake_scene(&scene).map_err(js_err)?;
    let config = RestoreConfig {
        model: ContrastModel::new(contrast, 0.9).map_err(js_err)?,
        prior: VelocityPrior {
            tolerance: 3.5,
            ..Default::default()
        },
        background_flow: scene.background_flow,
        seed,
        ..Default::default()
    };
    let window = TimeWindow::new(0, duration + 1).map_err(js_err)?;
    let out = restore_image(&sim.observed, &sim.events, &config, window).map_err(js_err)?;
    let gt = &sim.ground_truth;
    Ok(RestoreDemo {
        snowy: gray_rgba(sim.observed.as_slice()),
        restored: gray_rgba(out.image.as_slice()),
        truth: gray_rgba(gt.as_slice()),
        mask: gray_rgba(out.mask.as_slice()),
        psnr_before: psnr(&sim.observed, gt, 1.0).map_err(js_err)?,
        psnr_after: psnr(&out.image, gt, 1.0).map_err(js_err)?,
        ssim_before: ssim(&sim.observed, gt).map_err(js_err)?,
        ssim_after: ssim(&out.image, gt).map_err(js_err)?,
        events: sim.events.len(),
        streaks: out.streaks.len(),
    })
}

/// Hazy version of a textured scene whose depth grows towards the top.
#[wasm_bindgen]
pub fn haze(size: usize, atmospheric_light: f64, beta: f64, seed: u64) -> Result<Vec<u8>, JsError> {
    let clean = value_noise(size, size, 16.0, 0.0, 0.7, seed);
    let depth = depth_ramp(size, size, 1.0, 40.0);
    let params = HazeParams::new(atmospheric_light, beta).map_err(js_err)?;
    Ok(gray_rgba(render_haze(&clean, &depth, &params).map_err(js_err)?.as_slice()))
}

/// Voxel grid of one moving flake; the bins are laid out left to right.
#[wasm_bindgen]
pub fn voxel_strip(size: usize, bins: usize, speed: f64, seed: u64) -> Result<Vec<u8>, JsError> {
    let duration = 20_000;
    let mut scene = FlakeScene::new(IntensityImage::filled(size, size, 0.2), 0.1, duration);
    let sampler = FlakeSampler {
        radius: (2.0, 2.0),
        speed: (speed, speed),
        birth_us: (0, 0),
        margin: size as f64 / 4.0,
        ..Default::default()
    };
    scene.flakes = random_flakes(1, size, size, &sampler, seed);
    let sim = simulate_flake_scene(&scene).map_err(js_err)?;
    let grid = voxelize(&sim.events, bins, TimeWindow::new(0, duration + 1).map_err(js_err)?).map_err(js_err)?;
    let limit = grid.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut strip = vec![0.0; bins * size * size];
    for b in 0..bins {
        for y in 0..size {
            for x in 0..size {
                strip[y * size * bins + b * size + x] = grid.get(b, x, y);
            }
        }
    }
    Ok(signed_rgba(&strip, limit))
}
