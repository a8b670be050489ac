//! Versioned JSON scene document consumed by `simulate`.

use std::path::Path;

use evdesnow_core::synth::procedural::{random_flakes, value_noise, FlakeSampler};
use evdesnow_core::synth::{Flake, FlakeScene};
use evdesnow_core::IntensityImage;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::io::read_image;

pub const SCENE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackgroundSpec {
    Constant {
        value: f64,
    },
    /// Seeded value-noise texture.
    Noise {
        cell: f64,
        low: f64,
        high: f64,
        seed: u64,
    },
    /// PNG or PFM file, relative to the scene document.
    Image {
        path: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomFlakes {
    pub count: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub sampler: FlakeSampler,
}

fn default_sample_rate() -> f64 {
    1000.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub background: BackgroundSpec,
    #[serde(default)]
    pub background_flow: (f64, f64),
    #[serde(default)]
    pub flakes: Vec<Flake>,
    /// Appended after the explicit flakes.
    #[serde(default)]
    pub random_flakes: Option<RandomFlakes>,
    pub duration_us: u64,
    pub contrast: f64,
    #[serde(default)]
    pub reference_time_us: Option<u64>,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
}

impl SceneDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: SceneDocument =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("scene document: {e}")))?;
        if doc.version != SCENE_VERSION {
            return Err(CliError::Usage(format!(
                "scene document version {} is not supported (expected {SCENE_VERSION})",
                doc.version
            )));
        }
        Ok(doc)
    }

    /// Resolves the background and random flakes; `base` anchors relative paths.
    pub fn to_scene(&self, base: &Path) -> Result<FlakeScene, CliError> {
        let (w, h) = (self.width, self.height);
        let background = match &self.background {
            BackgroundSpec::Constant { value } => IntensityImage::filled(w, h, *value),
            BackgroundSpec::Noise {
                cell,
                low,
                high,
                seed,
            } => value_noise(w, h, *cell, *low, *high, *seed),
            BackgroundSpec::Image { path } => {
                let img = read_image(&base.join(path))?;
                if img.dims() != (w, h) {
                    return Err(CliError::Usage(format!(
                        "background image is {}x{}, scene says {w}x{h}",
                        img.width(),
                        img.height()
                    )));
                }
                img
            }
        };
        let mut flakes = self.flakes.clone();
        if let Some(r) = &self.random_flakes {
            flakes.extend(random_flakes(r.count, w, h, &r.sampler, r.seed));
        }
        let scene = FlakeScene {
            background,
            background_flow: self.background_flow,
            flakes,
            duration_us: self.duration_us,
            contrast: self.contrast,
            reference_time_us: self.reference_time_us,
            sample_rate_hz: self.sample_rate_hz,
        };
        scene.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let doc = SceneDocument::parse(
            r#"{"version": 1, "width": 16, "height": 8,
                "background": {"kind": "constant", "value": 0.3},
                "flakes": [{"radius": 1.5, "intensity": 0.9, "start": [4, 4], "velocity": [200, 0], "birth_us": 100}],
                "random_flakes": {"count": 2, "seed": 3, "speed": [100, 200]},
                "duration_us": 5000, "contrast": 0.1}"#,
        )
        .unwrap();
        let scene = doc.to_scene(Path::new(".")).unwrap();
        assert_eq!(scene.flakes.len(), 3);
        assert_eq!(scene.background.dims(), (16, 8));
        assert_eq!(scene.sample_rate_hz, 1000.0);
    }

    #[test]
    fn wrong_version_and_unknown_fields_are_rejected() {
        let base = r#""width": 4, "height": 4, "background": {"kind": "constant", "value": 0.3}, "duration_us": 10, "contrast": 0.1"#;
        assert!(SceneDocument::parse(&format!("{{\"version\": 2, {base}}}")).is_err());
        assert!(SceneDocument::parse(&format!("{{\"version\": 1, \"colour\": 1, {base}}}")).is_err());
        assert!(SceneDocument::parse(&format!("{{\"version\": 1, {base}}}")).is_ok());
    }
}
