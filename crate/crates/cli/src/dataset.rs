//! On-disk dataset layout and its manifest.

use std::fs;
use std::path::{Path, PathBuf};

use evdesnow_core::synth::{CompositeConfig, HazeParams};
use serde::{Deserialize, Serialize};

use crate::error::IoError;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// `root/{images,events,gt,masks}/NNNNNN.*` plus `root/manifest.json`.
/// Composed datasets also carry `hazy/`, the snow-free hazy frames.
#[derive(Clone, Debug)]
pub struct DatasetLayout {
    root: PathBuf,
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn create(&self, with_hazy: bool) -> Result<(), IoError> {
        let mut dirs = vec!["images", "events", "gt", "masks"];
        if with_hazy {
            dirs.push("hazy");
        }
        for d in dirs {
            let p = self.root.join(d);
            fs::create_dir_all(&p).map_err(IoError::at(&p))?;
        }
        Ok(())
    }

    pub fn frame_name(index: usize) -> String {
        format!("{index:06}")
    }

    pub fn image(&self, name: &str) -> PathBuf {
        self.root.join("images").join(format!("{name}.png"))
    }

    pub fn events(&self, name: &str) -> PathBuf {
        self.root.join("events").join(format!("{name}.evs1"))
    }

    pub fn gt(&self, name: &str) -> PathBuf {
        self.root.join("gt").join(format!("{name}.png"))
    }

    pub fn hazy(&self, name: &str) -> PathBuf {
        self.root.join("hazy").join(format!("{name}.png"))
    }

    pub fn mask(&self, name: &str) -> PathBuf {
        self.root.join("masks").join(format!("{name}.pfm"))
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }

    /// Frame names found in `images/`, checked against `events/` and `gt/`.
    pub fn frames(&self) -> Result<Vec<String>, IoError> {
        let dir = self.root.join("images");
        let mut names: Vec<String> = fs::read_dir(&dir)
            .map_err(IoError::at(&dir))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let p = e.path();
                (p.extension()? == "png").then(|| p.file_stem()?.to_str().map(String::from))?
            })
            .collect();
        names.sort();
        for n in &names {
            for p in [self.events(n), self.gt(n)] {
                if !p.is_file() {
                    return Err(IoError::DecodeError(format!(
                        "frame {n} has no {}",
                        p.display()
                    )));
                }
            }
        }
        Ok(names)
    }

    pub fn write_manifest(&self, manifest: &Manifest) -> Result<(), IoError> {
        let path = self.manifest();
        let mut text = serde_json::to_string_pretty(manifest).expect("manifest serialises");
        text.push('\n');
        fs::write(&path, text).map_err(IoError::at(&path))
    }

    pub fn read_manifest(&self) -> Result<Manifest, IoError> {
        let path = self.manifest();
        let text = fs::read_to_string(&path).map_err(IoError::at(&path))?;
        let m: Manifest =
            serde_json::from_str(&text).map_err(|e| IoError::DecodeError(format!("manifest: {e}")))?;
        if m.version != MANIFEST_VERSION {
            return Err(IoError::UnsupportedFormat(format!("manifest version {}", m.version)));
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Composed,
    Simulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub kind: DatasetKind,
    pub width: u32,
    pub height: u32,
    pub frame_count: usize,
    pub window_us: u64,
    /// Frame `i` covers events in `[frame_times_us[i] - window_us, frame_times_us[i])`.
    pub frame_times_us: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite: Option<CompositeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub haze: Option<HazeParams>,
    /// Contrast threshold of the simulated sensor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_flow: Option<(f64, f64)>,
}
