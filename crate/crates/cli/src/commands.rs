//! Subcommand definitions and drivers.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use evdesnow_core::desnow::{restore_image, ContrastModel, Exposure, IntensitySource, RestoreConfig, VelocityPrior};
use evdesnow_core::event::{canonicalize, shift_time, voxelize};
use evdesnow_core::metrics::{occlusion_fraction, psnr, ssim, FrameMetrics, MetricReport};
use evdesnow_core::synth::procedural::random_stagger;
use evdesnow_core::synth::{
    augment_foreground, compose_frame, render_haze, simulate_flake_scene, Augmentation, CompositeConfig, HazeParams,
};
use evdesnow_core::{Event, EventStream, Homography, IntensityImage, TimeWindow};
use rayon::prelude::*;

use crate::dataset::{DatasetKind, DatasetLayout, Manifest, MANIFEST_VERSION};
use crate::error::{usage, CliError, IoError};
use crate::io::{read_events, read_image, read_mask, write_events, write_image, write_mask, write_pfm_stack};
use crate::scene::SceneDocument;

#[derive(Debug, Parser)]
#[command(name = "evdesnow", version, about = "Event-guided snow removal and synthetic snow datasets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Composite snow events onto background recordings and write a dataset.
    Compose(ComposeArgs),
    /// Remove snow from one image using its event window.
    Restore(RestoreArgs),
    /// Render a scene document with the ideal event simulator.
    Simulate(SimulateArgs),
    /// PSNR / SSIM of predictions against ground truth.
    Metrics(MetricsArgs),
    /// Bin an event window into a voxel grid.
    Voxelize(VoxelizeArgs),
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v = parse_list(s)?;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("{p:?} is not a finite number"))
        })
        .collect()
}

fn parse_homography(s: &str) -> Result<Homography, String> {
    let v = parse_list(s)?;
    let p: [f64; 8] = v
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 8 comma-separated numbers, got {}", v.len()))?;
    Homography::from_params(p).map_err(|e| e.to_string())
}

fn ms_to_us(ms: f64) -> Result<u64, CliError> {
    let us = (ms * 1000.0).round();
    if !(1.0..1e15).contains(&us) {
        return Err(CliError::Usage(format!("window of {ms} ms is not usable")));
    }
    Ok(us as u64)
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub background_events: PathBuf,
    /// One clean frame, or a directory of frames (sorted by name).
    #[arg(long)]
    pub background_image: PathBuf,
    #[arg(long)]
    pub depth: PathBuf,
    #[arg(long)]
    pub snow_events: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    pub atm_light: f64,
    #[arg(long, default_value_t = 0.05)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.15)]
    pub contrast: f64,
    #[arg(long, default_value_t = 0.9)]
    pub snow_intensity: f64,
    #[arg(long, default_value_t = 100)]
    pub overlap_us: u64,
    /// Snow speed multiplier; timestamps are divided by it.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    /// Number of staggered copies of the snow recording.
    #[arg(long, default_value_t = 1)]
    pub density: usize,
    #[arg(long)]
    pub flip: bool,
    /// Eight homography parameters a,b,c,d,e,f,g,h (the ninth entry is 1).
    #[arg(long, value_parser = parse_homography)]
    pub homography: Option<Homography>,
    #[arg(long, default_value_t = 10.0)]
    pub window_ms: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExposureArg {
    Instant,
    Swept,
}

#[derive(Debug, Args)]
pub struct RestoreArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.15)]
    pub contrast: f64,
    /// Flake brightness: a number in (0, 1], or `observed` to read it from the image.
    #[arg(long, default_value = "0.9")]
    pub flake_intensity: String,
    #[arg(long, default_value_t = 10.0)]
    pub window_ms: f64,
    /// End of the event window; defaults to just after the last event.
    #[arg(long)]
    pub frame_time_us: Option<u64>,
    #[arg(long, default_value_t = 30.0)]
    pub vmin: f64,
    #[arg(long, default_value_t = 3000.0)]
    pub vmax: f64,
    #[arg(long, default_value_t = 1.5)]
    pub tol: f64,
    #[arg(long, default_value_t = 5)]
    pub min_support: usize,
    /// Background flow vx,vy in px/s.
    #[arg(long, value_parser = parse_pair, default_value = "0,0", allow_hyphen_values = true)]
    pub flow: (f64, f64),
    /// Fixed mask radius in pixels.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long, value_enum, default_value_t = ExposureArg::Instant)]
    pub exposure: ExposureArg,
    #[arg(long)]
    pub mask_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Image file or directory.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// `.json` for the machine-readable document, anything else for text.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VoxelizeArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub bins: usize,
    #[arg(long, default_value_t = 10.0)]
    pub window_ms: f64,
    /// End of the window; defaults to just after the last event.
    #[arg(long)]
    pub end_us: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compose(a) => compose(&a),
        Command::Restore(a) => restore(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Metrics(a) => metrics(&a),
        Command::Voxelize(a) => voxel(&a),
    }
}

/// Shifts `snow` so that it starts together with the background.
fn align_start(snow: &EventStream, start: u64) -> Result<EventStream, CliError> {
    let Some((first, _)) = snow.time_span() else {
        return Ok(snow.clone());
    };
    if first <= start {
        return Ok(shift_time(snow, start - first)?);
    }
    let d = first - start;
    let events = snow.events().iter().map(|e| Event { t: e.t - d, ..*e }).collect();
    Ok(canonicalize(snow.width(), snow.height(), events)?)
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(IoError::at(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png") || e.eq_ignore_ascii_case("pfm"))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn check_dims(what: &str, img: &IntensityImage, geometry: (u32, u32)) -> Result<(), CliError> {
    if img.dims() != (geometry.0 as usize, geometry.1 as usize) {
        return Err(CliError::Usage(format!(
            "{what} is {}x{} but the events are {}x{}",
            img.width(),
            img.height(),
            geometry.0,
            geometry.1
        )));
    }
    Ok(())
}

pub fn compose(a: &ComposeArgs) -> Result<(), CliError> {
    let window_us = ms_to_us(a.window_ms)?;
    if !(a.speed.is_finite() && a.speed > 0.0) {
        return Err(CliError::Usage(format!("speed must be positive, got {}", a.speed)));
    }
    if a.density == 0 {
        return Err(CliError::Usage("density must be at least 1".into()));
    }
    let haze = HazeParams::new(a.atm_light, a.beta).map_err(usage)?;

    let clean: Vec<IntensityImage> = if a.background_image.is_dir() {
        let files = image_files(&a.background_image)?;
        if files.is_empty() {
            return Err(CliError::Usage(format!("no images in {}", a.background_image.display())));
        }
        files.iter().map(|f| read_image(f)).collect::<Result<_, _>>()?
    } else {
        vec![read_image(&a.background_image)?]
    };
    let dims = clean[0].dims();
    let hint = Some((dims.0 as u32, dims.1 as u32));
    let depth = read_image(&a.depth)?;
    let background = read_events(&a.background_events, hint)?;
    let snow = read_events(&a.snow_events, hint)?;
    let geometry = background.geometry();
    for img in &clean {
        check_dims("background image", img, geometry)?;
    }
    check_dims("depth map", &depth, geometry)?;

    let mut augmentations = Vec::new();
    if a.speed != 1.0 {
        augmentations.push(Augmentation::ScaleTime { factor: 1.0 / a.speed });
    }
    if a.flip {
        augmentations.push(Augmentation::Flip);
    }
    if let Some(h) = &a.homography {
        augmentations.push(Augmentation::Homography { matrix: *h });
    }
    if a.density > 1 {
        augmentations.push(random_stagger(a.density, window_us, geometry, a.seed).map_err(usage)?);
    }
    let config = CompositeConfig {
        alpha: a.alpha,
        contrast: a.contrast,
        snow_intensity: a.snow_intensity,
        overlap_window_us: a.overlap_us,
        augmentations,
    };
    config.validate().map_err(usage)?;

    let (first, last) = background.time_span().unwrap_or((0, 0));
    let snow = augment_foreground(&align_start(&snow, first)?, &config)?;
    let frame_count = if clean.len() > 1 {
        clean.len()
    } else {
        ((last - first + 1) / window_us).max(1) as usize
    };
    let frame_times: Vec<u64> = (1..=frame_count as u64).map(|k| first + k * window_us).collect();

    let hazy: Vec<IntensityImage> = clean
        .par_iter()
        .map(|j| render_haze(j, &depth, &haze))
        .collect::<Result<_, _>>()?;
    let layout = DatasetLayout::new(&a.out);
    layout.create(true)?;
    (0..frame_count).into_par_iter().try_for_each(|k| -> Result<(), CliError> {
        let img = k.min(clean.len() - 1);
        let window = TimeWindow::ending_at(frame_times[k], window_us)?;
        let frame = compose_frame(&background, &snow, &hazy[img], &config, window)?;
        let name = DatasetLayout::frame_name(k);
        write_image(&frame.snowy, &layout.image(&name))?;
        write_events(&frame.events, &layout.events(&name))?;
        write_image(&clean[img], &layout.gt(&name))?;
        write_image(&hazy[img], &layout.hazy(&name))?;
        write_mask(&frame.mask, &layout.mask(&name))?;
        Ok(())
    })?;
    layout.write_manifest(&Manifest {
        version: MANIFEST_VERSION,
        kind: DatasetKind::Composed,
        width: geometry.0,
        height: geometry.1,
        frame_count,
        window_us,
        frame_times_us: frame_times,
        seed: Some(a.seed),
        composite: Some(config),
        haze: Some(haze),
        contrast: None,
        background_flow: None,
    })?;
    Ok(())
}

pub fn restore(a: &RestoreArgs) -> Result<(), CliError> {
    let window_us = ms_to_us(a.window_ms)?;
    let image = read_image(&a.image)?;
    let hint = Some((image.width() as u32, image.height() as u32));
    let events = read_events(&a.events, hint)?;
    check_dims("image", &image, events.geometry())?;

    let (flake_intensity, intensity) = if a.flake_intensity.eq_ignore_ascii_case("observed") {
        (1.0, IntensitySource::Observed)
    } else {
        let r = a.flake_intensity.parse::<f64>().map_err(|_| {
            CliError::Usage(format!(
                "--flake-intensity must be a number or `observed`, got {:?}",
                a.flake_intensity
            ))
        })?;
        (r, IntensitySource::Model)
    };
    let prior = VelocityPrior {
        min_speed: a.vmin,
        max_speed: a.vmax,
        tolerance: a.tol,
        ..Default::default()
    };
    prior.validate().map_err(usage)?;
    if a.radius.is_some_and(|r| !(r >= 0.0 && r.is_finite())) {
        return Err(CliError::Usage("--radius must be non-negative".into()));
    }
    let config = RestoreConfig {
        model: ContrastModel::new(a.contrast, flake_intensity).map_err(usage)?,
        prior,
        min_support: a.min_support,
        background_flow: a.flow,
        radius: a.radius,
        intensity,
        exposure: match a.exposure {
            ExposureArg::Instant => Exposure::Instant,
            ExposureArg::Swept => Exposure::Swept,
        },
        seed: a.seed,
        ..Default::default()
    };

    let end = a
        .frame_time_us
        .or_else(|| events.time_span().map(|(_, last)| last + 1))
        .unwrap_or(window_us)
        .max(1);
    let window = TimeWindow::ending_at(end, window_us.min(end))?;
    let out = restore_image(&image, &events, &config, window)?;
    write_image(&out.image, &a.out)?;
    if let Some(p) = &a.mask_out {
        write_mask(&out.mask, p)?;
    }
    println!("streaks: {}", out.streaks.len());
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.scene).map_err(IoError::at(&a.scene))?;
    let doc = SceneDocument::parse(&text)?;
    let base = a.scene.parent().unwrap_or(Path::new("."));
    let scene = doc.to_scene(base)?;
    let sim = simulate_flake_scene(&scene)?;

    let frame_time = sim.reference_time_us + 1;
    let layout = DatasetLayout::new(&a.out);
    layout.create(false)?;
    let name = DatasetLayout::frame_name(0);
    write_image(&sim.observed, &layout.image(&name))?;
    write_events(&sim.events.slice(TimeWindow::new(0, frame_time)?), &layout.events(&name))?;
    write_image(&sim.ground_truth, &layout.gt(&name))?;
    write_mask(&sim.occlusion, &layout.mask(&name))?;
    let (w, h) = sim.ground_truth.dims();
    layout.write_manifest(&Manifest {
        version: MANIFEST_VERSION,
        kind: DatasetKind::Simulated,
        width: w as u32,
        height: h as u32,
        frame_count: 1,
        window_us: frame_time,
        frame_times_us: vec![frame_time],
        seed: None,
        composite: None,
        haze: None,
        contrast: Some(scene.contrast),
        background_flow: Some(scene.background_flow),
    })?;
    Ok(())
}

/// Pairs of (frame name, pred path, gt path, mask path).
type FramePaths = (String, PathBuf, PathBuf, Option<PathBuf>);

fn stem(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

fn find_by_stem(files: &[PathBuf], name: &str) -> Option<PathBuf> {
    files.iter().find(|f| stem(f) == name).cloned()
}

fn pair_frames(a: &MetricsArgs) -> Result<Vec<FramePaths>, CliError> {
    if !a.gt.is_dir() {
        if a.pred.is_dir() {
            return Err(CliError::Usage("--pred is a directory but --gt is a file".into()));
        }
        return Ok(vec![(stem(&a.gt), a.pred.clone(), a.gt.clone(), a.masks.clone())]);
    }
    if !a.pred.is_dir() {
        return Err(CliError::Usage("--gt is a directory but --pred is a file".into()));
    }
    let gts = image_files(&a.gt)?;
    let preds = image_files(&a.pred)?;
    let masks = match &a.masks {
        Some(m) if m.is_dir() => image_files(m)?,
        Some(_) => return Err(CliError::Usage("--masks must be a directory when --gt is".into())),
        None => Vec::new(),
    };
    gts.iter()
        .map(|g| {
            let name = stem(g);
            let pred = find_by_stem(&preds, &name)
                .ok_or_else(|| CliError::Processing(format!("no prediction for frame {name}")))?;
            let mask = if a.masks.is_some() {
                Some(
                    find_by_stem(&masks, &name)
                        .ok_or_else(|| CliError::Processing(format!("no mask for frame {name}")))?,
                )
            } else {
                None
            };
            Ok((name, pred, g.clone(), mask))
        })
        .collect()
}

pub fn metrics(a: &MetricsArgs) -> Result<(), CliError> {
    let frames = pair_frames(a)?;
    let results: Vec<FrameMetrics> = frames
        .par_iter()
        .map(|(name, pred, gt, mask)| -> Result<FrameMetrics, CliError> {
            let p = read_image(pred)?;
            let g = read_image(gt)?;
            let occlusion_fraction = match mask {
                Some(m) => Some(occlusion_fraction(&read_mask(m)?, 0.5)),
                None => None,
            };
            Ok(FrameMetrics {
                frame: name.clone(),
                psnr_db: psnr(&p, &g, 1.0)?,
                ssim: ssim(&p, &g)?,
                occlusion_fraction,
            })
        })
        .collect::<Result<_, _>>()?;
    let report = MetricReport::from_frames(results);
    let text = report.to_text();
    print!("{text}");
    if let Some(path) = &a.report {
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let body = if is_json {
            let mut j = serde_json::to_string_pretty(&report).expect("report serialises");
            j.push('\n');
            j
        } else {
            text
        };
        fs::write(path, body).map_err(IoError::at(path))?;
    }
    Ok(())
}

pub fn voxel(a: &VoxelizeArgs) -> Result<(), CliError> {
    let window_us = ms_to_us(a.window_ms)?;
    if a.bins == 0 {
        return Err(CliError::Usage("--bins must be at least 1".into()));
    }
    let events = read_events(&a.events, None)?;
    let end = a
        .end_us
        .or_else(|| events.time_span().map(|(_, last)| last + 1))
        .unwrap_or(window_us)
        .max(1);
    let window = TimeWindow::ending_at(end, window_us.min(end))?;
    let grid = voxelize(&events, a.bins, window)?;
    write_pfm_stack(&a.out, grid.width(), grid.height(), grid.as_slice())?;
    Ok(())
}
