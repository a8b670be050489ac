//! Image-quality and occlusion statistics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, IntensityImage, OcclusionMask};

/// Reported instead of +inf when two images are (numerically) identical.
pub const PSNR_CAP_DB: f64 = 100.0;

const MSE_FLOOR: f64 = 1e-12;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Mean squared error between two images of equal size.
pub fn mse(pred: &IntensityImage, gt: &IntensityImage) -> Result<f64, Error> {
    pred.check_same_dims(gt.dims())?;
    let n = pred.as_slice().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(gt.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n as f64)
}

/// Peak signal-to-noise ratio in dB, capped at [`PSNR_CAP_DB`].
pub fn psnr(pred: &IntensityImage, gt: &IntensityImage, peak: f64) -> Result<f64, Error> {
    let mse = mse(pred, gt)?;
    if mse < MSE_FLOOR {
        return Ok(PSNR_CAP_DB);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Mean structural similarity over all fully contained 11×11 Gaussian windows
/// (σ = 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1).
pub fn ssim(pred: &IntensityImage, gt: &IntensityImage) -> Result<f64, Error> {
    pred.check_same_dims(gt.dims())?;
    let (w, h) = pred.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            min: SSIM_WINDOW,
        });
    }
    let kernel = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA);
    let x = pred.as_slice();
    let y = gt.as_slice();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mu_x = filter_valid(x, w, h, &kernel);
    let mu_y = filter_valid(y, w, h, &kernel);
    let e_xx = filter_valid(&xx, w, h, &kernel);
    let e_yy = filter_valid(&yy, w, h, &kernel);
    let e_xy = filter_valid(&xy, w, h, &kernel);

    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|i| ssim_term(mu_x[i], mu_y[i], e_xx[i], e_yy[i], e_xy[i], c1, c2))
        .sum();
    Ok(total / n as f64)
}

/// The SSIM expression for one window. Symmetric in (x, y) and exactly 1 for
/// identical statistics: every product is formed the same way for both sides.
#[inline]
fn ssim_term(mx: f64, my: f64, exx: f64, eyy: f64, exy: f64, c1: f64, c2: f64) -> f64 {
    let mxy = mx * my;
    let var_x = exx - mx * mx;
    let var_y = eyy - my * my;
    let cov = exy - mxy;
    let num = (2.0 * mxy + c1) * (2.0 * cov + c2);
    let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
    num / den
}

/// Normalised 1-D Gaussian taps.
pub(crate) fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let center = (size / 2) as f64;
    let taps: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - center;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable "valid" correlation: output is (w - k + 1) × (h - k + 1).
fn filter_valid(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let ow = w - k + 1;
    let oh = h - k + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = line[x..x + k].iter().zip(kernel).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|j| rows[(y + j) * ow + x] * kernel[j]).sum();
        }
    }
    out
}

/// Fraction of pixels whose mask value exceeds `threshold`.
pub fn occlusion_fraction(mask: &OcclusionMask, threshold: f64) -> f64 {
    let n = mask.as_slice().len();
    if n == 0 {
        return 0.0;
    }
    mask.as_slice().iter().filter(|&&v| v > threshold).count() as f64 / n as f64
}

/// Metrics of one evaluated frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub occlusion_fraction: Option<f64>,
}

/// Aggregate means over all frames of a report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub psnr_db: f64,
    pub ssim: f64,
    pub occlusion_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub frames: Vec<FrameMetrics>,
    pub mean: MetricMeans,
}

impl MetricReport {
    pub fn from_frames(frames: Vec<FrameMetrics>) -> Self {
        let n = frames.len().max(1) as f64;
        let psnr_db = frames.iter().map(|f| f.psnr_db).sum::<f64>() / n;
        let ssim = frames.iter().map(|f| f.ssim).sum::<f64>() / n;
        let fractions: Vec<f64> = frames.iter().filter_map(|f| f.occlusion_fraction).collect();
        let occlusion_fraction = (!fractions.is_empty() && fractions.len() == frames.len())
            .then(|| fractions.iter().sum::<f64>() / n);
        Self {
            mean: MetricMeans {
                psnr_db,
                ssim,
                occlusion_fraction,
            },
            frames,
        }
    }

    /// `key: value` lines, one block per frame followed by the means.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.frames {
            let _ = writeln!(out, "frame: {}", f.frame);
            let _ = writeln!(out, "psnr_db: {:.6}", f.psnr_db);
            let _ = writeln!(out, "ssim: {:.6}", f.ssim);
            if let Some(o) = f.occlusion_fraction {
                let _ = writeln!(out, "occlusion_fraction: {o:.6}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "frames: {}", self.frames.len());
        let _ = writeln!(out, "mean_psnr_db: {:.6}", self.mean.psnr_db);
        let _ = writeln!(out, "mean_ssim: {:.6}", self.mean.ssim);
        if let Some(o) = self.mean.occlusion_fraction {
            let _ = writeln!(out, "mean_occlusion_fraction: {o:.6}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> IntensityImage {
        IntensityImage::from_fn(w, h, |x, y| ((x * 7 + y * 13) % 17) as f64 / 16.0)
    }

    #[test]
    fn identical_images_hit_the_cap() {
        let a = ramp(16, 16);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn uniform_error_of_a_tenth_is_20_db() {
        let a = IntensityImage::filled(8, 8, 0.5);
        let b = IntensityImage::filled(8, 8, 0.6);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_decreases_with_error() {
        let a = IntensityImage::filled(8, 8, 0.3);
        let scores: Vec<f64> = [0.01, 0.05, 0.1]
            .iter()
            .map(|e| psnr(&a.map(|v| v + e), &a, 1.0).unwrap())
            .collect();
        assert!(scores[0] > scores[1] && scores[1] > scores[2]);
    }

    #[test]
    fn ssim_of_image_with_itself_is_one() {
        let a = ramp(20, 14);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let c = IntensityImage::filled(11, 11, 0.37);
        assert_eq!(ssim(&c, &c).unwrap(), 1.0);
    }

    #[test]
    fn inverted_binary_image_is_anticorrelated() {
        let a = IntensityImage::from_fn(24, 24, |x, y| ((x / 3 + y / 3) % 2) as f64);
        let b = a.map(|v| 1.0 - v);
        assert!(ssim(&a, &b).unwrap() < 0.0);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = IntensityImage::new(10, 30);
        assert!(matches!(ssim(&a, &a), Err(Error::TooSmall { .. })));
        let b = IntensityImage::new(12, 12);
        assert!(matches!(ssim(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn occlusion_fraction_counts_above_threshold() {
        assert_eq!(occlusion_fraction(&OcclusionMask::zeros(4, 4), 0.5), 0.0);
        let half = OcclusionMask::from_fn(4, 4, |x, _| if x < 2 { 1.0 } else { 0.0 });
        assert_eq!(occlusion_fraction(&half, 0.5), 0.5);
    }

    #[test]
    fn report_means_and_text() {
        let r = MetricReport::from_frames(vec![
            FrameMetrics {
                frame: "000000".into(),
                psnr_db: 30.0,
                ssim: 0.9,
                occlusion_fraction: Some(0.1),
            },
            FrameMetrics {
                frame: "000001".into(),
                psnr_db: 20.0,
                ssim: 0.7,
                occlusion_fraction: Some(0.3),
            },
        ]);
        assert!((r.mean.psnr_db - 25.0).abs() < 1e-12);
        assert!((r.mean.ssim - 0.8).abs() < 1e-12);
        assert!((r.mean.occlusion_fraction.unwrap() - 0.2).abs() < 1e-12);
        let text = r.to_text();
        assert!(text.contains("mean_psnr_db: 25.000000"));
        assert!(text.contains("frame: 000001"));
    }
}
