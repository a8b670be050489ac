//! Dense single-channel fields: luminance images and occlusion masks.

use serde::{Deserialize, Serialize};

use crate::Error;

/// Rec. 601 luma weights used whenever colour input has to be reduced to luminance.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// H×W luminance field, row-major, nominally in [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl IntensityImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self, Error> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                found: (data.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds a luminance image from interleaved RGB samples in [0, 1].
    pub fn from_rgb(width: usize, height: usize, rgb: &[f64]) -> Result<Self, Error> {
        if rgb.len() != 3 * width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                found: (rgb.len() / 3, 1),
            });
        }
        let data = rgb
            .chunks_exact(3)
            .map(|px| LUMA_WEIGHTS[0] * px[0] + LUMA_WEIGHTS[1] * px[1] + LUMA_WEIGHTS[2] * px[2])
            .collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Bilinear sample at continuous pixel coordinates, clamping to the border.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    pub(crate) fn check_same_dims(&self, other: (usize, usize)) -> Result<(), Error> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other,
            });
        }
        Ok(())
    }
}

/// H×W field in [0, 1]; 1 marks a pixel that is certainly snow-occluded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OcclusionMask {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl OcclusionMask {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    /// Values are clamped into [0, 1]; NaN becomes 0.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self, Error> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                found: (data.len(), 1),
            });
        }
        let data = data.into_iter().map(clamp_unit).collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(clamp_unit(f(x, y)));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = clamp_unit(value);
    }

    /// Keeps the larger of the current and the given value.
    #[inline]
    pub fn raise(&mut self, x: usize, y: usize, value: f64) {
        let cell = &mut self.data[y * self.width + x];
        *cell = cell.max(clamp_unit(value));
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

#[inline]
fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb_to_luma() {
        let img = IntensityImage::from_rgb(2, 1, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((img.get(0, 0) - 0.299).abs() < 1e-12);
        assert!((img.get(1, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mask_values_are_clamped() {
        let m = OcclusionMask::from_vec(3, 1, vec![-1.0, 0.5, 7.0]).unwrap();
        assert_eq!(m.as_slice(), &[0.0, 0.5, 1.0]);
        let mut m = m;
        m.set(0, 0, f64::NAN);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn bilinear_sampling_interpolates_and_clamps() {
        let img = IntensityImage::from_vec(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((img.sample_bilinear(0.5, 0.0) - 0.5).abs() < 1e-12);
        assert_eq!(img.sample_bilinear(-3.0, 0.0), 0.0);
        assert_eq!(img.sample_bilinear(9.0, 9.0), 1.0);
    }

    #[test]
    fn wrong_length_is_rejected() {
        assert!(IntensityImage::from_vec(2, 2, vec![0.0; 3]).is_err());
    }
}
