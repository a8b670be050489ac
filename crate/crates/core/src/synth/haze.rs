use serde::{Deserialize, Serialize};

use crate::{Error, IntensityImage};

/// Atmospheric light and scattering coefficient of the haze model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HazeParams {
    pub atmospheric_light: f64,
    pub beta: f64,
}

impl Default for HazeParams {
    fn default() -> Self {
        Self {
            atmospheric_light: 0.8,
            beta: 0.05,
        }
    }
}

impl HazeParams {
    pub fn new(atmospheric_light: f64, beta: f64) -> Result<Self, Error> {
        let p = Self {
            atmospheric_light,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(0.0..=1.0).contains(&self.atmospheric_light) {
            return Err(Error::InvalidParameter(format!(
                "atmospheric light must lie in [0, 1], got {}",
                self.atmospheric_light
            )));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scattering coefficient must be finite and non-negative, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Transmission `exp(-beta * depth)`.
    #[inline]
    pub fn transmission(&self, depth: f64) -> f64 {
        (-self.beta * depth).exp()
    }
}

/// Renders haze over a clean image: `J * t + A * (1 - t)` with `t = exp(-beta * depth)`.
pub fn render_haze(
    clean: &IntensityImage,
    depth: &IntensityImage,
    params: &HazeParams,
) -> Result<IntensityImage, Error> {
    params.validate()?;
    clean.check_same_dims(depth.dims())?;
    if let Some(index) = depth
        .as_slice()
        .iter()
        .position(|d| !(*d >= 0.0 && d.is_finite()))
    {
        return Err(Error::NegativeDepth { index });
    }
    let a = params.atmospheric_light;
    let data = clean
        .as_slice()
        .iter()
        .zip(depth.as_slice())
        .map(|(&j, &d)| {
            let t = params.transmission(d);
            j * t + a * (1.0 - t)
        })
        .collect();
    IntensityImage::from_vec(clean.width(), clean.height(), data)
}
