use crate::event::{EventStream, Polarity, TimeWindow};
use crate::{Error, IntensityImage, OcclusionMask};

/// Rasterises the flake layer seen during `window` from foreground snow events.
///
/// Every pixel that receives at least one positive event inside the window is
/// marked, then one 3×3 morphological closing fills the interior of thin
/// streaks. Marked pixels get `snow_intensity` in the layer and 1 in the mask.
pub fn rasterize_snow_layer(
    snow: &EventStream,
    window: TimeWindow,
    snow_intensity: f64,
) -> Result<(IntensityImage, OcclusionMask), Error> {
    if window.duration() == 0 {
        return Err(Error::EmptyWindow {
            t0: window.start(),
            t1: window.end(),
        });
    }
    let w = snow.width() as usize;
    let h = snow.height() as usize;
    let mut hit = vec![false; w * h];
    for e in &snow.events()[snow.window_range(window)] {
        if e.p == Polarity::Positive {
            hit[usize::from(e.y) * w + usize::from(e.x)] = true;
        }
    }
    let closed = erode(&dilate(&hit, w, h), w, h);

    let mut layer = IntensityImage::new(w, h);
    let mut mask = OcclusionMask::zeros(w, h);
    for (i, _) in closed.iter().enumerate().filter(|(_, &c)| c) {
        layer.set(i % w, i / w, snow_intensity);
        mask.set(i % w, i / w, 1.0);
    }
    Ok((layer, mask))
}

/// Overlays the flake layer on the hazy image: `clamp(I_haze + alpha * mask * layer, 0, 1)`.
pub fn render_snow_image(
    hazy: &IntensityImage,
    layer: &IntensityImage,
    mask: &OcclusionMask,
    alpha: f64,
) -> Result<IntensityImage, Error> {
    hazy.check_same_dims(layer.dims())?;
    hazy.check_same_dims(mask.dims())?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let data = hazy
        .as_slice()
        .iter()
        .zip(layer.as_slice())
        .zip(mask.as_slice())
        .map(|((&i, &l), &m)| (i + alpha * m * l).clamp(0.0, 1.0))
        .collect();
    IntensityImage::from_vec(hazy.width(), hazy.height(), data)
}

// Outside the image counts as background for dilation and as foreground for
// erosion, which keeps the closing extensive at the borders.
fn dilate(src: &[bool], w: usize, h: usize) -> Vec<bool> {
    morph(src, w, h, false, |acc, v| acc || v, false)
}

fn erode(src: &[bool], w: usize, h: usize) -> Vec<bool> {
    morph(src, w, h, true, |acc, v| acc && v, true)
}

fn morph(
    src: &[bool],
    w: usize,
    h: usize,
    init: bool,
    op: impl Fn(bool, bool) -> bool,
    outside: bool,
) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = init;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    let v = if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        outside
                    } else {
                        src[ny as usize * w + nx as usize]
                    };
                    acc = op(acc, v);
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}
