use serde::{Deserialize, Serialize};

use super::{EventStream, TimeWindow};
use crate::Error;

/// `bins` × H × W temporal histogram of event polarities over a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    bins: usize,
    width: usize,
    height: usize,
    window: TimeWindow,
    data: Vec<f64>,
}

impl VoxelGrid {
    #[inline]
    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    #[inline]
    pub fn get(&self, bin: usize, x: usize, y: usize) -> f64 {
        self.data[(bin * self.height + y) * self.width + x]
    }

    /// Row-major H × W plane of one temporal bin.
    pub fn bin(&self, bin: usize) -> &[f64] {
        let plane = self.width * self.height;
        &self.data[bin * plane..(bin + 1) * plane]
    }

    /// All cells, bin-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Centre time of bin `k` in microseconds.
    pub fn bin_center(&self, k: usize) -> f64 {
        bin_center(self.window, self.bins, k)
    }
}

fn bin_center(window: TimeWindow, bins: usize, k: usize) -> f64 {
    let width = window.duration() as f64 / bins as f64;
    window.start() as f64 + (k as f64 + 0.5) * width
}

/// Bins the events in `window` into `bins` temporal channels.
///
/// Each event's polarity is split linearly between the two bin centres that
/// bracket its timestamp; events before the first centre or after the last
/// centre go entirely to the outermost bin. The deposited mass therefore
/// always equals the polarity sum of the in-window events.
pub fn voxelize(stream: &EventStream, bins: usize, window: TimeWindow) -> Result<VoxelGrid, Error> {
    if bins == 0 {
        return Err(Error::InvalidBins);
    }
    let width = stream.width() as usize;
    let height = stream.height() as usize;
    let plane = width * height;
    let mut data = vec![0.0; bins * plane];
    let bin_width = window.duration() as f64 / bins as f64;

    // events are canonical, so accumulation order (and rounding) is fixed
    for e in &stream.events()[stream.window_range(window)] {
        let pos = (e.t - window.start()) as f64 / bin_width - 0.5;
        let pixel = usize::from(e.y) * width + usize::from(e.x);
        let p = e.p.sign();
        let lower = pos.floor();
        if lower < 0.0 {
            data[pixel] += p;
        } else if lower as usize >= bins - 1 {
            data[(bins - 1) * plane + pixel] += p;
        } else {
            let k = lower as usize;
            let frac = pos - lower;
            data[k * plane + pixel] += p * (1.0 - frac);
            data[(k + 1) * plane + pixel] += p * frac;
        }
    }

    Ok(VoxelGrid {
        bins,
        width,
        height,
        window,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{canonicalize, Event};

    fn one(t: u64) -> EventStream {
        canonicalize(4, 3, vec![Event::positive(t, 1, 2)]).unwrap()
    }

    #[test]
    fn empty_stream_gives_zero_grid() {
        let g = voxelize(&EventStream::empty(4, 3), 5, TimeWindow::new(0, 100).unwrap()).unwrap();
        assert!(g.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(g.as_slice().len(), 5 * 12);
    }

    #[test]
    fn event_on_bin_centre_lands_in_one_bin() {
        // 10 bins over [0, 100): centre of bin 3 is at 35
        let g = voxelize(&one(35), 10, TimeWindow::new(0, 100).unwrap()).unwrap();
        for k in 0..10 {
            let expected = if k == 3 { 1.0 } else { 0.0 };
            assert_eq!(g.get(k, 1, 2), expected, "bin {k}");
        }
    }

    #[test]
    fn event_midway_between_centres_is_split_evenly() {
        // centres 35 and 45 -> midpoint 40
        let g = voxelize(&one(40), 10, TimeWindow::new(0, 100).unwrap()).unwrap();
        assert_eq!(g.get(3, 1, 2), 0.5);
        assert_eq!(g.get(4, 1, 2), 0.5);
        assert_eq!(g.total(), 1.0);
    }

    #[test]
    fn events_outside_the_window_are_ignored() {
        let w = TimeWindow::new(10, 20).unwrap();
        assert_eq!(voxelize(&one(20), 2, w).unwrap().total(), 0.0);
        assert_eq!(voxelize(&one(9), 2, w).unwrap().total(), 0.0);
        assert_eq!(voxelize(&one(10), 2, w).unwrap().get(0, 1, 2), 1.0);
        assert_eq!(voxelize(&one(19), 2, w).unwrap().get(1, 1, 2), 1.0);
    }

    #[test]
    fn zero_bins_is_an_error() {
        assert_eq!(
            voxelize(&one(0), 0, TimeWindow::new(0, 1).unwrap()),
            Err(Error::InvalidBins)
        );
    }

    #[test]
    fn bin_centres() {
        let g = voxelize(&one(0), 4, TimeWindow::new(100, 200).unwrap()).unwrap();
        assert_eq!(g.bin_center(0), 112.5);
        assert_eq!(g.bin_center(3), 187.5);
    }
}
