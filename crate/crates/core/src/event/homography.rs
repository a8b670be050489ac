use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::Error;

const MIN_DETERMINANT: f64 = 1e-12;

/// Planar projective transform with the bottom-right entry normalised to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct Homography(Matrix3<f64>);

impl Homography {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self(Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0))
    }

    /// Row-major entries; the matrix is rescaled so that the last entry is 1.
    pub fn from_row_major(m: [f64; 9]) -> Result<Self, Error> {
        if m.iter().any(|v| !v.is_finite()) || m[8].abs() < MIN_DETERMINANT {
            return Err(Error::SingularHomography);
        }
        let mat = Matrix3::from_row_slice(&m) / m[8];
        if mat.determinant().abs() <= MIN_DETERMINANT {
            return Err(Error::SingularHomography);
        }
        Ok(Self(mat))
    }

    /// The eight free parameters `a..h` of `[[a b c] [d e f] [g h 1]]`.
    pub fn from_params(p: [f64; 8]) -> Result<Self, Error> {
        Self::from_row_major([p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], 1.0])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Result<Self, Error> {
        let inv = self.0.try_inverse().ok_or(Error::SingularHomography)?;
        Self::from_row_major(Homography(inv).to_row_major())
    }

    pub fn is_identity(&self) -> bool {
        self.0 == Matrix3::identity()
    }

    /// Maps a point with perspective division; `None` when it lands at infinity.
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let v = self.0 * Vector3::new(x, y, 1.0);
        if v.z.abs() < f64::EPSILON {
            return None;
        }
        let (u, w) = (v.x / v.z, v.y / v.z);
        (u.is_finite() && w.is_finite()).then_some((u, w))
    }
}

impl Default for Homography {
    fn default() -> Self {
        Self::identity()
    }
}

impl TryFrom<[f64; 9]> for Homography {
    type Error = Error;

    fn try_from(m: [f64; 9]) -> Result<Self, Self::Error> {
        Self::from_row_major(m)
    }
}

impl From<Homography> for [f64; 9] {
    fn from(h: Homography) -> Self {
        h.to_row_major()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalises_last_entry() {
        let h = Homography::from_row_major([2.0, 0.0, 4.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(h, Homography::translation(2.0, 0.0));
    }

    #[test]
    fn singular_matrices_are_rejected() {
        assert_eq!(
            Homography::from_row_major([1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 1.0]),
            Err(Error::SingularHomography)
        );
        assert_eq!(
            Homography::from_row_major([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
            Err(Error::SingularHomography)
        );
    }

    #[test]
    fn inverse_round_trips_points() {
        let h = Homography::from_params([1.01, 0.02, 3.0, -0.01, 0.99, -2.0, 1e-4, -2e-4]).unwrap();
        let inv = h.inverse().unwrap();
        let (u, v) = h.apply(40.0, 25.0).unwrap();
        let (x, y) = inv.apply(u, v).unwrap();
        assert!((x - 40.0).abs() < 1e-9 && (y - 25.0).abs() < 1e-9);
    }

    #[test]
    fn serde_uses_row_major_array() {
        let h = Homography::translation(5.0, -1.0);
        let arr: [f64; 9] = h.into();
        assert_eq!(arr, [1.0, 0.0, 5.0, 0.0, 1.0, -1.0, 0.0, 0.0, 1.0]);
    }
}
