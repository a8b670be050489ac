use approx::assert_abs_diff_eq;
use evdesnow_core::metrics::{mse, psnr, ssim, PSNR_CAP_DB};
use evdesnow_core::IntensityImage;
use proptest::prelude::*;

// direct double loop, no separable filtering
fn naive_ssim(a: &IntensityImage, b: &IntensityImage) -> f64 {
    let taps: Vec<f64> = (0..11).map(|i| (-((i as f64 - 5.0).powi(2)) / 4.5).exp()).collect();
    let norm: f64 = taps.iter().sum::<f64>().powi(2);
    let (w, h) = a.dims();
    let (c1, c2) = (0.0001, 0.0009);
    let mut total = 0.0;
    let mut n = 0;
    for oy in 0..=h - 11 {
        for ox in 0..=w - 11 {
            let (mut mx, mut my, mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..11 {
                for i in 0..11 {
                    let g = taps[i] * taps[j] / norm;
                    let (p, q) = (a.get(ox + i, oy + j), b.get(ox + i, oy + j));
                    mx += g * p;
                    my += g * q;
                    xx += g * p * p;
                    yy += g * q * q;
                    xy += g * p * q;
                }
            }
            let (vx, vy, cov) = (xx - mx * mx, yy - my * my, xy - mx * my);
            total += (2.0 * mx * my + c1) * (2.0 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            n += 1;
        }
    }
    total / n as f64
}

fn image(w: usize, h: usize) -> impl Strategy<Value = IntensityImage> {
    prop::collection::vec(0.0f64..=1.0, w * h).prop_map(move |v| IntensityImage::from_vec(w, h, v).unwrap())
}

fn pair() -> impl Strategy<Value = (IntensityImage, IntensityImage)> {
    (11usize..24, 11usize..24).prop_flat_map(|(w, h)| (image(w, h), image(w, h)))
}

#[test]
fn psnr_example_values() {
    let a = IntensityImage::filled(10, 10, 0.2);
    assert_abs_diff_eq!(psnr(&a, &a.map(|v| v + 0.01), 1.0).unwrap(), 40.0, epsilon = 1e-9);
    assert_eq!(psnr(&a, &a, 1.0).unwrap(), PSNR_CAP_DB);
}

#[test]
fn smoothed_image_ssim_matches_naive() {
    let a = IntensityImage::from_fn(40, 30, |x, y| 0.5 + 0.4 * ((x as f64) * 0.3).sin() * ((y as f64) * 0.2).cos());
    let b = a.map(|v| (v * 0.9 + 0.05).min(1.0));
    assert_abs_diff_eq!(ssim(&a, &b).unwrap(), naive_ssim(&a, &b), epsilon = 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn psnr_matches_the_formula((a, b) in pair(), peak in 0.5f64..2.0) {
        let n = a.as_slice().len() as f64;
        let m: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / n;
        assert_abs_diff_eq!(mse(&a, &b).unwrap(), m, epsilon = 1e-12);
        let expected = (10.0 * (peak * peak / m).log10()).min(PSNR_CAP_DB);
        assert_abs_diff_eq!(psnr(&a, &b, peak).unwrap(), expected, epsilon = 1e-9);
    }

    #[test]
    fn psnr_is_symmetric_and_monotone((a, b) in pair(), k in 0.1f64..0.9) {
        prop_assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
        // moving b towards a shrinks every error by k
        let closer = IntensityImage::from_fn(a.width(), a.height(), |x, y| a.get(x, y) + k * (b.get(x, y) - a.get(x, y)));
        prop_assert!(psnr(&a, &closer, 1.0).unwrap() >= psnr(&a, &b, 1.0).unwrap());
    }

    #[test]
    fn ssim_matches_naive_and_is_symmetric((a, b) in pair()) {
        let s = ssim(&a, &b).unwrap();
        assert_abs_diff_eq!(s, naive_ssim(&a, &b), epsilon = 1e-6);
        assert_abs_diff_eq!(s, ssim(&b, &a).unwrap(), epsilon = 1e-12);
        prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&s));
    }

    #[test]
    fn ssim_of_identical_images_is_one((a, _) in pair()) {
        prop_assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(psnr(&a, &a, 1.0).unwrap(), PSNR_CAP_DB);
    }
}
