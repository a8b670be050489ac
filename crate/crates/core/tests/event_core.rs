use evdesnow_core::event::{
    apply_homography, canonicalize, flip_horizontal, scale_time, voxelize, Event, EventStream, Homography, Polarity,
    TimeWindow,
};
use evdesnow_core::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const W: u32 = 48;
const H: u32 = 32;

fn event_strategy(max_t: u64) -> impl Strategy<Value = Event> {
    (0..max_t, 0..W as u16, 0..H as u16, any::<bool>()).prop_map(|(t, x, y, p)| {
        Event::new(t, x, y, if p { Polarity::Positive } else { Polarity::Negative })
    })
}

fn stream_strategy(max_len: usize, max_t: u64) -> impl Strategy<Value = EventStream> {
    prop::collection::vec(event_strategy(max_t), 0..max_len).prop_map(|e| canonicalize(W, H, e).unwrap())
}

fn key(e: &Event) -> (u64, u16, u16, i8) {
    (e.t, e.y, e.x, e.p.as_i8())
}

#[test]
fn canonical_tie_order() {
    let s = canonicalize(
        10,
        10,
        vec![
            Event::positive(5, 0, 0),
            Event::positive(3, 4, 1),
            Event::negative(3, 4, 1),
            Event::positive(3, 9, 0),
        ],
    )
    .unwrap();
    assert_eq!(
        s.events(),
        &[
            Event::positive(3, 9, 0),
            Event::negative(3, 4, 1),
            Event::positive(3, 4, 1),
            Event::positive(5, 0, 0),
        ]
    );
}

#[test]
fn canonicalize_matches_reference_sort_on_shuffled_events() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut events: Vec<Event> = (0..10_000)
        .map(|_| {
            let p = if rng.random::<bool>() { Polarity::Positive } else { Polarity::Negative };
            Event::new(rng.random_range(0..2_000), rng.random_range(0..W as u16), rng.random_range(0..H as u16), p)
        })
        .collect();
    events.shuffle(&mut rng);
    let mut expected = events.clone();
    // stable comparison sort on an explicit key tuple
    expected.sort_by_key(key);
    assert_eq!(canonicalize(W, H, events).unwrap().events(), expected.as_slice());
}

#[test]
fn out_of_bounds_event_is_reported_by_index() {
    let err = canonicalize(4, 4, vec![Event::positive(0, 1, 1), Event::positive(1, 4, 0)]);
    assert!(matches!(err, Err(Error::OutOfBounds { index: 1, .. })));
}

/// Independent voxel reference: triangular kernel over bin centres with the
/// sample position clamped to the outermost centres.
fn voxel_reference(stream: &EventStream, bins: usize, window: TimeWindow) -> Vec<f64> {
    let (w, h) = (stream.width() as usize, stream.height() as usize);
    let mut out = vec![0.0; bins * w * h];
    let width = window.duration() as f64 / bins as f64;
    let first = window.start() as f64 + 0.5 * width;
    let last = window.start() as f64 + (bins as f64 - 0.5) * width;
    for e in stream.events().iter().filter(|e| window.contains(e.t)) {
        let t = (e.t as f64).clamp(first, last);
        for k in 0..bins {
            let centre = window.start() as f64 + (k as f64 + 0.5) * width;
            let weight = (1.0 - (t - centre).abs() / width).max(0.0);
            out[(k * h + usize::from(e.y)) * w + usize::from(e.x)] += weight * e.p.sign();
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn canonicalize_is_idempotent(events in prop::collection::vec(event_strategy(500), 0..300)) {
        let once = canonicalize(W, H, events.clone()).unwrap();
        let twice = canonicalize(W, H, once.events().to_vec()).unwrap();
        prop_assert_eq!(&once, &twice);
        let mut sorted_in = events;
        sorted_in.sort();
        prop_assert_eq!(once.events(), sorted_in.as_slice());
    }

    #[test]
    fn voxel_mass_is_conserved(s in stream_strategy(400, 1_000), bins in 1usize..12, t0 in 0u64..500, len in 1u64..800) {
        let window = TimeWindow::new(t0, t0 + len).unwrap();
        let grid = voxelize(&s, bins, window).unwrap();
        let mass: f64 = s.events().iter().filter(|e| window.contains(e.t)).map(|e| e.p.sign()).sum();
        prop_assert!((grid.total() - mass).abs() < 1e-9);
    }

    #[test]
    fn voxel_matches_triangular_reference(s in stream_strategy(200, 1_000), bins in 1usize..10, len in 1u64..1_200) {
        let window = TimeWindow::new(0, len).unwrap();
        let grid = voxelize(&s, bins, window).unwrap();
        let reference = voxel_reference(&s, bins, window);
        for (a, b) in grid.as_slice().iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn flip_is_an_involution_and_maps_each_event(s in stream_strategy(400, 1_000)) {
        let flipped = flip_horizontal(&s);
        let mut expected: Vec<Event> = s
            .events()
            .iter()
            .map(|e| Event { x: (W as u16 - 1) - e.x, ..*e })
            .collect();
        expected.sort();
        prop_assert_eq!(flipped.events(), expected.as_slice());
        prop_assert_eq!(flip_horizontal(&flipped), s);
    }

    #[test]
    fn scale_time_is_exact_half_up_rounding(s in stream_strategy(200, 1u64 << 40), factor in 0.01f64..50.0) {
        let scaled = scale_time(&s, factor).unwrap();
        let exact = BigRational::from_float(factor).unwrap();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let mut expected: Vec<Event> = s
            .events()
            .iter()
            .map(|e| {
                let product = BigRational::from_integer(BigInt::from(e.t)) * &exact + &half;
                Event { t: product.floor().to_integer().to_u64().unwrap(), ..*e }
            })
            .collect();
        expected.sort();
        prop_assert_eq!(scaled.events(), expected.as_slice());
    }

    #[test]
    fn scale_time_composes_within_a_microsecond(s in stream_strategy(200, 1u64 << 36), a in 0.05f64..=1.0, b in 0.25f64..4.0) {
        let twice = scale_time(&scale_time(&s, b).unwrap(), a).unwrap();
        let once = scale_time(&s, a * b).unwrap();
        prop_assert_eq!(twice.len(), once.len());
        for (x, y) in twice.events().iter().zip(once.events()) {
            prop_assert!(x.t.abs_diff(y.t) <= 1, "{} vs {}", x.t, y.t);
        }
    }

    // an outer factor above 1 stretches the inner half-microsecond rounding
    #[test]
    fn scale_time_composition_error_grows_with_the_outer_factor(s in stream_strategy(200, 1u64 << 36), a in 1.0f64..8.0, b in 0.25f64..4.0) {
        let twice = scale_time(&scale_time(&s, b).unwrap(), a).unwrap();
        let once = scale_time(&s, a * b).unwrap();
        let bound = (a / 2.0).floor() as u64 + 1;
        for (x, y) in twice.events().iter().zip(once.events()) {
            prop_assert!(x.t.abs_diff(y.t) <= bound, "{} vs {}", x.t, y.t);
        }
    }

    #[test]
    fn homography_round_trip_recovers_most_pixels(
        events in prop::collection::vec(event_strategy(1_000), 1_000),
        p in prop::array::uniform8(-1.0f64..1.0),
        shift in (-2i32..=2, -2i32..=2, -0.3f64..0.3, -0.3f64..0.3),
    ) {
        let s = canonicalize(W, H, events).unwrap();
        // sub-pixel shifts kept off the half-pixel tie, where rounding is a coin flip
        let params = [
            1.0 + 0.005 * p[0], 0.005 * p[1], f64::from(shift.0) + shift.2,
            0.005 * p[3], 1.0 + 0.005 * p[4], f64::from(shift.1) + shift.3,
            1e-6 * p[6], 1e-6 * p[7],
        ];
        let h = Homography::from_params(params).unwrap();
        let inv = h.inverse().unwrap();
        let mut kept = 0usize;
        let mut recovered = 0usize;
        for e in s.events() {
            let forward = apply_homography(&EventStream::new(W, H, vec![*e]).unwrap(), &h);
            let Some(f) = forward.events().first() else { continue };
            kept += 1;
            let back = apply_homography(&forward, &inv);
            if back.events().first().is_some_and(|b| (b.x, b.y) == (e.x, e.y)) {
                recovered += 1;
            }
            // unrounded double-precision map agrees with the rounded one
            let (u, v) = h.apply(f64::from(e.x), f64::from(e.y)).unwrap();
            prop_assert!((u - f64::from(f.x)).abs() <= 0.5 && (v - f64::from(f.y)).abs() <= 0.5);
        }
        prop_assert!(kept == 0 || recovered as f64 >= 0.95 * kept as f64, "{}/{}", recovered, kept);
        prop_assert!(apply_homography(&s, &h).len() <= s.len());
    }

    #[test]
    fn identities_are_exact(s in stream_strategy(300, 10_000)) {
        prop_assert_eq!(&scale_time(&s, 1.0).unwrap(), &s);
        prop_assert_eq!(&apply_homography(&s, &Homography::identity()), &s);
    }
}

#[test]
fn scale_time_examples() {
    let s = canonicalize(4, 4, vec![Event::positive(0, 0, 0), Event::positive(10, 0, 0), Event::positive(20, 0, 0)]).unwrap();
    let t: Vec<u64> = scale_time(&s, 2.0).unwrap().events().iter().map(|e| e.t).collect();
    assert_eq!(t, [0, 20, 40]);
    let half = canonicalize(4, 4, vec![Event::positive(1, 0, 0), Event::positive(3, 0, 0)]).unwrap();
    let t: Vec<u64> = scale_time(&half, 0.5).unwrap().events().iter().map(|e| e.t).collect();
    assert_eq!(t, [1, 2]);
    let big = canonicalize(4, 4, vec![Event::positive(u64::MAX / 2 + 1, 0, 0)]).unwrap();
    assert!(matches!(scale_time(&big, 2.0), Err(Error::TimestampOverflow { index: 0 })));
}

#[test]
fn translation_example() {
    let s = canonicalize(640, 480, vec![Event::positive(0, 638, 5), Event::positive(1, 100, 5)]).unwrap();
    let out = apply_homography(&s, &Homography::translation(5.0, 0.0));
    assert_eq!(out.events(), &[Event::positive(1, 105, 5)]);
}

#[test]
fn singular_homography_is_rejected() {
    assert!(matches!(
        Homography::from_row_major([1.0, 2.0, 0.0, 2.0, 4.0, 0.0, 0.0, 0.0, 1.0]),
        Err(Error::SingularHomography)
    ));
}
