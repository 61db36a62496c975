mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slackwatch_core::alt::canny::{canny, hysteresis};
use slackwatch_core::alt::polyfit_least_squares;
use slackwatch_core::frame::{to_grayscale, write_pgm};
use slackwatch_core::preprocess::{bilateral_filter, gaussian_blur};
use slackwatch_core::roi::{point_in_polygon, rasterize};
use slackwatch_core::{open_sequence, BlurSpec, Frame, RoiPolygon};

#[test]
fn gaussian_blur_matches_float_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let f = random_frame(&mut rng, 64, 64);
        let radius = rng.random_range(1..=4u32);
        let sigma = rng.random_range(0.5..3.0);
        let got = gaussian_blur(&f, &BlurSpec::gaussian(radius, sigma)).unwrap();
        let want = float_gaussian(&f, radius as usize, sigma);
        assert!(
            max_abs_diff(got.pixels(), &want) <= 1,
            "r={radius} s={sigma}"
        );
    }
}

#[test]
fn bilateral_matches_float_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let f = random_frame(&mut rng, 64, 64);
        let radius = rng.random_range(1..=2u32);
        let ss = rng.random_range(0.8..2.5);
        let sr = rng.random_range(5.0..80.0);
        let got = bilateral_filter(&f, &BlurSpec::bilateral(radius, ss, sr)).unwrap();
        let want = float_bilateral(&f, radius as usize, ss, sr);
        assert!(
            max_abs_diff(got.pixels(), &want) <= 1,
            "r={radius} ss={ss} sr={sr}"
        );
    }
}

#[test]
fn bilateral_output_stays_within_window_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let f = random_frame(&mut rng, 32, 32);
    let out = bilateral_filter(&f, &BlurSpec::bilateral(2, 1.5, 30.0)).unwrap();
    for y in 0..32usize {
        for x in 0..32usize {
            let window: Vec<u8> = (y.saturating_sub(2)..(y + 3).min(32))
                .flat_map(|yy| (x.saturating_sub(2)..(x + 3).min(32)).map(move |xx| (xx, yy)))
                .map(|(xx, yy)| f.get(xx, yy))
                .collect();
            let v = out.get(x, y);
            assert!(v >= *window.iter().min().unwrap() && v <= *window.iter().max().unwrap());
        }
    }
}

#[test]
fn bilateral_step_edge_barely_moves() {
    let px: Vec<u8> = (0..32 * 16)
        .map(|i| if i % 32 < 16 { 0 } else { 255 })
        .collect();
    let f = Frame::new(0, 0, 32, 16, px).unwrap();
    let out = bilateral_filter(&f, &BlurSpec::bilateral(3, 2.0, 10.0)).unwrap();
    for y in 0..16 {
        assert!(out.get(15, y) <= 1);
        assert!(out.get(16, y) >= 254);
    }
}

#[test]
fn gaussian_impulse_centre() {
    let mut px = vec![0u8; 81];
    px[40] = 255;
    let f = Frame::new(0, 0, 9, 9, px).unwrap();
    let out = gaussian_blur(&f, &BlurSpec::gaussian(1, 0.8)).unwrap();
    let e = (-1.0f64 / (2.0 * 0.64)).exp();
    let k0 = 1.0 / (1.0 + 2.0 * e);
    assert_eq!(out.get(4, 4), (255.0 * k0 * k0).round() as u8);
}

fn relative_close(got: &[f64], want: &[f64], tol: f64) -> bool {
    let scale = want
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    got.iter()
        .zip(want)
        .all(|(g, w)| (g - w).abs() <= tol * scale)
}

#[test]
fn polyfit_matches_rational_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for degree in 1..=5 {
        for _ in 0..10 {
            let pts: Vec<(f64, f64)> = (0..50)
                .map(|_| (rng.random_range(-20.0..60.0), rng.random_range(-50.0..50.0)))
                .collect();
            let got = polyfit_least_squares(&pts, degree).unwrap();
            let want = rational_polyfit(&pts, degree);
            assert!(
                relative_close(&got.coefficients, &want, 1e-9),
                "d={degree}\n{:?}\n{:?}",
                got.coefficients,
                want
            );
        }
    }
}

#[test]
fn polyfit_exact_cases() {
    let line: Vec<(f64, f64)> = (0..10).map(|x| (x as f64, 2.0 * x as f64 + 1.0)).collect();
    let m = polyfit_least_squares(&line, 1).unwrap();
    assert!(relative_close(&m.coefficients, &[1.0, 2.0], 1e-12));
    assert!(m.rms_residual < 1e-9);
    let sq: Vec<(f64, f64)> = (-5..=5).map(|x| (x as f64, (x * x) as f64)).collect();
    let m = polyfit_least_squares(&sq, 2).unwrap();
    for (c, w) in m.coefficients.iter().zip([0.0, 0.0, 1.0]) {
        assert!((c - w).abs() < 1e-9);
    }
}

#[test]
fn polyfit_residual_shift_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let pts: Vec<(f64, f64)> = (0..40)
        .map(|_| (rng.random_range(0.0..100.0), rng.random_range(0.0..10.0)))
        .collect();
    let base = polyfit_least_squares(&pts, 3).unwrap().rms_residual;
    for shift in [-1000.0, -3.5, 0.25, 777.0] {
        let moved: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x + shift, y)).collect();
        let r = polyfit_least_squares(&moved, 3).unwrap().rms_residual;
        assert!((r - base).abs() < 1e-9, "shift {shift}: {r} vs {base}");
    }
}

fn step_frame(w: usize, h: usize, at: usize, vertical: bool, lo: u8, hi: u8) -> Frame {
    let px: Vec<u8> = (0..w * h)
        .map(|i| {
            let c = if vertical { i % w } else { i / w };
            if c < at {
                lo
            } else {
                hi
            }
        })
        .collect();
    Frame::new(0, 0, w, h, px).unwrap()
}

#[test]
fn canny_localizes_steps_within_one_pixel() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..40 {
        let at = rng.random_range(4..28);
        let vertical = rng.random_bool(0.5);
        let (lo, hi) = (rng.random_range(0..80u8), rng.random_range(150..=255u8));
        let f = step_frame(32, 32, at, vertical, lo, hi);
        let edges = canny(&f, 40.0, 100.0, &BlurSpec::gaussian(1, 1.0)).unwrap();
        for line in 2..30 {
            let hits: Vec<usize> = (0..32)
                .filter(|&c| {
                    if vertical {
                        edges.get(c, line)
                    } else {
                        edges.get(line, c)
                    }
                })
                .collect();
            assert_eq!(hits.len(), 1, "one pixel wide at line {line}: {hits:?}");
            let boundary = at as f64 - 0.5;
            assert!(
                (hits[0] as f64 - boundary).abs() <= 1.0,
                "at={at} got {hits:?}"
            );
        }
    }
}

#[test]
fn canny_ramp_edges_are_one_pixel_wide() {
    for width in 2usize..6 {
        let px: Vec<u8> = (0usize..40 * 20)
            .map(|i| {
                let x = i % 40;
                (x.saturating_sub(15).min(width) * 200 / width) as u8
            })
            .collect();
        let f = Frame::new(0, 0, 40, 20, px).unwrap();
        let edges = canny(&f, 20.0, 60.0, &BlurSpec::gaussian(1, 0.8)).unwrap();
        for y in 2..18 {
            let row = (0..40).filter(|&x| edges.get(x, y)).count();
            assert_eq!(row, 1, "ramp width {width} row {y}");
        }
    }
}

#[test]
fn hysteresis_matches_connectivity_oracle() {
    // Strong segment, weak bridge touching it, and an isolated weak run.
    let (w, h) = (16, 16);
    let mut mag = vec![0.0; w * h];
    for x in 2..7 {
        mag[5 * w + x] = 150.0;
    }
    for x in 7..11 {
        mag[6 * w + x] = 50.0;
    }
    for x in 3..12 {
        mag[12 * w + x] = 60.0;
    }
    mag[13 * w + 13] = 40.0;
    let got = hysteresis(&mag, w, h, 40.0, 100.0);
    let want = connected_edges(&mag, w, h, 40.0, 100.0);
    assert_eq!(got, want);
    assert!(got[6 * w + 10]);
    assert!(!got[12 * w + 5]);

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let mag: Vec<f64> = (0..w * h)
            .map(|_| {
                if rng.random_bool(0.4) {
                    rng.random_range(0.0..200.0)
                } else {
                    0.0
                }
            })
            .collect();
        assert_eq!(
            hysteresis(&mag, w, h, 40.0, 100.0),
            connected_edges(&mag, w, h, 40.0, 100.0)
        );
    }
}

#[test]
fn grayscale_within_one_of_exact_luma() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let rgb: Vec<u8> = (0..3 * 64 * 64).map(|_| rng.random()).collect();
    let got = to_grayscale(&rgb, 64, 64).unwrap();
    for (px, g) in rgb.chunks_exact(3).zip(got) {
        assert!(g.abs_diff(exact_luma(px[0], px[1], px[2])) <= 1);
    }
    assert_eq!(
        to_grayscale(&[255, 0, 0, 255, 255, 255, 0, 0, 0], 3, 1).unwrap(),
        vec![76, 255, 0]
    );
}

#[test]
fn pgm_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let frames: Vec<Frame> = (0..3).map(|_| random_frame(&mut rng, 64, 48)).collect();
    for (i, f) in frames.iter().enumerate() {
        write_pgm(f, dir.path().join(format!("f{i:03}.pgm"))).unwrap();
    }
    let back: Vec<Frame> = open_sequence(dir.path())
        .unwrap()
        .map(|f| f.unwrap())
        .collect();
    assert_eq!(back.len(), 3);
    for (i, (a, b)) in frames.iter().zip(&back).enumerate() {
        assert_eq!(b.index(), i as u64);
        assert_eq!(a.pixels(), b.pixels());
    }
}

#[test]
fn rasterize_matches_point_in_polygon_exhaustively() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut checked = 0;
    while checked < 50 {
        let poly = random_polygon(&mut rng, 128.0, 128.0, 9);
        let Ok(mask) = rasterize(&poly, 128, 128) else {
            continue;
        };
        for y in 0..128 {
            for x in 0..128 {
                let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
                assert_eq!(mask.contains(x, y), point_in_polygon(cx, cy, &poly));
                assert_eq!(mask.contains(x, y), pip_oracle(cx, cy, &poly.vertices));
            }
        }
        checked += 1;
    }
}

#[test]
fn concave_notch_is_outside() {
    let l = RoiPolygon::new(
        "L",
        vec![
            [0.0, 0.0],
            [10.0, 0.0],
            [10.0, 4.0],
            [4.0, 4.0],
            [4.0, 10.0],
            [0.0, 10.0],
        ],
    )
    .unwrap();
    for (x, y) in [(7.5, 7.5), (5.5, 9.5), (9.5, 4.5)] {
        assert_eq!(winding_number(x, y, &l.vertices), 0);
        assert!(!point_in_polygon(x, y, &l));
    }
    for (x, y) in [(1.5, 1.5), (8.5, 2.5), (2.5, 8.5)] {
        assert_ne!(winding_number(x, y, &l.vertices), 0);
        assert!(point_in_polygon(x, y, &l));
    }
}
