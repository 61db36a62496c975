//! Seeded inputs shared by the kernel benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slackwatch_core::synth::default_roi;
use slackwatch_core::{Frame, RoiMask};

/// Camera-sized frame used by every kernel bench.
pub const WIDTH: usize = 640;
pub const HEIGHT: usize = 480;

/// A smooth gradient plus uniform noise, so filters see realistic edges.
pub fn noisy_frame(seed: u64, width: usize, height: usize) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px: Vec<u8> = (0..width * height)
        .map(|i| {
            let base = ((i % width) * 160 / width + (i / width) * 60 / height) as i32;
            (base + rng.random_range(-12i32..=12)).clamp(0, 255) as u8
        })
        .collect();
    Frame::new(0, 0, width, height, px).expect("sized to fit")
}

/// The scenario ROI scaled up to the given raster.
pub fn scaled_mask(width: usize, height: usize) -> RoiMask {
    let roi = default_roi("bench");
    let sx = width as f64 / 160.0;
    let sy = height as f64 / 120.0;
    let polys = roi
        .polygons
        .iter()
        .map(|p| {
            let v = p.vertices.iter().map(|&[x, y]| [x * sx, y * sy]).collect();
            slackwatch_core::RoiPolygon::new(&p.name, v).expect("scaled polygon stays valid")
        })
        .collect();
    slackwatch_core::RoiConfig::new("bench", polys)
        .rasterize(width, height)
        .expect("non-empty mask")
}
