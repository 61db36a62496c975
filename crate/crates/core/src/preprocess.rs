//! Noise reduction ahead of differencing.
//!
//! The Gaussian blur runs in 16-bit fixed point with integer accumulation, so
//! its output is exactly mirror-symmetric and reproducible; it stays within
//! one intensity unit of the floating-point convolution. The bilateral filter
//! is evaluated directly in `f64`. Both replicate edge pixels at borders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::roi::{PixelRect, RoiMask};

pub const MAX_RADIUS: u32 = 15;

const FIXED_SHIFT: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlurKind {
    Gaussian,
    Bilateral,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlurSpec {
    pub kind: BlurKind,
    pub radius: u32,
    pub sigma_spatial: f64,
    /// Intensity-domain sigma; only read by the bilateral filter.
    pub sigma_range: f64,
}

impl Default for BlurSpec {
    fn default() -> Self {
        Self::gaussian(2, 1.5)
    }
}

impl BlurSpec {
    pub fn gaussian(radius: u32, sigma_spatial: f64) -> Self {
        Self {
            kind: BlurKind::Gaussian,
            radius,
            sigma_spatial,
            sigma_range: 25.0,
        }
    }

    pub fn bilateral(radius: u32, sigma_spatial: f64, sigma_range: f64) -> Self {
        Self {
            kind: BlurKind::Bilateral,
            radius,
            sigma_spatial,
            sigma_range,
        }
    }

    pub fn none() -> Self {
        Self {
            kind: BlurKind::None,
            ..Self::default()
        }
    }

    pub fn kernel_width(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == BlurKind::None {
            return Ok(());
        }
        if self.radius == 0 || self.radius > MAX_RADIUS {
            return Err(Error::InvalidBlur(format!(
                "radius {} outside 1..={MAX_RADIUS}",
                self.radius
            )));
        }
        if !(self.sigma_spatial.is_finite() && self.sigma_spatial > 0.0) {
            return Err(Error::InvalidBlur(format!(
                "sigma_spatial must be positive, got {}",
                self.sigma_spatial
            )));
        }
        if self.kind == BlurKind::Bilateral
            && !(self.sigma_range.is_finite() && self.sigma_range > 0.0)
        {
            return Err(Error::InvalidBlur(format!(
                "sigma_range must be positive, got {}",
                self.sigma_range
            )));
        }
        Ok(())
    }
}

/// Normalized 1-D Gaussian weights for offsets `-radius..=radius`.
pub fn gaussian_kernel(radius: u32, sigma: f64) -> Vec<f64> {
    let r = radius as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

fn fixed_kernel(radius: u32, sigma: f64) -> Vec<u64> {
    let scale = (1u64 << FIXED_SHIFT) as f64;
    gaussian_kernel(radius, sigma)
        .into_iter()
        .map(|w| (w * scale).round() as u64)
        .collect()
}

fn full_rect(frame: &Frame) -> PixelRect {
    PixelRect {
        x0: 0,
        y0: 0,
        x1: frame.width(),
        y1: frame.height(),
    }
}

#[inline]
fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

pub fn gaussian_blur(frame: &Frame, spec: &BlurSpec) -> Result<Frame> {
    gaussian_blur_in(frame, spec, full_rect(frame))
}

/// Blurs only the pixels of `rect`; everything else is copied through.
///
/// Pixels inside `rect` are identical to those of a full-frame blur, since
/// neighbours are always read from the whole frame.
pub fn gaussian_blur_in(frame: &Frame, spec: &BlurSpec, rect: PixelRect) -> Result<Frame> {
    spec.validate()?;
    let (w, h) = (frame.width(), frame.height());
    let r = spec.radius as isize;
    let kernel = fixed_kernel(spec.radius, spec.sigma_spatial);
    let norm: u64 = kernel.iter().sum::<u64>().pow(2);
    let src = frame.pixels();
    let mut out = src.to_vec();
    if rect.x0 >= rect.x1 || rect.y0 >= rect.y1 {
        return frame.with_pixels(out);
    }

    // Horizontal pass over every row the vertical pass will touch.
    let rw = rect.x1 - rect.x0;
    let row_lo = clamp_index(rect.y0 as isize - r, h);
    let row_hi = clamp_index(rect.y1 as isize - 1 + r, h);
    let mut horiz = vec![0u64; (row_hi - row_lo + 1) * rw];
    for y in row_lo..=row_hi {
        let row = &src[y * w..(y + 1) * w];
        let dst = &mut horiz[(y - row_lo) * rw..(y - row_lo + 1) * rw];
        for (k, x) in (rect.x0..rect.x1).enumerate() {
            let mut acc = 0u64;
            for (t, &kw) in kernel.iter().enumerate() {
                let xi = clamp_index(x as isize + t as isize - r, w);
                acc += kw * u64::from(row[xi]);
            }
            dst[k] = acc;
        }
    }

    for y in rect.y0..rect.y1 {
        for (k, x) in (rect.x0..rect.x1).enumerate() {
            let mut acc = 0u64;
            for (t, &kw) in kernel.iter().enumerate() {
                let yi = clamp_index(y as isize + t as isize - r, h);
                acc += kw * horiz[(yi - row_lo) * rw + k];
            }
            out[y * w + x] = ((acc + norm / 2) / norm).min(255) as u8;
        }
    }
    frame.with_pixels(out)
}

pub fn bilateral_filter(frame: &Frame, spec: &BlurSpec) -> Result<Frame> {
    bilateral_filter_in(frame, spec, full_rect(frame))
}

pub fn bilateral_filter_in(frame: &Frame, spec: &BlurSpec, rect: PixelRect) -> Result<Frame> {
    spec.validate()?;
    let (w, h) = (frame.width(), frame.height());
    let r = spec.radius as isize;
    let side = spec.kernel_width();
    let two_ss = 2.0 * spec.sigma_spatial * spec.sigma_spatial;
    let two_sr = 2.0 * spec.sigma_range * spec.sigma_range;
    let mut spatial = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            spatial.push((-((dx * dx + dy * dy) as f64) / two_ss).exp());
        }
    }
    let range: Vec<f64> = (0..256)
        .map(|d| (-((d * d) as f64) / two_sr).exp())
        .collect();

    let src = frame.pixels();
    let mut out = src.to_vec();
    for y in rect.y0..rect.y1 {
        for x in rect.x0..rect.x1 {
            let center = src[y * w + x];
            let (mut num, mut den) = (0.0f64, 0.0f64);
            let mut s = 0;
            for dy in -r..=r {
                let yi = clamp_index(y as isize + dy, h);
                for dx in -r..=r {
                    let xi = clamp_index(x as isize + dx, w);
                    let v = src[yi * w + xi];
                    let wgt = spatial[s] * range[center.abs_diff(v) as usize];
                    num += wgt * f64::from(v);
                    den += wgt;
                    s += 1;
                }
            }
            out[y * w + x] = (num / den).round().clamp(0.0, 255.0) as u8;
        }
    }
    frame.with_pixels(out)
}

/// Applies whichever filter `spec` names, restricted to `rect`.
pub fn apply_blur_in(frame: &Frame, spec: &BlurSpec, rect: PixelRect) -> Result<Frame> {
    match spec.kind {
        BlurKind::Gaussian => gaussian_blur_in(frame, spec, rect),
        BlurKind::Bilateral => bilateral_filter_in(frame, spec, rect),
        BlurKind::None => Ok(frame.clone()),
    }
}

pub fn apply_blur(frame: &Frame, spec: &BlurSpec) -> Result<Frame> {
    apply_blur_in(frame, spec, full_rect(frame))
}

const MAD_TO_SIGMA: f64 = 1.4826;

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Robust per-frame noise sigma from the MAD of in-mask temporal differences.
///
/// Differences of two independent noisy samples have variance `2 sigma^2`,
/// hence the final division by `sqrt(2)`.
pub fn estimate_noise_sigma(frames: &[Frame], mask: &RoiMask) -> Result<f64> {
    if frames.len() < 2 {
        return Err(Error::NotEnoughFrames {
            needed: 2,
            got: frames.len(),
        });
    }
    for f in frames {
        mask.check_frame(f)?;
    }
    let mut diffs: Vec<f64> = Vec::with_capacity(mask.inside_count() * (frames.len() - 1));
    for pair in frames.windows(2) {
        for ((&a, &b), &m) in pair[0]
            .pixels()
            .iter()
            .zip(pair[1].pixels())
            .zip(mask.bits())
        {
            if m {
                diffs.push(f64::from(b) - f64::from(a));
            }
        }
    }
    diffs.sort_by(f64::total_cmp);
    let med = median_sorted(&diffs);
    let mut dev: Vec<f64> = diffs.iter().map(|d| (d - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    Ok(MAD_TO_SIGMA * median_sorted(&dev) / std::f64::consts::SQRT_2)
}
