//! Canny edge detection: Gaussian blur, 3x3 Sobel, 4-bin non-maximum
//! suppression, and double-threshold hysteresis over 8-connected pixels.

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::preprocess::{gaussian_blur, BlurKind, BlurSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl EdgeMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Sobel responses with replicated borders; `gy` grows downwards.
pub fn sobel(frame: &Frame) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (frame.width(), frame.height());
    let px = |x: isize, y: isize| -> f64 {
        let xi = x.clamp(0, w as isize - 1) as usize;
        let yi = y.clamp(0, h as isize - 1) as usize;
        f64::from(frame.get(xi, yi))
    };
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            gy[i] = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Neighbour offsets `(behind, ahead)` along the quantized gradient direction.
fn direction_offsets(gx: f64, gy: f64) -> ((isize, isize), (isize, isize)) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        ((-1, 0), (1, 0))
    } else if angle < 67.5 {
        ((-1, -1), (1, 1))
    } else if angle < 112.5 {
        ((0, -1), (0, 1))
    } else {
        ((1, -1), (-1, 1))
    }
}

/// Thinned gradient magnitude: zero except at directional local maxima.
///
/// A pixel survives when it strictly exceeds the neighbour behind it and is
/// at least the one ahead, so two-pixel plateaus keep exactly one pixel.
pub fn non_maximum_suppression(gx: &[f64], gy: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mag: Vec<f64> = gx.iter().zip(gy).map(|(a, b)| a.hypot(*b)).collect();
    let mut out = vec![0.0; width * height];
    if width < 3 || height < 3 {
        return out;
    }
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let i = y * width + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let ((bx, by), (ax, ay)) = direction_offsets(gx[i], gy[i]);
            let behind = mag[(y as isize + by) as usize * width + (x as isize + bx) as usize];
            let ahead = mag[(y as isize + ay) as usize * width + (x as isize + ax) as usize];
            if m > behind && m >= ahead {
                out[i] = m;
            }
        }
    }
    out
}

/// Keeps strong pixels and every weak pixel 8-connected to a kept pixel.
pub fn hysteresis(thin: &[f64], width: usize, height: usize, low: f64, high: f64) -> Vec<bool> {
    let mut keep = vec![false; width * height];
    let mut stack = Vec::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= high && m > 0.0 && !keep[i] {
            keep[i] = true;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (x, y) = ((j % width) as isize, (j / width) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                            continue;
                        }
                        let k = ny as usize * width + nx as usize;
                        if !keep[k] && thin[k] >= low && thin[k] > 0.0 {
                            keep[k] = true;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    keep
}

pub fn canny(frame: &Frame, low: f64, high: f64, blur: &BlurSpec) -> Result<EdgeMap> {
    if !(low > 0.0 && low <= high) {
        return Err(Error::InvalidConfig(vec![crate::error::FieldError::new(
            "canny",
            format!("need 0 < low <= high, got low={low} high={high}"),
        )]));
    }
    let smoothed;
    let src = match blur.kind {
        BlurKind::None => frame,
        _ => {
            let spec = BlurSpec {
                kind: BlurKind::Gaussian,
                ..*blur
            };
            smoothed = gaussian_blur(frame, &spec)?;
            &smoothed
        }
    };
    let (w, h) = (src.width(), src.height());
    let (gx, gy) = sobel(src);
    let thin = non_maximum_suppression(&gx, &gy, w, h);
    Ok(EdgeMap {
        width: w,
        height: h,
        bits: hysteresis(&thin, w, h, low, high),
    })
}
