//! Red change overlays, ROI outlines and run export.

use std::fs;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};

use crate::change_detect::ChangeMap;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::pipeline::RunResult;
use crate::roi::{RoiConfig, RoiPolygon};
use crate::score::scores_to_csv;

pub const ROI_COLOR: Rgb<u8> = Rgb([0, 255, 255]);
/// Share of the underlying luminance kept in the green and blue channels of
/// a changed pixel.
pub const OVERLAY_KEEP: f64 = 0.3;

pub fn grayscale_rgb(frame: &Frame) -> RgbImage {
    RgbImage::from_fn(frame.width() as u32, frame.height() as u32, |x, y| {
        let v = frame.get(x as usize, y as usize);
        Rgb([v, v, v])
    })
}

/// Grayscale frame with changed pixels tinted red.
pub fn overlay_changes(frame: &Frame, change: &ChangeMap) -> Result<RgbImage> {
    if change.width != frame.width() || change.height != frame.height() {
        return Err(Error::DimensionMismatch(format!(
            "change map {}x{} vs frame {}x{}",
            change.width,
            change.height,
            frame.width(),
            frame.height()
        )));
    }
    let mut img = grayscale_rgb(frame);
    for (i, _) in change.bits.iter().enumerate().filter(|(_, &b)| b) {
        let (x, y) = (i % change.width, i / change.width);
        let v = frame.get(x, y);
        let dim = (f64::from(v) * OVERLAY_KEEP).round() as u8;
        img.put_pixel(x as u32, y as u32, Rgb([255, dim, dim]));
    }
    Ok(img)
}

/// Integer points of the Bresenham line from `a` to `b`, both ends included.
pub fn bresenham(a: (i64, i64), b: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x, y));
        if (x, y) == b {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Pixels of the closed polygon outline, vertices rounded to the grid.
pub fn outline_pixels(poly: &RoiPolygon) -> Vec<(i64, i64)> {
    let pts: Vec<(i64, i64)> = poly
        .vertices
        .iter()
        .map(|v| (v[0].round() as i64, v[1].round() as i64))
        .collect();
    let mut out = Vec::new();
    for i in 0..pts.len() {
        out.extend(bresenham(pts[i], pts[(i + 1) % pts.len()]));
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Draws a 1-px outline; points off the raster are clipped.
pub fn draw_roi_outline(img: &mut RgbImage, poly: &RoiPolygon) {
    let (w, h) = (i64::from(img.width()), i64::from(img.height()));
    for (x, y) in outline_pixels(poly) {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            img.put_pixel(x as u32, y as u32, ROI_COLOR);
        }
    }
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| Error::InvalidFrame(format!("png encode: {e}")))?;
    Ok(buf.into_inner())
}

pub fn event_png_name(id: u32, peak_frame: u64) -> String {
    format!("event_{id:03}_frame_{peak_frame:06}.png")
}

#[derive(Debug, Clone)]
pub struct ExportPaths {
    pub scores: PathBuf,
    pub events: PathBuf,
    pub overlays: Vec<PathBuf>,
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `scores.csv`, `events.json` and one overlay PNG per event peak.
pub fn export_run(out_dir: &Path, run: &RunResult, roi: Option<&RoiConfig>) -> Result<ExportPaths> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let scores = out_dir.join("scores.csv");
    write(
        &scores,
        scores_to_csv(run.series.records(), &run.events).as_bytes(),
    )?;
    let events = out_dir.join("events.json");
    let body = serde_json::to_string_pretty(&run.events).expect("events serialize");
    write(&events, body.as_bytes())?;

    let mut overlays = Vec::new();
    for cap in &run.captures {
        let mut img = overlay_changes(&cap.frame, &cap.change)?;
        for poly in roi.map(|r| r.polygons.as_slice()).unwrap_or_default() {
            draw_roi_outline(&mut img, poly);
        }
        let path = out_dir.join(event_png_name(cap.event.id, cap.event.peak_frame));
        write(&path, &encode_png(&img)?)?;
        overlays.push(path);
    }
    Ok(ExportPaths {
        scores,
        events,
        overlays,
    })
}
