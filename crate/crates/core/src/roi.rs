//! Slack region of interest: operator polygons and their pixel masks.
//!
//! Pixels are sampled at their centers `(i + 0.5, j + 0.5)` and classified
//! with the even-odd rule. Several polygons for one view are unioned.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiPolygon {
    pub name: String,
    pub vertices: Vec<[f64; 2]>,
}

impl RoiPolygon {
    pub fn new(name: impl Into<String>, vertices: Vec<[f64; 2]>) -> Result<Self> {
        let poly = Self {
            name: name.into(),
            vertices,
        };
        poly.validate()?;
        Ok(poly)
    }

    /// Axis-aligned rectangle with corners `(x0, y0)` and `(x1, y1)`.
    pub fn rect(name: impl Into<String>, x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::new(name, vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(Error::InvalidPolygon(format!(
                "{:?} has {n} vertices, need at least 3",
                self.name
            )));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if !(v[0].is_finite() && v[1].is_finite()) {
                return Err(Error::InvalidPolygon(format!(
                    "{:?} vertex {i} is not finite",
                    self.name
                )));
            }
            if *v == self.vertices[(i + 1) % n] {
                return Err(Error::InvalidPolygon(format!(
                    "{:?} repeats vertex {i} consecutively",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        let (w, h) = (width as f64, height as f64);
        for (i, v) in self.vertices.iter().enumerate() {
            if v[0] < 0.0 || v[0] > w || v[1] < 0.0 || v[1] > h {
                return Err(Error::InvalidPolygon(format!(
                    "{:?} vertex {i} ({}, {}) lies outside the {width}x{height} frame",
                    self.name, v[0], v[1]
                )));
            }
        }
        Ok(())
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            name: self.name.clone(),
            vertices: self
                .vertices
                .iter()
                .map(|v| [v[0] + dx, v[1] + dy])
                .collect(),
        }
    }

    fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Where edge `a -> b` crosses the horizontal line `y`, if it straddles it.
///
/// Shared by the point test and the scanline fill so both classify every
/// pixel center identically.
#[inline]
fn crossing(a: [f64; 2], b: [f64; 2], y: f64) -> Option<f64> {
    if (a[1] > y) != (b[1] > y) {
        Some(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]))
    } else {
        None
    }
}

/// Even-odd containment test.
pub fn point_in_polygon(x: f64, y: f64, poly: &RoiPolygon) -> bool {
    let mut inside = false;
    for (a, b) in poly.edges() {
        if let Some(xc) = crossing(a, b, y) {
            if x < xc {
                inside = !inside;
            }
        }
    }
    inside
}

/// Per-view ROI configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiConfig {
    pub source_id: String,
    pub polygons: Vec<RoiPolygon>,
}

impl RoiConfig {
    pub fn new(source_id: impl Into<String>, polygons: Vec<RoiPolygon>) -> Self {
        Self {
            source_id: source_id.into(),
            polygons,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.polygons.is_empty() {
            return Err(Error::InvalidPolygon(format!(
                "ROI config for {:?} has no polygons",
                self.source_id
            )));
        }
        self.polygons.iter().try_for_each(RoiPolygon::validate)
    }

    pub fn rasterize(&self, width: usize, height: usize) -> Result<RoiMask> {
        self.validate()?;
        rasterize_union(&self.polygons, width, height)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ROI config serializes")
    }

    /// Loads a config file holding either one view or a list of views, and
    /// picks the view for `source_id` (or the only one present).
    pub fn load(path: &Path, source_id: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let json_err = |message: String| Error::Json {
            path: path.to_path_buf(),
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| json_err(e.to_string()))?;
        let mut views: Vec<RoiConfig> = if value.is_array() {
            serde_json::from_value(value).map_err(|e| json_err(e.to_string()))?
        } else {
            vec![serde_json::from_value(value).map_err(|e| json_err(e.to_string()))?]
        };
        let cfg = if views.len() == 1 {
            views.pop().unwrap()
        } else {
            let id = source_id
                .ok_or_else(|| json_err("several views and no source id to pick one".into()))?;
            let pos = views
                .iter()
                .position(|v| v.source_id == id)
                .ok_or_else(|| json_err(format!("no view for source {id:?}")))?;
            views.swap_remove(pos)
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Boolean raster of the region of interest. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    inside_count: usize,
}

/// Inclusive-exclusive pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl RoiMask {
    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} mask bits for {width}x{height}",
                bits.len()
            )));
        }
        let inside_count = bits.iter().filter(|&&b| b).count();
        if inside_count == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            width,
            height,
            bits,
            inside_count,
        })
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
            inside_count: width * height,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn inside_count(&self) -> usize {
        self.inside_count
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn is_subset_of(&self, other: &RoiMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Tight bounding box of the set bits.
    pub fn bounding_box(&self) -> PixelRect {
        let (mut x0, mut y0, mut x1, mut y1) = (self.width, self.height, 0, 0);
        for y in 0..self.height {
            let row = &self.bits[y * self.width..(y + 1) * self.width];
            if let Some(first) = row.iter().position(|&b| b) {
                let last = row.iter().rposition(|&b| b).unwrap();
                x0 = x0.min(first);
                x1 = x1.max(last + 1);
                y0 = y0.min(y);
                y1 = y1.max(y + 1);
            }
        }
        PixelRect { x0, y0, x1, y1 }
    }

    pub fn check_frame(&self, frame: &Frame) -> Result<()> {
        frame.check_size(self.width, self.height, "mask")
    }
}

/// Scanline fill of one or more polygons into a union mask.
pub fn rasterize_union(polys: &[RoiPolygon], width: usize, height: usize) -> Result<RoiMask> {
    let mut bits = vec![false; width * height];
    let mut xs = Vec::new();
    for poly in polys {
        poly.validate()?;
        poly.check_bounds(width, height)?;
        for j in 0..height {
            let yc = j as f64 + 0.5;
            xs.clear();
            xs.extend(poly.edges().filter_map(|(a, b)| crossing(a, b, yc)));
            xs.sort_by(f64::total_cmp);
            // Center x is inside iff an odd number of crossings lie strictly
            // right of it, i.e. xs[2k] <= x < xs[2k+1] for sorted crossings.
            for pair in xs.chunks_exact(2) {
                let row = &mut bits[j * width..(j + 1) * width];
                let start = first_center_at_or_after(pair[0]);
                let end = first_center_at_or_after(pair[1]).min(width);
                for b in row.iter_mut().take(end).skip(start) {
                    *b = true;
                }
            }
        }
    }
    RoiMask::from_bits(width, height, bits)
}

pub fn rasterize(poly: &RoiPolygon, width: usize, height: usize) -> Result<RoiMask> {
    rasterize_union(std::slice::from_ref(poly), width, height)
}

/// Smallest pixel column `i >= 0` whose center satisfies `i + 0.5 >= x`.
fn first_center_at_or_after(x: f64) -> usize {
    if x <= 0.5 {
        return 0;
    }
    let mut i = (x - 0.5).ceil().max(0.0) as usize;
    while i > 0 && (i - 1) as f64 + 0.5 >= x {
        i -= 1;
    }
    while (i as f64 + 0.5) < x {
        i += 1;
    }
    i
}

/// Frame view where pixels outside the mask read as zero.
#[derive(Debug, Clone, Copy)]
pub struct MaskedView<'a> {
    frame: &'a Frame,
    mask: &'a RoiMask,
}

pub fn mask_apply<'a>(frame: &'a Frame, mask: &'a RoiMask) -> Result<MaskedView<'a>> {
    mask.check_frame(frame)?;
    Ok(MaskedView { frame, mask })
}

impl MaskedView<'_> {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        if self.mask.contains(x, y) {
            self.frame.get(x, y)
        } else {
            0
        }
    }

    pub fn values(&self) -> impl Iterator<Item = u8> + '_ {
        self.frame
            .pixels()
            .iter()
            .zip(self.mask.bits())
            .map(|(&v, &m)| if m { v } else { 0 })
    }

    pub fn sum(&self) -> u64 {
        self.values().map(u64::from).sum()
    }

    /// Number of in-mask pixels satisfying `pred`.
    pub fn count_where(&self, mut pred: impl FnMut(u8) -> bool) -> usize {
        self.frame
            .pixels()
            .iter()
            .zip(self.mask.bits())
            .filter(|(&v, &m)| m && pred(v))
            .count()
    }
}
