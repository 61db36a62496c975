//! Edge-curve deviation from a fitted no-slack baseline.
//!
//! Each in-mask column contributes its lowest edge pixel, which traces the
//! underside of the cable; sag moves that trace downwards.

use crate::alt::canny::{canny, EdgeMap};
use crate::alt::polyfit::{polyfit_least_squares, EdgeFitModel};
use crate::config::EdgeFitParams;
use crate::error::Result;
use crate::frame::Frame;
use crate::preprocess::BlurSpec;
use crate::roi::RoiMask;

/// `(x, y)` of the lowest in-mask edge pixel in every column that has one.
pub fn edge_profile(edges: &EdgeMap, mask: &RoiMask) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for x in 0..edges.width {
        if let Some(y) = (0..edges.height)
            .rev()
            .find(|&y| edges.get(x, y) && mask.contains(x, y))
        {
            pts.push((x as f64, y as f64));
        }
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeDeviation {
    /// Mean absolute vertical distance to the baseline, in pixels.
    pub score: f64,
    pub points: usize,
    pub no_edge: bool,
}

pub fn edge_deviation_score(
    edges: &EdgeMap,
    baseline: &EdgeFitModel,
    mask: &RoiMask,
) -> EdgeDeviation {
    let pts = edge_profile(edges, mask);
    if pts.is_empty() {
        return EdgeDeviation {
            score: 0.0,
            points: 0,
            no_edge: true,
        };
    }
    let total: f64 = pts
        .iter()
        .map(|&(x, y)| (y - baseline.evaluate(x)).abs())
        .sum();
    EdgeDeviation {
        score: total / pts.len() as f64,
        points: pts.len(),
        no_edge: false,
    }
}

pub fn detect_edges(frame: &Frame, params: &EdgeFitParams, blur: &BlurSpec) -> Result<EdgeMap> {
    canny(frame, params.canny_low, params.canny_high, blur)
}

/// Fits the baseline curve to a reference frame's edge profile.
pub fn fit_baseline(
    frame: &Frame,
    mask: &RoiMask,
    params: &EdgeFitParams,
    blur: &BlurSpec,
) -> Result<EdgeFitModel> {
    let edges = detect_edges(frame, params, blur)?;
    polyfit_least_squares(&edge_profile(&edges, mask), params.degree)
}

/// In-mask profile pixels as a boolean raster, for overlays.
pub fn profile_bits(edges: &EdgeMap, mask: &RoiMask) -> Vec<bool> {
    let mut bits = vec![false; edges.width * edges.height];
    for (x, y) in edge_profile(edges, mask) {
        bits[y as usize * edges.width + x as usize] = true;
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roi::{rasterize, RoiPolygon};

    fn cable_frame(offset: usize) -> Frame {
        let (w, h) = (48, 32);
        let px: Vec<u8> = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                let top = 10 + offset + x / 12;
                if (top..top + 4).contains(&y) {
                    220
                } else {
                    30
                }
            })
            .collect();
        Frame::new(0, 0, w, h, px).unwrap()
    }

    #[test]
    fn self_comparison_is_near_zero() {
        let mask = RoiMask::full(48, 32);
        let p = EdgeFitParams::default();
        let blur = BlurSpec::gaussian(1, 1.0);
        let f = cable_frame(0);
        let base = fit_baseline(&f, &mask, &p, &blur).unwrap();
        let dev = edge_deviation_score(&detect_edges(&f, &p, &blur).unwrap(), &base, &mask);
        assert!(!dev.no_edge);
        assert!(dev.score < 0.6, "{dev:?}");
    }

    #[test]
    fn uniform_sag_shows_up_as_deviation() {
        let mask = rasterize(
            &RoiPolygon::rect("m", 4.0, 2.0, 44.0, 30.0).unwrap(),
            48,
            32,
        )
        .unwrap();
        let p = EdgeFitParams::default();
        let blur = BlurSpec::gaussian(1, 1.0);
        let base = fit_baseline(&cable_frame(0), &mask, &p, &blur).unwrap();
        let dev = edge_deviation_score(
            &detect_edges(&cable_frame(5), &p, &blur).unwrap(),
            &base,
            &mask,
        );
        assert!((dev.score - 5.0).abs() <= 1.0, "{dev:?}");
    }

    #[test]
    fn no_edges_in_mask_is_flagged() {
        let mask = rasterize(&RoiPolygon::rect("m", 0.0, 0.0, 8.0, 8.0).unwrap(), 48, 32).unwrap();
        let p = EdgeFitParams::default();
        let blur = BlurSpec::gaussian(1, 1.0);
        let base = fit_baseline(&cable_frame(0), &RoiMask::full(48, 32), &p, &blur).unwrap();
        let dev = edge_deviation_score(
            &detect_edges(&cable_frame(0), &p, &blur).unwrap(),
            &base,
            &mask,
        );
        assert_eq!(dev.score, 0.0);
        assert!(dev.no_edge);
    }
}
