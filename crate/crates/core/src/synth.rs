//! Ground-truthed synthetic cable scenes.
//!
//! A bright quadratic cable crosses a flat background. Slack injections push
//! a span of the cable downwards, easing in and out over the first and last
//! tenth of each injection's frames. Global sinusoidal flicker and i.i.d.
//! Gaussian pixel noise are the nuisances. Every frame is a pure function of
//! the `SceneSpec` and its index, so frames can be rendered in any order or in
//! parallel without changing a byte.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{timestamp_for, write_raw, Frame, MIN_DIMENSION};
use crate::roi::{RoiConfig, RoiPolygon};

/// Horizontal subsamples per pixel column for anti-aliased coverage.
const SUBSAMPLES: usize = 4;
/// Fraction of a span's width used for the spatial taper at each end.
const SPAN_TAPER: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableSpec {
    /// Left end, midpoint and right end; the centreline is the parabola
    /// through all three.
    pub start: [f64; 2],
    pub mid: [f64; 2],
    pub end: [f64; 2],
    pub thickness: f64,
    pub intensity: f64,
}

impl CableSpec {
    pub fn centre_y(&self, x: f64) -> f64 {
        let ([x0, y0], [x1, y1], [x2, y2]) = (self.start, self.mid, self.end);
        y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackInjection {
    pub start_frame: u64,
    /// Inclusive; may lie past the last rendered frame for slack that
    /// persists to the end of the clip.
    pub end_frame: u64,
    pub sag_px: f64,
    /// Affected x-range `[x0, x1]`.
    pub span: [f64; 2],
}

impl SlackInjection {
    /// Raised-cosine envelope in `(0, 1]` inside the interval, 0 outside.
    pub fn envelope(&self, n: u64) -> f64 {
        if n < self.start_frame || n > self.end_frame {
            return 0.0;
        }
        let len = self.end_frame - self.start_frame + 1;
        let ramp = ((len as f64) * 0.1).ceil().max(1.0);
        let ease = |k: u64| {
            let k = k as f64;
            if k < ramp {
                0.5 * (1.0 - (PI * (k + 1.0) / (ramp + 1.0)).cos())
            } else {
                1.0
            }
        };
        ease(n - self.start_frame).min(ease(self.end_frame - n))
    }

    /// Spatial weight along the span, flat in the middle with tapered ends.
    pub fn profile(&self, x: f64) -> f64 {
        let [s0, s1] = self.span;
        if x < s0 || x > s1 {
            return 0.0;
        }
        let taper = SPAN_TAPER * (s1 - s0);
        let edge = (x - s0).min(s1 - x);
        if edge >= taper {
            1.0
        } else {
            0.5 * (1.0 - (PI * edge / taper).cos())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub frame_count: u64,
    pub fps: f64,
    pub cable: CableSpec,
    pub background_intensity: f64,
    pub noise_sigma: f64,
    pub flicker_amplitude: f64,
    #[serde(default = "default_flicker_period")]
    pub flicker_period: f64,
    #[serde(default)]
    pub slack_events: Vec<SlackInjection>,
    pub rng_seed: u64,
}

fn default_flicker_period() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEvent {
    pub start: u64,
    pub end: u64,
    pub sag_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub events: Vec<TruthEvent>,
    pub per_frame_sag: Vec<f64>,
}

impl GroundTruth {
    pub fn intervals(&self) -> Vec<(u64, u64)> {
        self.events.iter().map(|e| (e.start, e.end)).collect()
    }
}

impl SceneSpec {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScene(m));
        if self.width < MIN_DIMENSION || self.height < MIN_DIMENSION {
            return bad(format!("{}x{} is too small", self.width, self.height));
        }
        if self.frame_count == 0 {
            return bad("frame_count must be positive".into());
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if !(self.noise_sigma >= 0.0 && self.flicker_amplitude >= 0.0 && self.flicker_period > 0.0)
        {
            return bad(
                "noise_sigma, flicker_amplitude must be >= 0 and flicker_period > 0".into(),
            );
        }
        let c = &self.cable;
        if !(c.start[0] < c.mid[0] && c.mid[0] < c.end[0]) {
            return bad("cable control points must have increasing x".into());
        }
        if !(c.thickness > 0.0) {
            return bad("cable thickness must be positive".into());
        }
        for ev in &self.slack_events {
            if ev.end_frame < ev.start_frame || !(ev.sag_px >= 0.0) || !(ev.span[0] < ev.span[1]) {
                return bad(format!("malformed slack injection {ev:?}"));
            }
        }
        let (w, h) = (self.width as f64, self.height as f64);
        if c.start[0] < 0.0 || c.end[0] > w {
            return Err(Error::InvalidScene(format!(
                "cable x-range [{}, {}] leaves the {}-px-wide frame",
                c.start[0], c.end[0], self.width
            )));
        }
        let max_sag: f64 = self.slack_events.iter().map(|e| e.sag_px).sum();
        let half = c.thickness / 2.0;
        for i in 0..=(4 * self.width) {
            let x = c.start[0] + (c.end[0] - c.start[0]) * i as f64 / (4 * self.width) as f64;
            let y = c.centre_y(x);
            if y - half < 0.0 || y + half + max_sag > h {
                return Err(Error::InvalidScene(format!(
                    "cable leaves the frame near x = {x:.1}"
                )));
            }
        }
        Ok(())
    }

    /// Total downward displacement of the centreline at `x` in frame `n`.
    pub fn displacement(&self, x: f64, n: u64) -> f64 {
        self.slack_events
            .iter()
            .map(|e| e.sag_px * e.envelope(n) * e.profile(x))
            .sum()
    }

    /// Scalar sag amplitude of frame `n`: the sum of active envelopes
    /// weighted by their sag.
    pub fn frame_sag(&self, n: u64) -> f64 {
        self.slack_events
            .iter()
            .map(|e| e.sag_px * e.envelope(n))
            .sum()
    }

    pub fn render_frame(&self, n: u64) -> Result<Frame> {
        let (w, h) = (self.width, self.height);
        let c = &self.cable;
        let mut coverage = vec![0.0f64; w * h];
        let half = c.thickness / 2.0;
        for i in 0..w {
            for s in 0..SUBSAMPLES {
                let x = i as f64 + (s as f64 + 0.5) / SUBSAMPLES as f64;
                if x < c.start[0] || x > c.end[0] {
                    continue;
                }
                let yc = c.centre_y(x) + self.displacement(x, n);
                let (top, bottom) = (yc - half, yc + half);
                let j0 = top.floor().max(0.0) as usize;
                let j1 = (bottom.ceil() as usize).min(h);
                for j in j0..j1 {
                    let overlap = (bottom.min(j as f64 + 1.0) - top.max(j as f64)).max(0.0);
                    coverage[j * w + i] += overlap / SUBSAMPLES as f64;
                }
            }
        }

        let gain = 1.0 + self.flicker_amplitude * (2.0 * PI * n as f64 / self.flicker_period).sin();
        let bg = self.background_intensity;
        let mut noise = (self.noise_sigma > 0.0).then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
            rng.set_stream(n);
            (
                rng,
                Normal::new(0.0, self.noise_sigma).expect("finite sigma"),
            )
        });
        let pixels: Vec<u8> = coverage
            .iter()
            .map(|&cov| {
                let mut v = (bg + cov.min(1.0) * (c.intensity - bg)) * gain;
                if let Some((rng, dist)) = noise.as_mut() {
                    v += dist.sample(rng);
                }
                v.round().clamp(0.0, 255.0) as u8
            })
            .collect();
        Frame::new(n, timestamp_for(n, self.fps), w, h, pixels)
    }

    pub fn frames(&self) -> impl Iterator<Item = Result<Frame>> + '_ {
        (0..self.frame_count).map(move |n| self.render_frame(n))
    }

    /// Injections with visible sag, clipped to the rendered frame range.
    pub fn ground_truth(&self) -> GroundTruth {
        let last = self.frame_count - 1;
        let events = self
            .slack_events
            .iter()
            .filter(|e| e.sag_px > 0.0 && e.start_frame <= last)
            .map(|e| TruthEvent {
                start: e.start_frame,
                end: e.end_frame.min(last),
                sag_px: e.sag_px,
            })
            .collect();
        GroundTruth {
            events,
            per_frame_sag: (0..self.frame_count).map(|n| self.frame_sag(n)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenePaths {
    pub raw: PathBuf,
    pub sidecar: PathBuf,
    pub truth: PathBuf,
}

/// Writes `<name>.y8`, its sidecar `<name>.json`, and `<name>.truth.json`.
pub fn render_scene(spec: &SceneSpec, dir: &Path) -> Result<ScenePaths> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let raw = dir.join(format!("{}.y8", spec.name));
    write_raw(&raw, spec.fps, spec.frames())?;
    let truth = dir.join(format!("{}.truth.json", spec.name));
    let body = serde_json::to_string_pretty(&spec.ground_truth()).expect("ground truth serializes");
    fs::write(&truth, body).map_err(|e| Error::io(&truth, e))?;
    Ok(ScenePaths {
        sidecar: crate::frame::sidecar_path(&raw),
        raw,
        truth,
    })
}

/// A named scene with the ROI an operator would draw for it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: SceneSpec,
    pub roi: RoiConfig,
}

pub const SCENARIO_NAMES: [&str; 5] = ["S1", "S2", "S3", "S4", "S5"];

const SCENE_W: usize = 160;
const SCENE_H: usize = 120;

fn base_scene(name: &str, frame_count: u64, noise_sigma: f64, seed: u64) -> SceneSpec {
    SceneSpec {
        name: name.to_string(),
        width: SCENE_W,
        height: SCENE_H,
        frame_count,
        fps: 30.0,
        cable: CableSpec {
            start: [0.0, 40.0],
            mid: [80.0, 62.0],
            end: [160.0, 40.0],
            thickness: 4.0,
            intensity: 200.0,
        },
        background_intensity: 60.0,
        noise_sigma,
        flicker_amplitude: 0.0,
        flicker_period: 50.0,
        slack_events: Vec::new(),
        rng_seed: seed,
    }
}

/// Operator ROI shared by the suite: the lower middle of the cable run.
pub fn default_roi(source_id: &str) -> RoiConfig {
    let poly = RoiPolygon::new(
        "slack",
        vec![
            [30.0, 44.0],
            [110.0, 44.0],
            [110.0, 96.0],
            [70.0, 104.0],
            [30.0, 96.0],
        ],
    )
    .expect("static polygon is valid");
    RoiConfig::new(source_id, vec![poly])
}

/// ROI covering the whole cable run, used to show what S5 hides.
pub fn enlarged_roi(source_id: &str) -> RoiConfig {
    let poly = RoiPolygon::rect("wide", 0.0, 30.0, 160.0, 110.0).expect("static polygon is valid");
    RoiConfig::new(source_id, vec![poly])
}

fn injection(start: u64, end: u64, sag: f64, span: [f64; 2]) -> SlackInjection {
    SlackInjection {
        start_frame: start,
        end_frame: end,
        sag_px: sag,
        span,
    }
}

pub fn scenario(name: &str) -> Result<Scenario> {
    let s = match name {
        "S1" => {
            let mut spec = base_scene("S1", 360, 2.0, 0x51);
            // Slack forms at frame 200 and persists past the end of the clip.
            spec.slack_events = vec![injection(200, 399, 6.0, [40.0, 100.0])];
            Scenario {
                name: "S1",
                description: "medium slack: one event that forms and persists",
                spec,
                roi: default_roi("S1"),
            }
        }
        "S2" => {
            let mut spec = base_scene("S2", 1000, 2.0, 0x52);
            spec.slack_events = vec![
                injection(120, 179, 3.0, [35.0, 65.0]),
                injection(340, 399, 3.5, [55.0, 85.0]),
                injection(560, 619, 4.0, [75.0, 105.0]),
                injection(780, 1099, 9.0, [30.0, 110.0]),
            ];
            Scenario {
                name: "S2",
                description: "severe propagating slack: three moving clusters then one large event",
                spec,
                roi: default_roi("S2"),
            }
        }
        "S3" => Scenario {
            name: "S3",
            description: "noise only, sigma 4",
            spec: base_scene("S3", 2000, 4.0, 0x53),
            roi: default_roi("S3"),
        },
        "S4" => {
            let mut spec = base_scene("S4", 600, 2.0, 0x54);
            spec.flicker_amplitude = 0.04;
            spec.flicker_period = 70.0;
            Scenario {
                name: "S4",
                description: "lighting flicker nuisance, no slack",
                spec,
                roi: default_roi("S4"),
            }
        }
        "S5" => {
            let mut spec = base_scene("S5", 360, 2.0, 0x55);
            spec.slack_events = vec![injection(200, 399, 6.0, [120.0, 155.0])];
            Scenario {
                name: "S5",
                description: "slack outside the region of interest",
                spec,
                roi: default_roi("S5"),
            }
        }
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    Ok(s)
}

pub fn scenario_suite() -> Vec<Scenario> {
    SCENARIO_NAMES
        .iter()
        .map(|n| scenario(n).expect("built-in scenario"))
        .collect()
}
