//! Detector configuration: every tunable in one JSON-serializable record.
//!
//! Missing JSON fields fall back to the built-in defaults, so a config file
//! only needs the values an operator actually changed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::preprocess::{BlurKind, BlurSpec, MAX_RADIUS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Diff,
    Gmm,
    Edgefit,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] =
        [DetectorKind::Diff, DetectorKind::Gmm, DetectorKind::Edgefit];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Diff => "diff",
            Self::Gmm => "gmm",
            Self::Edgefit => "edgefit",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "diff" => Ok(Self::Diff),
            "gmm" => Ok(Self::Gmm),
            "edgefit" => Ok(Self::Edgefit),
            other => Err(format!(
                "unknown detector {other:?} (expected diff, gmm or edgefit)"
            )),
        }
    }
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    LaggedFrame,
    LaggedMean,
}

/// Which earlier frame a frame is differenced against.
///
/// Frames `1..=warmup_frames` use their immediate predecessor; later frames
/// use the frame `lag` back (or the rounded mean of the last `lag` frames).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferencePolicy {
    pub warmup_frames: u64,
    pub lag: u64,
    pub mode: ReferenceMode,
}

impl Default for ReferencePolicy {
    fn default() -> Self {
        Self {
            warmup_frames: 100,
            lag: 100,
            mode: ReferenceMode::LaggedFrame,
        }
    }
}

impl ReferencePolicy {
    /// Number of processed frames the history buffer must retain.
    pub fn history_len(&self) -> usize {
        self.lag.max(1) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmParams {
    pub components: usize,
    pub learning_rate: f64,
    pub background_ratio: f64,
    /// Match gate in standard deviations.
    pub match_distance: f64,
    pub variance_floor: f64,
    pub initial_variance: f64,
    pub initial_weight: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        Self {
            components: 3,
            learning_rate: 0.02,
            background_ratio: 0.7,
            match_distance: 2.5,
            variance_floor: 4.0,
            initial_variance: 225.0,
            initial_weight: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeFitParams {
    pub degree: usize,
    pub canny_low: f64,
    pub canny_high: f64,
    /// Event thresholds in pixels of deviation; the shared ones are pixel counts.
    pub score_on: f64,
    pub score_off: f64,
}

impl Default for EdgeFitParams {
    fn default() -> Self {
        Self {
            degree: 2,
            canny_low: 40.0,
            canny_high: 100.0,
            score_on: 1.5,
            score_off: 0.75,
        }
    }
}

pub const DEFAULT_TAU: u32 = 25;
pub const MAX_LAG: u64 = 10_000;
pub const DEFAULT_AVG_WINDOW: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub detector: DetectorKind,
    pub blur: BlurSpec,
    /// Per-pixel change threshold in intensity units.
    pub tau: u32,
    pub reference: ReferencePolicy,
    pub avg_window: usize,
    pub score_on: f64,
    pub score_off: f64,
    pub min_event_frames: usize,
    pub gmm: GmmParams,
    pub edgefit: EdgeFitParams,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            detector: DetectorKind::Diff,
            blur: BlurSpec::default(),
            tau: DEFAULT_TAU,
            reference: ReferencePolicy::default(),
            avg_window: DEFAULT_AVG_WINDOW,
            score_on: 20.0,
            score_off: 10.0,
            min_event_frames: 3,
            gmm: GmmParams::default(),
            edgefit: EdgeFitParams::default(),
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl DetectorConfig {
    /// `(score_on, score_off)` for the selected detector.
    pub fn event_thresholds(&self) -> (f64, f64) {
        match self.detector {
            DetectorKind::Edgefit => (self.edgefit.score_on, self.edgefit.score_off),
            _ => (self.score_on, self.score_off),
        }
    }

    pub fn field_errors(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, field: &str, msg: String| {
            if !ok {
                errs.push(FieldError::new(field, msg));
            }
        };

        let b = &self.blur;
        if b.kind != BlurKind::None {
            check(
                (1..=MAX_RADIUS).contains(&b.radius),
                "blur.radius",
                format!("must be in 1..={MAX_RADIUS}, got {}", b.radius),
            );
            check(
                positive(b.sigma_spatial),
                "blur.sigma_spatial",
                format!("must be positive, got {}", b.sigma_spatial),
            );
        }
        if b.kind == BlurKind::Bilateral {
            check(
                positive(b.sigma_range),
                "blur.sigma_range",
                format!("must be positive, got {}", b.sigma_range),
            );
        }
        check(
            (1..=255).contains(&self.tau),
            "tau",
            format!("must be in 1..=255, got {}", self.tau),
        );
        check(
            self.reference.warmup_frames >= 1,
            "reference.warmup_frames",
            "must be at least 1".into(),
        );
        check(
            (1..=MAX_LAG).contains(&self.reference.lag),
            "reference.lag",
            format!("must be in 1..={MAX_LAG}, got {}", self.reference.lag),
        );
        check(
            self.avg_window >= 1,
            "avg_window",
            "must be at least 1".into(),
        );
        check(
            self.score_on.is_finite() && self.score_on >= 0.0,
            "score_on",
            format!("must be a non-negative number, got {}", self.score_on),
        );
        check(
            self.score_off.is_finite() && self.score_off <= self.score_on,
            "score_off",
            format!(
                "must not exceed score_on ({}), got {}",
                self.score_on, self.score_off
            ),
        );
        check(
            self.min_event_frames >= 1,
            "min_event_frames",
            "must be at least 1".into(),
        );

        let g = &self.gmm;
        check(
            (1..=8).contains(&g.components),
            "gmm.components",
            format!("must be in 1..=8, got {}", g.components),
        );
        check(
            g.learning_rate > 0.0 && g.learning_rate < 1.0,
            "gmm.learning_rate",
            format!("must be in (0, 1), got {}", g.learning_rate),
        );
        check(
            g.background_ratio > 0.0 && g.background_ratio < 1.0,
            "gmm.background_ratio",
            format!("must be in (0, 1), got {}", g.background_ratio),
        );
        check(
            positive(g.match_distance),
            "gmm.match_distance",
            format!("must be positive, got {}", g.match_distance),
        );
        check(
            positive(g.variance_floor),
            "gmm.variance_floor",
            format!("must be positive, got {}", g.variance_floor),
        );
        check(
            g.initial_variance.is_finite() && g.initial_variance >= g.variance_floor,
            "gmm.initial_variance",
            format!(
                "must be at least the variance floor, got {}",
                g.initial_variance
            ),
        );
        check(
            g.initial_weight > 0.0 && g.initial_weight < 1.0,
            "gmm.initial_weight",
            format!("must be in (0, 1), got {}", g.initial_weight),
        );

        let e = &self.edgefit;
        check(
            (1..=5).contains(&e.degree),
            "edgefit.degree",
            format!("must be in 1..=5, got {}", e.degree),
        );
        check(
            positive(e.canny_low) && e.canny_low <= e.canny_high,
            "edgefit.canny_low",
            format!(
                "must satisfy 0 < canny_low <= canny_high, got {}",
                e.canny_low
            ),
        );
        check(
            e.score_on.is_finite() && e.score_on >= 0.0,
            "edgefit.score_on",
            format!("must be a non-negative number, got {}", e.score_on),
        );
        check(
            e.score_off.is_finite() && e.score_off <= e.score_on,
            "edgefit.score_off",
            format!(
                "must not exceed edgefit.score_on ({}), got {}",
                e.score_on, e.score_off
            ),
        );
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.field_errors();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errs))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(vec![FieldError::new("$", e.to_string())]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// True when switching from `self` to `next` invalidates buffered frames
    /// or learned detector state.
    pub fn needs_restart(&self, next: &DetectorConfig) -> bool {
        self.detector != next.detector
            || self.blur != next.blur
            || self.reference != next.reference
            || self.gmm != next.gmm
            || self.edgefit.degree != next.edgefit.degree
            || self.edgefit.canny_low != next.edgefit.canny_low
            || self.edgefit.canny_high != next.edgefit.canny_high
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        DetectorConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = DetectorConfig::from_json(r#"{"tau": 40, "reference": {"lag": 50}}"#).unwrap();
        assert_eq!(cfg.tau, 40);
        assert_eq!(cfg.reference.lag, 50);
        assert_eq!(cfg.reference.warmup_frames, 100);
        assert_eq!(cfg.avg_window, DEFAULT_AVG_WINDOW);
    }

    #[test]
    fn invariant_violations_name_fields() {
        let cfg = DetectorConfig {
            tau: 0,
            score_on: 5.0,
            score_off: 6.0,
            avg_window: 0,
            ..Default::default()
        };
        let fields: Vec<String> = cfg.field_errors().into_iter().map(|e| e.field).collect();
        assert_eq!(fields, vec!["tau", "avg_window", "score_off"]);
        assert!(DetectorConfig {
            tau: 256,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn detector_names_round_trip() {
        for k in DetectorKind::ALL {
            assert_eq!(k.as_str().parse::<DetectorKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{k}\""));
        }
        assert!("hough".parse::<DetectorKind>().is_err());
    }

    #[test]
    fn reference_mode_json_names() {
        let p: ReferencePolicy = serde_json::from_str(r#"{"mode":"lagged_mean"}"#).unwrap();
        assert_eq!(p.mode, ReferenceMode::LaggedMean);
    }
}
