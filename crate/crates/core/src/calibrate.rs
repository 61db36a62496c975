//! Change-threshold suggestions from a quiet stretch of footage.
//!
//! The frame-to-frame difference of two frames with i.i.d. N(0, σ²) noise is
//! N(0, 2σ²), so thresholds are expressed in units of `√2·σ̂`.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::preprocess::estimate_noise_sigma;
use crate::roi::RoiMask;

/// Multiple of the difference standard deviation used by default.
pub const DEFAULT_SIGMAS: f64 = 5.0;
pub const NO_NOISE_WARNING: &str = "no measurable noise";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CalibrationMode {
    Sigmas,
    /// Per-pixel probability that pure noise reaches the threshold.
    TargetFar(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub sigma: f64,
    pub tau: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

fn clamp_tau(t: f64) -> u32 {
    t.ceil().clamp(1.0, 255.0) as u32
}

/// `ceil(5·√2·σ)`, at least 1.
pub fn tau_from_sigma(sigma: f64) -> u32 {
    clamp_tau(DEFAULT_SIGMAS * std::f64::consts::SQRT_2 * sigma)
}

/// Smallest τ with `P(|d| ≥ τ) ≤ p` for `d ~ N(0, 2σ²)`.
pub fn tau_for_false_alarm_rate(sigma: f64, p: f64) -> Result<u32> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidConfig(vec![crate::error::FieldError::new(
            "target_far",
            format!("must lie in (0, 1), got {p}"),
        )]));
    }
    let z = Normal::standard().inverse_cdf(1.0 - p / 2.0);
    Ok(clamp_tau(std::f64::consts::SQRT_2 * sigma * z))
}

pub fn suggest_tau(sigma: f64, mode: CalibrationMode) -> Result<Calibration> {
    let tau = match mode {
        CalibrationMode::Sigmas => tau_from_sigma(sigma),
        CalibrationMode::TargetFar(p) => tau_for_false_alarm_rate(sigma, p)?,
    };
    Ok(Calibration {
        sigma,
        tau,
        warning: (sigma == 0.0).then(|| NO_NOISE_WARNING.to_string()),
    })
}

/// Estimates noise on raw (unblurred) frames and suggests τ.
pub fn calibrate(frames: &[Frame], mask: &RoiMask, mode: CalibrationMode) -> Result<Calibration> {
    let sigma = estimate_noise_sigma(frames, mask)?;
    suggest_tau(sigma, mode)
}
