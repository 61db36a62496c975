//! Detection quality against synthetic ground truth.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::score::SlackEvent;

fn frames_of(intervals: &[(u64, u64)]) -> BTreeSet<u64> {
    intervals.iter().flat_map(|&(a, b)| a..=b).collect()
}

fn overlaps(a: (u64, u64), b: (u64, u64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Intersection over union of the frame sets covered by two interval lists.
/// Two empty lists agree perfectly.
pub fn temporal_iou(detected: &[(u64, u64)], truth: &[(u64, u64)]) -> f64 {
    let d = frames_of(detected);
    let t = frames_of(truth);
    let union = d.union(&t).count();
    if union == 0 {
        return 1.0;
    }
    d.intersection(&t).count() as f64 / union as f64
}

pub fn event_intervals(events: &[SlackEvent]) -> Vec<(u64, u64)> {
    events
        .iter()
        .map(|e| (e.start_frame, e.end_frame))
        .collect()
}

/// Frames from the truth start to the first overlapping event's opening;
/// `None` when nothing overlaps.
pub fn open_latency(truth: (u64, u64), events: &[SlackEvent]) -> Option<u64> {
    events
        .iter()
        .find(|e| overlaps((e.start_frame, e.end_frame), truth))
        .map(|e| e.start_frame.saturating_sub(truth.0))
}

/// Events that overlap no ground-truth interval.
pub fn false_events(events: &[SlackEvent], truth: &[(u64, u64)]) -> usize {
    events
        .iter()
        .filter(|e| {
            !truth
                .iter()
                .any(|&t| overlaps((e.start_frame, e.end_frame), t))
        })
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionMetrics {
    pub events: usize,
    pub truth_events: usize,
    pub detected_truth: usize,
    pub iou: f64,
    /// Mean open latency over detected ground-truth events.
    pub mean_latency: Option<f64>,
    pub false_events: usize,
}

pub fn evaluate(events: &[SlackEvent], truth: &[(u64, u64)]) -> DetectionMetrics {
    let latencies: Vec<u64> = truth
        .iter()
        .filter_map(|&t| open_latency(t, events))
        .collect();
    DetectionMetrics {
        events: events.len(),
        truth_events: truth.len(),
        detected_truth: latencies.len(),
        iou: temporal_iou(&event_intervals(events), truth),
        mean_latency: (!latencies.is_empty())
            .then(|| latencies.iter().sum::<u64>() as f64 / latencies.len() as f64),
        false_events: false_events(events, truth),
    }
}
