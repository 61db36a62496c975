//! Shared gateway state: one pipeline driven by the replay loop, read and
//! mutated by API handlers.
//!
//! All pipeline access goes through a single mutex, and a frame is processed
//! entirely while holding it, so a mutation always lands between two frames.

use std::collections::VecDeque;
use std::sync::{Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};
use slackwatch_core::{
    ChangeMap, DetectorConfig, FieldError, FrameSource, Pipeline, Result, RoiConfig, ScoreRecord,
    SlackEvent,
};
use tokio::sync::broadcast;

/// Change maps kept for `/api/frame` overlays.
pub const CHANGE_HISTORY: usize = 240;
const STREAM_BUFFER: usize = 1024;

/// One per-frame telemetry record on the event stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StreamRecord {
    pub frame: u64,
    pub count: f64,
    pub score: f64,
    pub event_open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub timestamp_ms: u64,
    pub field: String,
    pub old: Value,
    pub new: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Status {
    pub frame: u64,
    pub detector: String,
    pub events_open: u32,
    pub last_score: Option<f64>,
    pub frames_total: u64,
    pub finished: bool,
}

struct Inner {
    pipeline: Pipeline,
    next_frame: u64,
    last: Option<ScoreRecord>,
    changes: VecDeque<ChangeMap>,
    audit: Vec<AuditEntry>,
}

pub struct Gateway {
    source: FrameSource,
    inner: Mutex<Inner>,
    stream: broadcast::Sender<StreamRecord>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Dotted paths of leaf values that differ between two JSON objects.
fn changed_fields(prefix: &str, old: &Value, new: &Value, out: &mut Vec<(String, Value, Value)>) {
    match (old, new) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, va) in a {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                changed_fields(&path, va, b.get(k).unwrap_or(&Value::Null), out);
            }
        }
        _ if old != new => out.push((prefix.to_string(), old.clone(), new.clone())),
        _ => {}
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

impl Gateway {
    pub fn new(source: FrameSource, roi: RoiConfig, config: DetectorConfig) -> Result<Self> {
        let pipeline = Pipeline::new(roi, config, source.width(), source.height())?;
        let (stream, _) = broadcast::channel(STREAM_BUFFER);
        Ok(Self {
            source,
            inner: Mutex::new(Inner {
                pipeline,
                next_frame: 0,
                last: None,
                changes: VecDeque::with_capacity(CHANGE_HISTORY),
                audit: Vec::new(),
            }),
            stream,
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn source(&self) -> &FrameSource {
        &self.source
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StreamRecord> {
        self.stream.subscribe()
    }

    pub fn is_finished(&self) -> bool {
        self.lock().next_frame >= self.source.frame_count()
    }

    /// Processes the next frame of the source. Returns `Ok(None)` once the
    /// source is exhausted or for a frame that only seeds the detector.
    pub fn step(&self) -> Result<Option<StreamRecord>> {
        let index = self.lock().next_frame;
        if index >= self.source.frame_count() {
            return Ok(None);
        }
        let frame = self.source.frame(index)?;
        let mut inner = self.lock();
        inner.next_frame = index + 1;
        let Some(out) = inner.pipeline.process(&frame)? else {
            return Ok(None);
        };
        if inner.changes.len() == CHANGE_HISTORY {
            inner.changes.pop_front();
        }
        inner.changes.push_back(out.change);
        inner.last = Some(out.record);
        let rec = StreamRecord {
            frame: out.record.frame,
            count: out.record.count,
            score: out.record.score,
            event_open: out.event_open,
        };
        drop(inner);
        // No subscribers is fine.
        let _ = self.stream.send(rec);
        Ok(Some(rec))
    }

    pub fn status(&self) -> Status {
        let inner = self.lock();
        Status {
            frame: inner.last.map(|r| r.frame).unwrap_or(0),
            detector: inner.pipeline.config().detector.to_string(),
            events_open: u32::from(inner.pipeline.event_open()),
            last_score: inner.last.map(|r| r.score),
            frames_total: self.source.frame_count(),
            finished: inner.next_frame >= self.source.frame_count(),
        }
    }

    pub fn config(&self) -> DetectorConfig {
        self.lock().pipeline.config().clone()
    }

    pub fn roi(&self) -> RoiConfig {
        self.lock().pipeline.roi().clone()
    }

    /// Records so far with frame index in `from..=to`.
    pub fn scores(&self, from: u64, to: u64) -> (Vec<ScoreRecord>, Vec<SlackEvent>) {
        let inner = self.lock();
        let recs = inner
            .pipeline
            .series()
            .records()
            .iter()
            .filter(|r| (from..=to).contains(&r.frame))
            .copied()
            .collect();
        (recs, inner.pipeline.events_snapshot())
    }

    /// Closed events plus the open one, if any, ending at the latest frame.
    pub fn events(&self) -> Vec<SlackEvent> {
        self.lock().pipeline.events_snapshot()
    }

    pub fn change_map(&self, frame: u64) -> Option<ChangeMap> {
        self.lock()
            .changes
            .iter()
            .find(|c| c.frame_index == frame)
            .cloned()
    }

    pub fn audit(&self) -> Vec<AuditEntry> {
        self.lock().audit.clone()
    }

    /// Applies a full or partial config document on top of the current one.
    /// Nothing changes unless the merged result is valid.
    pub fn update_config(
        &self,
        patch: Value,
    ) -> std::result::Result<DetectorConfig, Vec<FieldError>> {
        if !patch.is_object() {
            return Err(vec![FieldError::new("$", "expected a JSON object")]);
        }
        let mut inner = self.lock();
        let old = serde_json::to_value(inner.pipeline.config()).expect("config serializes");
        let mut merged = old.clone();
        merge(&mut merged, patch);
        let next = DetectorConfig::from_json(&merged.to_string()).map_err(field_errors)?;
        inner
            .pipeline
            .set_config(next.clone())
            .map_err(field_errors)?;
        let new = serde_json::to_value(&next).expect("config serializes");
        let mut changes = Vec::new();
        changed_fields("", &old, &new, &mut changes);
        let ts = now_ms();
        inner
            .audit
            .extend(changes.into_iter().map(|(field, old, new)| AuditEntry {
                timestamp_ms: ts,
                field: format!("config.{field}"),
                old,
                new,
            }));
        Ok(next)
    }

    /// Replaces the ROI; rasterization happens before anything is swapped.
    pub fn update_roi(&self, roi: RoiConfig) -> std::result::Result<RoiConfig, Vec<FieldError>> {
        let mut inner = self.lock();
        let old = serde_json::to_value(inner.pipeline.roi()).expect("roi serializes");
        inner.pipeline.set_roi(roi.clone()).map_err(field_errors)?;
        inner.audit.push(AuditEntry {
            timestamp_ms: now_ms(),
            field: "roi".into(),
            old,
            new: serde_json::to_value(&roi).expect("roi serializes"),
        });
        Ok(roi)
    }

    pub fn mark(&self, frame: u64, label: &str) -> AuditEntry {
        let mut new = Map::new();
        new.insert("frame".into(), frame.into());
        new.insert("label".into(), label.into());
        let entry = AuditEntry {
            timestamp_ms: now_ms(),
            field: "mark".into(),
            old: Value::Null,
            new: Value::Object(new),
        };
        self.lock().audit.push(entry.clone());
        entry
    }
}

pub(crate) fn field_errors(e: slackwatch_core::Error) -> Vec<FieldError> {
    match e {
        slackwatch_core::Error::InvalidConfig(errs) => errs,
        slackwatch_core::Error::InvalidPolygon(m) => vec![FieldError::new("polygons", m)],
        slackwatch_core::Error::EmptyMask => {
            vec![FieldError::new("polygons", "mask covers no pixel centres")]
        }
        slackwatch_core::Error::InvalidBlur(m) => vec![FieldError::new("blur", m)],
        other => vec![FieldError::new("$", other.to_string())],
    }
}
