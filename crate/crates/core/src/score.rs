//! Per-frame counts, running-average scores, and hysteresis event extraction.

use serde::{Deserialize, Serialize};

use crate::config::DetectorConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub frame: u64,
    pub timestamp_ms: u64,
    /// Per-frame measure: changed or foreground pixel count, or edge deviation.
    pub count: f64,
    pub score: f64,
}

/// Append-only series of per-frame records with a running-average score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    window: usize,
    records: Vec<ScoreRecord>,
}

impl ScoreSeries {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            records: Vec::new(),
        }
    }

    /// Rebuilds a series from stored records (e.g. a parsed CSV).
    pub fn from_records(window: usize, records: Vec<ScoreRecord>) -> Self {
        Self {
            window: window.max(1),
            records,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Takes effect for the next appended record.
    pub fn set_window(&mut self, window: usize) {
        self.window = window.max(1);
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&ScoreRecord> {
        self.records.last()
    }

    /// Appends frame `frame`'s measure and returns its score: the mean of the
    /// most recent `min(window, len)` counts.
    pub fn update(&mut self, frame: u64, timestamp_ms: u64, count: f64) -> Result<f64> {
        if let Some(last) = self.records.last() {
            if frame <= last.frame {
                return Err(Error::OutOfOrder {
                    last: last.frame,
                    got: frame,
                });
            }
        }
        let take = self.window.min(self.records.len() + 1);
        let start = self.records.len() + 1 - take;
        let prior: f64 = self.records[start..].iter().map(|r| r.count).sum();
        let score = (prior + count) / take as f64;
        self.records.push(ScoreRecord {
            frame,
            timestamp_ms,
            count,
            score,
        });
        Ok(score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackEvent {
    pub id: u32,
    pub start_frame: u64,
    pub end_frame: u64,
    pub peak_score: f64,
    pub peak_frame: u64,
    pub start_ms: u64,
    pub end_ms: u64,
}

impl SlackEvent {
    pub fn contains(&self, frame: u64) -> bool {
        (self.start_frame..=self.end_frame).contains(&frame)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct OpenEvent {
    start_frame: u64,
    start_ms: u64,
    end_frame: u64,
    end_ms: u64,
    frames: usize,
    peak_score: f64,
    peak_frame: u64,
}

/// What a single [`EventTracker::step`] did.
#[derive(Debug, Clone, PartialEq)]
pub enum Transition {
    Idle,
    Opened,
    Continued,
    /// The open interval ended; `Some` when it was long enough to keep.
    Closed(Option<SlackEvent>),
}

/// Streaming form of the hysteresis automaton behind [`extract_events`].
///
/// Opens when the score reaches `score_on`, stays open until the score drops
/// below `score_off`, and drops intervals shorter than `min_frames`.
#[derive(Debug, Clone)]
pub struct EventTracker {
    score_on: f64,
    score_off: f64,
    min_frames: usize,
    open: Option<OpenEvent>,
    next_id: u32,
}

impl EventTracker {
    pub fn new(score_on: f64, score_off: f64, min_frames: usize) -> Self {
        Self {
            score_on,
            score_off,
            min_frames: min_frames.max(1),
            open: None,
            next_id: 1,
        }
    }

    pub fn from_config(cfg: &DetectorConfig) -> Self {
        let (on, off) = cfg.event_thresholds();
        Self::new(on, off, cfg.min_event_frames)
    }

    /// Adopts new thresholds without disturbing an open interval.
    pub fn retune(&mut self, cfg: &DetectorConfig) {
        let (on, off) = cfg.event_thresholds();
        self.score_on = on;
        self.score_off = off;
        self.min_frames = cfg.min_event_frames.max(1);
    }

    pub fn is_open(&self) -> bool {
        self.open.is_some()
    }

    /// Start frame and running peak of the open interval, if any.
    pub fn open_interval(&self) -> Option<(u64, u64, f64)> {
        self.open
            .as_ref()
            .map(|o| (o.start_frame, o.peak_frame, o.peak_score))
    }

    pub fn step(&mut self, rec: &ScoreRecord) -> Transition {
        match self.open.as_mut() {
            None => {
                if rec.score >= self.score_on {
                    self.open = Some(OpenEvent {
                        start_frame: rec.frame,
                        start_ms: rec.timestamp_ms,
                        end_frame: rec.frame,
                        end_ms: rec.timestamp_ms,
                        frames: 1,
                        peak_score: rec.score,
                        peak_frame: rec.frame,
                    });
                    Transition::Opened
                } else {
                    Transition::Idle
                }
            }
            Some(open) => {
                if rec.score < self.score_off {
                    Transition::Closed(self.close())
                } else {
                    open.end_frame = rec.frame;
                    open.end_ms = rec.timestamp_ms;
                    open.frames += 1;
                    if rec.score > open.peak_score {
                        open.peak_score = rec.score;
                        open.peak_frame = rec.frame;
                    }
                    Transition::Continued
                }
            }
        }
    }

    /// Ends the stream; closes any open interval at the last seen frame.
    pub fn finish(&mut self) -> Option<SlackEvent> {
        self.close()
    }

    fn close(&mut self) -> Option<SlackEvent> {
        let open = self.open.take()?;
        if open.frames < self.min_frames {
            return None;
        }
        let id = self.next_id;
        self.next_id += 1;
        Some(SlackEvent {
            id,
            start_frame: open.start_frame,
            end_frame: open.end_frame,
            peak_score: open.peak_score,
            peak_frame: open.peak_frame,
            start_ms: open.start_ms,
            end_ms: open.end_ms,
        })
    }
}

pub fn extract_events(records: &[ScoreRecord], cfg: &DetectorConfig) -> Vec<SlackEvent> {
    let mut tracker = EventTracker::from_config(cfg);
    let mut events = Vec::new();
    for rec in records {
        if let Transition::Closed(Some(ev)) = tracker.step(rec) {
            events.push(ev);
        }
    }
    events.extend(tracker.finish());
    events
}

pub const CSV_HEADER: &str = "frame,timestamp_ms,count,score,event_id";

/// Score CSV, one row per record; `event_id` is blank outside events.
pub fn scores_to_csv(records: &[ScoreRecord], events: &[SlackEvent]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut ev = events.iter().peekable();
    for r in records {
        while ev.peek().is_some_and(|e| e.end_frame < r.frame) {
            ev.next();
        }
        let id = ev
            .peek()
            .filter(|e| e.contains(r.frame))
            .map(|e| e.id.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.frame, r.timestamp_ms, r.count, r.score, id
        ));
    }
    out
}

/// Parses score CSV back into records and their event ids.
pub fn parse_scores_csv(text: &str) -> Result<Vec<(ScoreRecord, Option<u32>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Csv {
                line: 1,
                message: format!("expected header {CSV_HEADER:?}"),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Csv {
            line: i + 1,
            message,
        };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad(format!("expected 5 columns, got {}", cols.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| bad(format!("{what}: {e}")))
        };
        let int = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>().map_err(|e| bad(format!("{what}: {e}")))
        };
        let event_id = if cols[4].is_empty() {
            None
        } else {
            Some(
                cols[4]
                    .parse::<u32>()
                    .map_err(|e| bad(format!("event_id: {e}")))?,
            )
        };
        out.push((
            ScoreRecord {
                frame: int(cols[0], "frame")?,
                timestamp_ms: int(cols[1], "timestamp_ms")?,
                count: num(cols[2], "count")?,
                score: num(cols[3], "score")?,
            },
            event_id,
        ));
    }
    Ok(out)
}
