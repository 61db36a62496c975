//! Streaming composition of the detector stages:
//! mask, blur, reference subtraction, threshold, count, running average,
//! events.
//!
//! One [`Pipeline`] serves one video source. Frames go in one at a time and
//! memory stays bounded by the reference history. Config and ROI changes are
//! applied between frames; changes that invalidate buffered frames restart
//! the reference epoch, so the next frame is treated like a first frame.

use crate::alt::edgefit::{detect_edges, edge_deviation_score, fit_baseline, profile_bits};
use crate::alt::{EdgeFitModel, GmmModel};
use crate::change_detect::{subtract_and_threshold, ChangeMap, History};
use crate::config::{DetectorConfig, DetectorKind};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::preprocess::apply_blur_in;
use crate::roi::{PixelRect, RoiConfig, RoiMask};
use crate::score::{EventTracker, ScoreRecord, ScoreSeries, SlackEvent, Transition};

#[derive(Debug, Clone)]
enum DetectorState {
    Diff(History),
    Gmm(Box<GmmModel>),
    EdgeFit(Option<EdgeFitModel>),
}

/// Raw frame and change map at an event's peak, kept for overlays.
#[derive(Debug, Clone)]
pub struct EventCapture {
    pub event: SlackEvent,
    pub frame: Frame,
    pub change: ChangeMap,
}

/// Everything one processed frame produced.
#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub record: ScoreRecord,
    pub change: ChangeMap,
    pub event_open: bool,
    /// Event finalized on this frame, if any.
    pub closed: Option<SlackEvent>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub width: usize,
    pub height: usize,
    pub frames_seen: u64,
    pub series: ScoreSeries,
    pub events: Vec<SlackEvent>,
    pub captures: Vec<EventCapture>,
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    config: DetectorConfig,
    roi: RoiConfig,
    mask: RoiMask,
    blur_rect: PixelRect,
    width: usize,
    height: usize,
    state: DetectorState,
    epoch_start: Option<u64>,
    series: ScoreSeries,
    tracker: EventTracker,
    events: Vec<SlackEvent>,
    captures: Vec<EventCapture>,
    pending_capture: Option<(Frame, ChangeMap)>,
    frames_seen: u64,
}

impl Pipeline {
    pub fn new(
        roi: RoiConfig,
        config: DetectorConfig,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        config.validate()?;
        let mask = roi.rasterize(width, height)?;
        Ok(Self {
            blur_rect: mask.bounding_box(),
            state: Self::fresh_state(&config, width, height),
            series: ScoreSeries::new(config.avg_window),
            tracker: EventTracker::from_config(&config),
            config,
            roi,
            mask,
            width,
            height,
            epoch_start: None,
            events: Vec::new(),
            captures: Vec::new(),
            pending_capture: None,
            frames_seen: 0,
        })
    }

    fn fresh_state(config: &DetectorConfig, width: usize, height: usize) -> DetectorState {
        match config.detector {
            DetectorKind::Diff => DetectorState::Diff(History::for_policy(&config.reference)),
            DetectorKind::Gmm => {
                DetectorState::Gmm(Box::new(GmmModel::new(config.gmm, width, height)))
            }
            DetectorKind::Edgefit => DetectorState::EdgeFit(None),
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn roi(&self) -> &RoiConfig {
        &self.roi
    }

    pub fn mask(&self) -> &RoiMask {
        &self.mask
    }

    pub fn series(&self) -> &ScoreSeries {
        &self.series
    }

    pub fn events(&self) -> &[SlackEvent] {
        &self.events
    }

    pub fn event_open(&self) -> bool {
        self.tracker.is_open()
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    fn restart(&mut self) {
        self.state = Self::fresh_state(&self.config, self.width, self.height);
        self.epoch_start = None;
    }

    /// Replaces the configuration; applies from the next frame.
    pub fn set_config(&mut self, config: DetectorConfig) -> Result<()> {
        config.validate()?;
        let restart = self.config.needs_restart(&config);
        self.series.set_window(config.avg_window);
        self.tracker.retune(&config);
        self.config = config;
        if restart {
            self.restart();
        }
        Ok(())
    }

    /// Replaces the region of interest; applies from the next frame.
    pub fn set_roi(&mut self, roi: RoiConfig) -> Result<()> {
        let mask = roi.rasterize(self.width, self.height)?;
        self.blur_rect = mask.bounding_box();
        self.mask = mask;
        self.roi = roi;
        self.restart();
        Ok(())
    }

    /// Feeds one frame. Returns `None` for the first frame of an epoch,
    /// which only seeds the detector.
    pub fn process(&mut self, frame: &Frame) -> Result<Option<FrameOutcome>> {
        frame.check_size(self.width, self.height, "pipeline")?;
        if let Some(last) = self.series.last() {
            if frame.index() <= last.frame {
                return Err(Error::OutOfOrder {
                    last: last.frame,
                    got: frame.index(),
                });
            }
        }
        self.frames_seen += 1;
        let start = *self.epoch_start.get_or_insert(frame.index());
        let n = frame.index() - start;

        let Some((measure, change)) = self.measure(frame, n)? else {
            return Ok(None);
        };
        let score = self
            .series
            .update(frame.index(), frame.timestamp_ms(), measure)?;
        let record = ScoreRecord {
            frame: frame.index(),
            timestamp_ms: frame.timestamp_ms(),
            count: measure,
            score,
        };
        let transition = self.tracker.step(&record);
        let mut closed = None;
        match transition {
            Transition::Opened => self.pending_capture = Some((frame.clone(), change.clone())),
            Transition::Continued => {
                if self.tracker.open_interval().map(|o| o.1) == Some(frame.index()) {
                    self.pending_capture = Some((frame.clone(), change.clone()));
                }
            }
            Transition::Closed(ev) => {
                closed = ev.clone();
                self.keep_capture(ev);
            }
            Transition::Idle => {}
        }
        Ok(Some(FrameOutcome {
            record,
            change,
            event_open: self.tracker.is_open(),
            closed,
        }))
    }

    fn keep_capture(&mut self, ev: Option<SlackEvent>) {
        let pending = self.pending_capture.take();
        if let Some(event) = ev {
            self.events.push(event.clone());
            if let Some((frame, change)) = pending {
                self.captures.push(EventCapture {
                    event,
                    frame,
                    change,
                });
            }
        }
    }

    fn measure(&mut self, frame: &Frame, n: u64) -> Result<Option<(f64, ChangeMap)>> {
        let cfg = &self.config;
        match &mut self.state {
            DetectorState::Diff(history) => {
                let blurred = apply_blur_in(frame, &cfg.blur, self.blur_rect)?;
                // History frames are numbered within the epoch.
                let current = Frame::new(
                    n,
                    frame.timestamp_ms(),
                    self.width,
                    self.height,
                    blurred.pixels().to_vec(),
                )?;
                if n == 0 {
                    history.push(current);
                    return Ok(None);
                }
                let reference = history.reference_frame(n, &cfg.reference)?;
                let mut change = subtract_and_threshold(&current, &reference, &self.mask, cfg.tau)?;
                change.frame_index = frame.index();
                history.push(current);
                Ok(Some((change.count as f64, change)))
            }
            DetectorState::Gmm(model) => {
                let blurred = apply_blur_in(frame, &cfg.blur, self.blur_rect)?;
                let fg = model.update_and_classify(&blurred)?;
                if n == 0 {
                    return Ok(None);
                }
                let bits: Vec<bool> = fg
                    .iter()
                    .zip(self.mask.bits())
                    .map(|(&f, &m)| f && m)
                    .collect();
                let change = ChangeMap::from_bits(frame.index(), self.width, self.height, bits)?;
                Ok(Some((change.count as f64, change)))
            }
            DetectorState::EdgeFit(baseline) => {
                if baseline.is_none() {
                    // Keep trying until a frame yields a usable baseline.
                    *baseline = fit_baseline(frame, &self.mask, &cfg.edgefit, &cfg.blur).ok();
                    if n == 0 {
                        return Ok(None);
                    }
                }
                let Some(model) = baseline.as_ref() else {
                    return Ok(Some((
                        0.0,
                        ChangeMap::empty(frame.index(), self.width, self.height),
                    )));
                };
                let edges = detect_edges(frame, &cfg.edgefit, &cfg.blur)?;
                let dev = edge_deviation_score(&edges, model, &self.mask);
                let change = ChangeMap::from_bits(
                    frame.index(),
                    self.width,
                    self.height,
                    profile_bits(&edges, &self.mask),
                )?;
                Ok(Some((dev.score, change)))
            }
        }
    }

    /// Ends the stream, closing any open event.
    pub fn finish(mut self) -> RunResult {
        let ev = self.tracker.finish();
        self.keep_capture(ev);
        RunResult {
            width: self.width,
            height: self.height,
            frames_seen: self.frames_seen,
            series: self.series,
            events: self.events,
            captures: self.captures,
        }
    }

    /// Events so far plus the open one, closed at the latest frame.
    pub fn events_snapshot(&self) -> Vec<SlackEvent> {
        let mut out = self.events.clone();
        out.extend(self.tracker.clone().finish());
        out
    }
}

/// Runs a whole sequence through a fresh pipeline.
pub fn run_pipeline<I>(frames: I, roi: &RoiConfig, config: &DetectorConfig) -> Result<RunResult>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    let mut pipeline: Option<Pipeline> = None;
    for frame in frames {
        let frame = frame?;
        let p = match pipeline.as_mut() {
            Some(p) => p,
            None => pipeline.insert(Pipeline::new(
                roi.clone(),
                config.clone(),
                frame.width(),
                frame.height(),
            )?),
        };
        p.process(&frame)?;
    }
    pipeline
        .map(Pipeline::finish)
        .ok_or(Error::NotEnoughFrames { needed: 1, got: 0 })
}
