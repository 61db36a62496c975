//! Lagged-reference background subtraction and per-pixel change thresholding.

use std::collections::VecDeque;

use crate::config::{ReferenceMode, ReferencePolicy};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::roi::RoiMask;

/// Index of the frame that frame `n` is compared against.
///
/// Lagged references saturate at frame 0 when `lag` exceeds `n`.
pub fn reference_index(n: u64, policy: &ReferencePolicy) -> Result<u64> {
    if n == 0 {
        return Err(Error::NoReference);
    }
    if n <= policy.warmup_frames {
        Ok(n - 1)
    } else {
        Ok(n.saturating_sub(policy.lag.max(1)))
    }
}

/// Bounded buffer of the most recent preprocessed frames.
///
/// Holds `policy.history_len()` frames and, for the mean mode, a running
/// per-pixel sum over exactly those frames.
#[derive(Debug, Clone)]
pub struct History {
    capacity: usize,
    frames: VecDeque<Frame>,
    sums: Vec<u32>,
}

impl History {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            frames: VecDeque::with_capacity(capacity.max(1)),
            sums: Vec::new(),
        }
    }

    pub fn for_policy(policy: &ReferencePolicy) -> Self {
        Self::new(policy.history_len())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn clear(&mut self) {
        self.frames.clear();
        self.sums.clear();
    }

    pub fn push(&mut self, frame: Frame) {
        if self.sums.len() != frame.pixels().len() {
            self.frames.clear();
            self.sums = vec![0; frame.pixels().len()];
        }
        if self.frames.len() == self.capacity {
            let old = self.frames.pop_front().expect("full buffer");
            for (s, &v) in self.sums.iter_mut().zip(old.pixels()) {
                *s -= u32::from(v);
            }
        }
        for (s, &v) in self.sums.iter_mut().zip(frame.pixels()) {
            *s += u32::from(v);
        }
        self.frames.push_back(frame);
    }

    pub fn get(&self, index: u64) -> Option<&Frame> {
        let first = self.frames.front()?.index();
        let last = self.frames.back()?.index();
        if index < first || index > last {
            return None;
        }
        // Indices are consecutive within one run, but search to stay correct
        // if a caller ever pushes a gapped sequence.
        let guess = (index - first) as usize;
        match self.frames.get(guess) {
            Some(f) if f.index() == index => Some(f),
            _ => self.frames.iter().find(|f| f.index() == index),
        }
    }

    /// Reference for frame `n`, where `n` counts frames since the buffer
    /// was (re)started and buffered frames carry the same numbering.
    pub fn reference_frame(&self, n: u64, policy: &ReferencePolicy) -> Result<Frame> {
        let idx = reference_index(n, policy)?;
        let plain = |i: u64| {
            self.get(i)
                .cloned()
                .ok_or(Error::InsufficientHistory { needed: i })
        };
        if policy.mode == ReferenceMode::LaggedFrame || n <= policy.warmup_frames {
            return plain(idx);
        }
        // Mean of frames idx..n, which must be exactly the buffered frames.
        let count = (n - idx) as usize;
        let front = self.frames.front().map(Frame::index);
        let back = self.frames.back().map(Frame::index);
        if count != self.frames.len() || front != Some(idx) || back != Some(n - 1) {
            let missing = if front.is_some_and(|f| f <= idx) {
                n - 1
            } else {
                idx
            };
            return Err(Error::InsufficientHistory { needed: missing });
        }
        if count == 1 {
            return plain(idx);
        }
        let half = count as u32 / 2;
        let px: Vec<u8> = self
            .sums
            .iter()
            .map(|&s| ((s + half) / count as u32) as u8)
            .collect();
        self.frames.back().unwrap().with_pixels(px)
    }
}

/// Changed in-mask pixels of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeMap {
    pub frame_index: u64,
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
    pub count: usize,
}

impl ChangeMap {
    pub fn empty(frame_index: u64, width: usize, height: usize) -> Self {
        Self {
            frame_index,
            width,
            height,
            bits: vec![false; width * height],
            count: 0,
        }
    }

    pub fn from_bits(
        frame_index: u64,
        width: usize,
        height: usize,
        bits: Vec<bool>,
    ) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} change bits for {width}x{height}",
                bits.len()
            )));
        }
        let count = bits.iter().filter(|&&b| b).count();
        Ok(Self {
            frame_index,
            width,
            height,
            bits,
            count,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }
}

/// Marks in-mask pixels whose absolute difference reaches `tau`.
pub fn subtract_and_threshold(
    current: &Frame,
    reference: &Frame,
    mask: &RoiMask,
    tau: u32,
) -> Result<ChangeMap> {
    mask.check_frame(current)?;
    mask.check_frame(reference)?;
    let bits: Vec<bool> = current
        .pixels()
        .iter()
        .zip(reference.pixels())
        .zip(mask.bits())
        .map(|((&c, &r), &m)| m && u32::from(c.abs_diff(r)) >= tau)
        .collect();
    ChangeMap::from_bits(current.index(), current.width(), current.height(), bits)
}
