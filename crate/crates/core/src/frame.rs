//! Grayscale frames and the sequence readers that produce them.
//!
//! Two on-disk layouts are understood: a directory of PGM/PNG stills read in
//! lexicographic filename order, and a `.y8` file of tightly packed 8-bit luma
//! frames accompanied by a JSON sidecar (`<stem>.json`) carrying
//! `{"width", "height", "fps"}`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::{DynamicImage, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DIMENSION: usize = 8;
pub const DEFAULT_FPS: f64 = 30.0;

/// Optional file inside a frame directory that supplies the frame rate.
pub const DIRECTORY_META_FILE: &str = "sequence.json";

/// One timestamped 8-bit grayscale raster. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    index: u64,
    timestamp_ms: u64,
    width: usize,
    height: usize,
    pixels: Arc<[u8]>,
}

impl Frame {
    pub fn new(
        index: u64,
        timestamp_ms: u64,
        width: usize,
        height: usize,
        pixels: impl Into<Arc<[u8]>>,
    ) -> Result<Self> {
        let pixels = pixels.into();
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(Error::InvalidFrame(format!(
                "{width}x{height} is below the {MIN_DIMENSION}x{MIN_DIMENSION} minimum"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "{} pixels for a {width}x{height} frame",
                pixels.len()
            )));
        }
        Ok(Self {
            index,
            timestamp_ms,
            width,
            height,
            pixels,
        })
    }

    /// A constant-valued frame, mostly useful in tests and synthetic scenes.
    pub fn filled(index: u64, width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(index, 0, width, height, vec![value; width * height])
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn timestamp_ms(&self) -> u64 {
        self.timestamp_ms
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Same index, timestamp and size with new pixel content.
    pub fn with_pixels(&self, pixels: Vec<u8>) -> Result<Self> {
        Self::new(
            self.index,
            self.timestamp_ms,
            self.width,
            self.height,
            pixels,
        )
    }

    pub fn same_size(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_size(&self, width: usize, height: usize, what: &str) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::DimensionMismatch(format!(
                "frame {} is {}x{}, {what} is {width}x{height}",
                self.index, self.width, self.height
            )));
        }
        Ok(())
    }
}

/// Milliseconds from the start of a sequence for frame `index` at `fps`.
pub fn timestamp_for(index: u64, fps: f64) -> u64 {
    (1000.0 * index as f64 / fps).round() as u64
}

/// ITU-R BT.601 luma of an interleaved RGB raster.
pub fn to_grayscale(rgb: &[u8], width: usize, height: usize) -> Result<Vec<u8>> {
    if rgb.len() != width * height * 3 {
        return Err(Error::DimensionMismatch(format!(
            "{} bytes for a {width}x{height} RGB raster",
            rgb.len()
        )));
    }
    Ok(rgb
        .chunks_exact(3)
        .map(|px| {
            let y = 0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]);
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub frame_count: u64,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub source_id: String,
}

/// Sidecar describing a `.y8` raw file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
}

#[derive(Debug, Deserialize)]
struct DirectoryMeta {
    fps: f64,
}

pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

#[derive(Debug)]
enum Source {
    Directory(Vec<PathBuf>),
    Raw {
        path: PathBuf,
        reader: BufReader<File>,
    },
}

/// Single-consumer reader yielding frames in index order.
#[derive(Debug)]
pub struct Sequence {
    meta: SequenceMeta,
    source: Source,
    next: u64,
}

/// Opens a frame directory or a `.y8` raw file.
pub fn open_sequence(path: impl AsRef<Path>) -> Result<Sequence> {
    let path = path.as_ref();
    let md = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if md.is_dir() {
        open_directory(path)
    } else {
        open_raw(path, md.len())
    }
}

fn source_id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "source".to_string())
}

fn is_still(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("pgm" | "png")
    )
}

fn open_directory(dir: &Path) -> Result<Sequence> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path();
        if p.is_file() && is_still(&p) {
            files.push(p);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptySequence(dir.to_path_buf()));
    }

    let mut dims = None;
    for (i, f) in files.iter().enumerate() {
        let (w, h) = ImageReader::open(f)
            .map_err(|e| Error::io(f, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(f, e))?
            .into_dimensions()
            .map_err(|e| Error::Decode {
                path: f.clone(),
                message: e.to_string(),
            })?;
        let (w, h) = (w as usize, h as usize);
        match dims {
            None => dims = Some((w, h)),
            Some((ew, eh)) if (ew, eh) != (w, h) => {
                return Err(Error::MixedDimensions {
                    index: i as u64,
                    expected_w: ew,
                    expected_h: eh,
                    found_w: w,
                    found_h: h,
                })
            }
            Some(_) => {}
        }
    }
    let (width, height) = dims.expect("at least one file");
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(Error::InvalidFrame(format!(
            "{width}x{height} frames are too small"
        )));
    }

    let meta_path = dir.join(DIRECTORY_META_FILE);
    let fps = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let m: DirectoryMeta = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: meta_path.clone(),
            message: e.to_string(),
        })?;
        m.fps
    } else {
        DEFAULT_FPS
    };
    check_fps(fps, &meta_path)?;

    Ok(Sequence {
        meta: SequenceMeta {
            frame_count: files.len() as u64,
            width,
            height,
            fps,
            source_id: source_id_for(dir),
        },
        source: Source::Directory(files),
        next: 0,
    })
}

fn check_fps(fps: f64, path: &Path) -> Result<()> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::Json {
            path: path.to_path_buf(),
            message: format!("fps must be positive, got {fps}"),
        });
    }
    Ok(())
}

pub fn read_sidecar(raw: &Path) -> Result<RawSidecar> {
    let side = sidecar_path(raw);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sc: RawSidecar = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: side.clone(),
        message: e.to_string(),
    })?;
    check_fps(sc.fps, &side)?;
    if sc.width < MIN_DIMENSION || sc.height < MIN_DIMENSION {
        return Err(Error::Json {
            path: side,
            message: format!("{}x{} frames are too small", sc.width, sc.height),
        });
    }
    Ok(sc)
}

fn open_raw(path: &Path, len: u64) -> Result<Sequence> {
    let sc = read_sidecar(path)?;
    let frame_bytes = (sc.width * sc.height) as u64;
    if len % frame_bytes != 0 {
        return Err(Error::TruncatedRaw {
            path: path.to_path_buf(),
            len,
            frame_bytes,
        });
    }
    if len == 0 {
        return Err(Error::EmptySequence(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(Sequence {
        meta: SequenceMeta {
            frame_count: len / frame_bytes,
            width: sc.width,
            height: sc.height,
            fps: sc.fps,
            source_id: source_id_for(path),
        },
        source: Source::Raw {
            path: path.to_path_buf(),
            reader: BufReader::new(file),
        },
        next: 0,
    })
}

impl Sequence {
    pub fn meta(&self) -> &SequenceMeta {
        &self.meta
    }

    /// Random access to frame `index`, independent of iteration state.
    pub fn read_frame(&self, index: u64) -> Result<Frame> {
        if index >= self.meta.frame_count {
            return Err(Error::InvalidFrame(format!(
                "frame {index} is past the end ({} frames)",
                self.meta.frame_count
            )));
        }
        match &self.source {
            Source::Directory(files) => self.decode_still(&files[index as usize], index),
            Source::Raw { path, .. } => {
                let frame_bytes = (self.meta.width * self.meta.height) as u64;
                let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
                f.seek(SeekFrom::Start(index * frame_bytes))
                    .map_err(|e| Error::io(path, e))?;
                let mut buf = vec![0u8; frame_bytes as usize];
                f.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
                self.make_frame(index, buf)
            }
        }
    }

    fn make_frame(&self, index: u64, pixels: Vec<u8>) -> Result<Frame> {
        Frame::new(
            index,
            timestamp_for(index, self.meta.fps),
            self.meta.width,
            self.meta.height,
            pixels,
        )
    }

    fn decode_still(&self, path: &Path, index: u64) -> Result<Frame> {
        let img = ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?
            .decode()
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        if (w, h) != (self.meta.width, self.meta.height) {
            return Err(Error::MixedDimensions {
                index,
                expected_w: self.meta.width,
                expected_h: self.meta.height,
                found_w: w,
                found_h: h,
            });
        }
        let pixels = match img {
            DynamicImage::ImageLuma8(g) => g.into_raw(),
            DynamicImage::ImageRgb8(rgb) => to_grayscale(rgb.as_raw(), w, h)?,
            other => to_grayscale(other.to_rgb8().as_raw(), w, h)?,
        };
        self.make_frame(index, pixels)
    }

    fn next_frame(&mut self) -> Result<Frame> {
        let index = self.next;
        match &mut self.source {
            Source::Directory(files) => {
                let path = files[index as usize].clone();
                self.decode_still(&path, index)
            }
            Source::Raw { path, reader } => {
                let mut buf = vec![0u8; self.meta.width * self.meta.height];
                reader
                    .read_exact(&mut buf)
                    .map_err(|e| Error::io(path.clone(), e))?;
                self.make_frame(index, buf)
            }
        }
    }
}

impl Iterator for Sequence {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.meta.frame_count {
            return None;
        }
        let out = self.next_frame();
        self.next += 1;
        if out.is_err() {
            // A decode failure ends the stream; indices after it would be misaligned.
            self.next = self.meta.frame_count;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.meta.frame_count - self.next) as usize;
        (left, Some(left))
    }
}

/// Writes a binary (P5, maxval 255) PGM.
pub fn write_pgm(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{} {}\n255\n", frame.width(), frame.height()).map_err(|e| Error::io(path, e))?;
    w.write_all(frame.pixels())
        .map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Streams frames into a `.y8` file and writes its sidecar.
pub fn write_raw<I>(path: impl AsRef<Path>, fps: f64, frames: I) -> Result<SequenceMeta>
where
    I: IntoIterator<Item = Result<Frame>>,
{
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut dims: Option<(usize, usize)> = None;
    let mut count = 0u64;
    for frame in frames {
        let frame = frame?;
        match dims {
            None => dims = Some((frame.width(), frame.height())),
            Some((ew, eh)) => frame.check_size(ew, eh, "sequence")?,
        }
        w.write_all(frame.pixels())
            .map_err(|e| Error::io(path, e))?;
        count += 1;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let (width, height) = dims.ok_or_else(|| Error::EmptySequence(path.to_path_buf()))?;
    let side = sidecar_path(path);
    let body =
        serde_json::to_string(&RawSidecar { width, height, fps }).expect("sidecar serializes");
    fs::write(&side, body).map_err(|e| Error::io(&side, e))?;
    Ok(SequenceMeta {
        frame_count: count,
        width,
        height,
        fps,
        source_id: source_id_for(path),
    })
}
