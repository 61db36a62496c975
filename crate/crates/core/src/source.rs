//! Random-access footage for replay: a recorded sequence or a synthetic scene.

use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::{open_sequence, Frame, Sequence};
use crate::roi::RoiConfig;
use crate::synth::{scenario, SceneSpec, SCENARIO_NAMES};

#[derive(Debug)]
pub enum FrameSource {
    Recorded(Sequence),
    Synthetic {
        spec: SceneSpec,
        roi: Option<RoiConfig>,
    },
}

impl FrameSource {
    /// Accepts a frame directory or `.y8` file, a scene-spec `.json`, or a
    /// built-in scenario name such as `S1`.
    pub fn open(input: &str) -> Result<Self> {
        if SCENARIO_NAMES.contains(&input) {
            let sc = scenario(input)?;
            return Ok(Self::Synthetic {
                spec: sc.spec,
                roi: Some(sc.roi),
            });
        }
        let path = Path::new(input);
        if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let spec: SceneSpec = serde_json::from_str(&text).map_err(|e| Error::Json {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            spec.validate()?;
            return Ok(Self::Synthetic { spec, roi: None });
        }
        Ok(Self::Recorded(open_sequence(path)?))
    }

    pub fn synthetic(spec: SceneSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self::Synthetic { spec, roi: None })
    }

    pub fn source_id(&self) -> &str {
        match self {
            Self::Recorded(s) => &s.meta().source_id,
            Self::Synthetic { spec, .. } => &spec.name,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Self::Recorded(s) => s.meta().width,
            Self::Synthetic { spec, .. } => spec.width,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Self::Recorded(s) => s.meta().height,
            Self::Synthetic { spec, .. } => spec.height,
        }
    }

    pub fn fps(&self) -> f64 {
        match self {
            Self::Recorded(s) => s.meta().fps,
            Self::Synthetic { spec, .. } => spec.fps,
        }
    }

    pub fn frame_count(&self) -> u64 {
        match self {
            Self::Recorded(s) => s.meta().frame_count,
            Self::Synthetic { spec, .. } => spec.frame_count,
        }
    }

    /// The ROI shipped with a built-in scenario, if any.
    pub fn default_roi(&self) -> Option<&RoiConfig> {
        match self {
            Self::Synthetic { roi, .. } => roi.as_ref(),
            Self::Recorded(_) => None,
        }
    }

    /// Consumes the source as a forward stream of frames.
    pub fn into_frames(self) -> Box<dyn Iterator<Item = Result<Frame>> + Send> {
        match self {
            Self::Recorded(seq) => Box::new(seq),
            Self::Synthetic { spec, .. } => {
                Box::new((0..spec.frame_count).map(move |n| spec.render_frame(n)))
            }
        }
    }

    pub fn frame(&self, index: u64) -> Result<Frame> {
        match self {
            Self::Recorded(s) => s.read_frame(index),
            Self::Synthetic { spec, .. } if index < spec.frame_count => spec.render_frame(index),
            Self::Synthetic { spec, .. } => Err(Error::InvalidFrame(format!(
                "frame {index} is past the end ({} frames)",
                spec.frame_count
            ))),
        }
    }
}
