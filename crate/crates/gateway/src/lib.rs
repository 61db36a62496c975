//! Operator-facing HTTP gateway.
//!
//! Replays footage through a live pipeline at `fps * speed` and serves its
//! state: status, frames with overlays, scores, events, an SSE telemetry
//! stream, and mutable ROI and detector config with an audit log.

pub mod api;
pub mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use slackwatch_core::{DetectorConfig, RoiConfig};

pub use api::router;
pub use slackwatch_core::FrameSource;
pub use state::{AuditEntry, Gateway, Status, StreamRecord};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error(transparent)]
    Core(#[from] slackwatch_core::Error),
    #[error("no ROI given and {0} has no built-in ROI")]
    MissingRoi(String),
    #[error("speed must be a positive number, got {0}")]
    InvalidSpeed(f64),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

impl GatewayError {
    pub fn is_config(&self) -> bool {
        match self {
            Self::Core(e) => e.is_config(),
            Self::MissingRoi(_) | Self::InvalidSpeed(_) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub input: String,
    pub roi: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub listen: SocketAddr,
    pub speed: f64,
}

/// Opens the source and builds the gateway without starting anything.
pub fn build(opts: &ServeOptions) -> Result<Gateway, GatewayError> {
    if !(opts.speed.is_finite() && opts.speed > 0.0) {
        return Err(GatewayError::InvalidSpeed(opts.speed));
    }
    let source = FrameSource::open(&opts.input)?;
    let roi = match &opts.roi {
        Some(path) => RoiConfig::load(path, Some(source.source_id()))?,
        None => source
            .default_roi()
            .cloned()
            .ok_or_else(|| GatewayError::MissingRoi(opts.input.clone()))?,
    };
    let config = match &opts.config {
        Some(path) => DetectorConfig::load(path)?,
        None => DetectorConfig::default(),
    };
    Ok(Gateway::new(source, roi, config)?)
}

/// Drives the gateway's pipeline in real time on a background thread until
/// the source runs out or a frame fails.
pub fn spawn_replay(gw: Arc<Gateway>, speed: f64) -> std::thread::JoinHandle<()> {
    let period = Duration::from_secs_f64(1.0 / (gw.source().fps() * speed));
    std::thread::spawn(move || {
        let start = Instant::now();
        let mut n: u32 = 0;
        while !gw.is_finished() {
            if let Err(e) = gw.step() {
                eprintln!("replay stopped: {e}");
                return;
            }
            n += 1;
            let due = start + period * n;
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                std::thread::sleep(wait);
            }
        }
    })
}

pub async fn serve(opts: ServeOptions) -> Result<(), GatewayError> {
    let gw = Arc::new(build(&opts)?);
    let listener = tokio::net::TcpListener::bind(opts.listen)
        .await
        .map_err(|source| GatewayError::Bind {
            addr: opts.listen,
            source,
        })?;
    let addr = listener.local_addr().map_err(GatewayError::Serve)?;
    eprintln!(
        "serving {} ({} frames at {} fps x{}) on http://{addr}",
        gw.source().source_id(),
        gw.source().frame_count(),
        gw.source().fps(),
        opts.speed
    );
    spawn_replay(gw.clone(), opts.speed);
    axum::serve(listener, router(gw))
        .await
        .map_err(GatewayError::Serve)
}
