//! Command-line front end: analyze, calibrate, synth, bench and serve.

mod bench;
mod commands;

use std::ffi::OsString;
use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use slackwatch_core::DetectorKind;
use slackwatch_gateway::GatewayError;

pub use bench::{bench_rows, BenchRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "slackwatch",
    version,
    about = "Cable slack detection from video"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the detector over footage and export scores, events and overlays.
    Analyze(AnalyzeArgs),
    /// Estimate sensor noise on a quiet interval and suggest a threshold.
    Calibrate(CalibrateArgs),
    /// Render a synthetic scene to disk.
    Synth(SynthArgs),
    /// Compare detectors on synthetic scenarios.
    Bench(BenchArgs),
    /// Replay footage through a live pipeline behind the HTTP API.
    Serve(ServeArgs),
}

/// Per-run overrides applied on top of the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, value_parser = parse_detector)]
    pub detector: Option<DetectorKind>,
    #[arg(long)]
    pub tau: Option<u32>,
    #[arg(long)]
    pub avg_window: Option<usize>,
    #[arg(long)]
    pub score_on: Option<f64>,
    #[arg(long)]
    pub score_off: Option<f64>,
    #[arg(long)]
    pub min_event_frames: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Frame directory, `.y8` file, scene-spec `.json`, or scenario name.
    #[arg(long)]
    pub input: String,
    /// ROI file; built-in scenarios fall back to their own ROI.
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub input: String,
    #[arg(long)]
    pub roi: Option<PathBuf>,
    /// Per-pixel false-alarm probability; without it tau is five noise sigmas.
    #[arg(long)]
    pub target_far: Option<f64>,
    /// Base config to copy fields from.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to write the config with the suggested tau.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// First frame of the quiet interval.
    #[arg(long, default_value_t = 0)]
    pub start: u64,
    /// Number of frames in the quiet interval.
    #[arg(long, default_value_t = 100)]
    pub frames: u64,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("scene").required(true).args(["scenario", "spec"])))]
pub struct SynthArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the scenario's ROI here.
    #[arg(long)]
    pub roi_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "S1,S2,S3,S4,S5")]
    pub scenarios: Vec<String>,
    #[arg(long, value_delimiter = ',', value_parser = parse_detector, default_value = "diff,gmm,edgefit")]
    pub detectors: Vec<DetectorKind>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the table as CSV here as well.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub input: String,
    #[arg(long)]
    pub roi: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
}

fn parse_detector(s: &str) -> Result<DetectorKind, String> {
    s.parse()
}

/// Bad combinations of otherwise well-formed arguments.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Maps a failure to the documented exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use slackwatch_core::Error as E;
    let core_code = |e: &E| match e {
        E::Io { .. }
        | E::Decode { .. }
        | E::EmptySequence(_)
        | E::TruncatedRaw { .. }
        | E::MixedDimensions { .. }
        | E::InvalidFrame(_)
        | E::NotEnoughFrames { .. } => EXIT_IO,
        e if e.is_config() => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    };
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return core_code(e);
        }
        if let Some(e) = cause.downcast_ref::<GatewayError>() {
            return match e {
                GatewayError::Core(inner) => core_code(inner),
                GatewayError::Bind { .. } => EXIT_IO,
                e if e.is_config() => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_FAILURE
}

/// The error chain joined with `: `, skipping causes already spelled out by
/// the message above them.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Synth(a) => commands::synth(a),
        Command::Bench(a) => bench::run(a),
        Command::Serve(a) => commands::serve(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            exit_code(&e)
        }
    }
}
