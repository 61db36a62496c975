use std::fs;
use std::path::Path;

use anyhow::Context;
use slackwatch_core::synth::render_scene;
use slackwatch_core::{
    calibrate as estimate, export_run, run_pipeline, scenario, CalibrationMode, DetectorConfig,
    Frame, FrameSource, RoiConfig, SceneSpec,
};
use slackwatch_gateway::ServeOptions;

use crate::{AnalyzeArgs, CalibrateArgs, Overrides, ServeArgs, SynthArgs, UsageError};

pub(crate) fn load_config(path: Option<&Path>) -> anyhow::Result<DetectorConfig> {
    Ok(match path {
        Some(p) => DetectorConfig::load(p)?,
        None => DetectorConfig::default(),
    })
}

impl Overrides {
    pub fn apply(&self, cfg: &mut DetectorConfig) -> slackwatch_core::Result<()> {
        if let Some(d) = self.detector {
            cfg.detector = d;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(w) = self.avg_window {
            cfg.avg_window = w;
        }
        if let Some(on) = self.score_on {
            cfg.score_on = on;
        }
        if let Some(off) = self.score_off {
            cfg.score_off = off;
        }
        if let Some(m) = self.min_event_frames {
            cfg.min_event_frames = m;
        }
        cfg.validate()
    }
}

fn resolve_roi(source: &FrameSource, path: Option<&Path>) -> anyhow::Result<RoiConfig> {
    match path {
        Some(p) => Ok(RoiConfig::load(p, Some(source.source_id()))?),
        None => source.default_roi().cloned().ok_or_else(|| {
            UsageError(format!(
                "--roi is required: {} has no built-in ROI",
                source.source_id()
            ))
            .into()
        }),
    }
}

pub(crate) fn analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    args.overrides.apply(&mut cfg)?;
    let source = FrameSource::open(&args.input)?;
    let roi = resolve_roi(&source, args.roi.as_deref())?;
    let run = run_pipeline(source.into_frames(), &roi, &cfg)?;
    for ev in &run.events {
        println!(
            "EVENT {} frames {}..{} peak {:.3}@{}",
            ev.id, ev.start_frame, ev.end_frame, ev.peak_score, ev.peak_frame
        );
    }
    println!("{} events", run.events.len());
    export_run(&args.out, &run, Some(&roi))?;
    Ok(())
}

pub(crate) fn calibrate(args: CalibrateArgs) -> anyhow::Result<()> {
    let mode = match args.target_far {
        Some(p) => CalibrationMode::TargetFar(p),
        None => CalibrationMode::Sigmas,
    };
    let source = FrameSource::open(&args.input)?;
    let roi = resolve_roi(&source, args.roi.as_deref())?;
    let mask = roi.rasterize(source.width(), source.height())?;
    let frames: Vec<Frame> = source
        .into_frames()
        .skip(args.start as usize)
        .take(args.frames as usize)
        .collect::<Result<_, _>>()?;
    let c = estimate(&frames, &mask, mode)?;
    if let Some(w) = &c.warning {
        eprintln!("warning: {w}");
    }
    println!("sigma {:.4}", c.sigma);
    println!("tau {}", c.tau);

    if let Some(out) = &args.out {
        let mut cfg = load_config(args.config.as_deref())?;
        cfg.tau = c.tau;
        cfg.validate()?;
        fs::write(out, cfg.to_json()).with_context(|| format!("writing {}", out.display()))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

pub(crate) fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let (spec, roi) = match (&args.scenario, &args.spec) {
        (Some(name), _) => {
            let sc = scenario(name)?;
            (sc.spec, Some(sc.roi))
        }
        (None, Some(path)) => {
            let spec = match FrameSource::open(&path.to_string_lossy())? {
                FrameSource::Synthetic { spec, .. } => spec,
                FrameSource::Recorded(_) => {
                    return Err(UsageError(format!(
                        "{} is not a scene spec (.json)",
                        path.display()
                    ))
                    .into())
                }
            };
            (spec, None::<RoiConfig>)
        }
        (None, None) => unreachable!("clap requires one of --scenario or --spec"),
    };
    write_scene(&spec, &args.out)?;
    if let Some(path) = &args.roi_out {
        let roi = roi.ok_or_else(|| UsageError("--roi-out needs a built-in --scenario".into()))?;
        fs::write(path, roi.to_json()).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn write_scene(spec: &SceneSpec, out: &Path) -> anyhow::Result<()> {
    let paths = render_scene(spec, out)?;
    for p in [&paths.raw, &paths.sidecar, &paths.truth] {
        println!("{}", p.display());
    }
    Ok(())
}

pub(crate) fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let opts = ServeOptions {
        input: args.input,
        roi: args.roi,
        config: args.config,
        listen: args.listen,
        speed: args.speed,
    };
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting runtime")?;
    rt.block_on(slackwatch_gateway::serve(opts))?;
    Ok(())
}
