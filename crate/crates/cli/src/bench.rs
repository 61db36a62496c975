use std::fmt::Write as _;
use std::fs;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use slackwatch_core::{
    evaluate, run_pipeline, scenario, DetectionMetrics, DetectorConfig, DetectorKind,
};

use crate::commands::load_config;
use crate::BenchArgs;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub scenario: String,
    pub detector: DetectorKind,
    pub metrics: DetectionMetrics,
}

/// Scores every scenario × detector cell. Cells run in parallel; rows come
/// back in scenario-major input order.
pub fn bench_rows(
    scenarios: &[String],
    detectors: &[DetectorKind],
    base: &DetectorConfig,
) -> anyhow::Result<Vec<BenchRow>> {
    let suite = scenarios
        .iter()
        .map(|s| scenario(s))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<_> = suite
        .iter()
        .flat_map(|sc| detectors.iter().map(move |&d| (sc, d)))
        .collect();
    cells
        .into_par_iter()
        .map(|(sc, detector)| {
            let cfg = DetectorConfig {
                detector,
                ..base.clone()
            };
            let run = run_pipeline(sc.spec.frames(), &sc.roi, &cfg)
                .with_context(|| format!("{} / {}", sc.name, detector.as_str()))?;
            let truth = sc.spec.ground_truth().intervals();
            Ok(BenchRow {
                scenario: sc.name.to_string(),
                detector,
                metrics: evaluate(&run.events, &truth),
            })
        })
        .collect()
}

const HEADER: [&str; 8] = [
    "scenario", "detector", "events", "truth", "detected", "iou", "latency", "false",
];

fn cells(row: &BenchRow) -> [String; 8] {
    let m = &row.metrics;
    [
        row.scenario.clone(),
        row.detector.as_str().to_string(),
        m.events.to_string(),
        m.truth_events.to_string(),
        m.detected_truth.to_string(),
        format!("{:.3}", m.iou),
        m.mean_latency
            .map(|l| format!("{l:.1}"))
            .unwrap_or_else(|| "-".into()),
        m.false_events.to_string(),
    ]
}

pub fn table(rows: &[BenchRow]) -> String {
    let body: Vec<[String; 8]> = rows.iter().map(cells).collect();
    let mut widths = HEADER.map(str::len);
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |fields: &[&str]| {
        let padded: Vec<String> = fields
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (f, w))| {
                if i < 2 {
                    format!("{f:<w$}")
                } else {
                    format!("{f:>w$}")
                }
            })
            .collect();
        writeln!(out, "{}", padded.join("  ").trim_end()).unwrap();
    };
    line(&HEADER);
    for r in &body {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub fn csv(rows: &[BenchRow]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&cells(r).join(","));
        out.push('\n');
    }
    out
}

pub(crate) fn run(args: BenchArgs) -> anyhow::Result<()> {
    let base = load_config(args.config.as_deref())?;
    let rows = bench_rows(&args.scenarios, &args.detectors, &base)?;
    print!("{}", table(&rows));
    if let Some(path) = &args.csv {
        fs::write(path, csv(&rows)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
