use std::fs;

use slackwatch_core::calibrate::{tau_for_false_alarm_rate, tau_from_sigma};
use slackwatch_core::score::parse_scores_csv;
use slackwatch_core::synth::{default_roi, render_scene};
use slackwatch_core::{
    calibrate, export_run, open_sequence, run_pipeline, scenario, scenario_suite, CalibrationMode,
    DetectorConfig, Frame, ScoreSeries,
};

#[test]
fn ground_truth_matches_rendered_sag() {
    for sc in scenario_suite() {
        let truth = sc.spec.ground_truth();
        assert_eq!(truth.per_frame_sag.len() as u64, sc.spec.frame_count);
        let mut covered = vec![false; truth.per_frame_sag.len()];
        for (a, b) in truth.intervals() {
            for n in a..=b {
                covered[n as usize] = true;
            }
        }
        for (n, &s) in truth.per_frame_sag.iter().enumerate() {
            assert_eq!(s > 0.0, covered[n], "{} frame {n}", sc.name);
            assert_eq!(s, sc.spec.frame_sag(n as u64));
        }
    }
}

#[test]
fn suite_shapes() {
    assert!(scenario("S3").unwrap().spec.slack_events.is_empty());
    let s2 = scenario("S2").unwrap().spec.ground_truth();
    assert_eq!(s2.events.len(), 4);
    let last = s2.events.last().unwrap().sag_px;
    assert!(s2.events[..3].iter().all(|e| e.sag_px < last));
    assert!(scenario("S9").is_err());
}

#[test]
fn quiet_frames_are_identical_without_nuisances() {
    let mut spec = scenario("S2").unwrap().spec;
    spec.noise_sigma = 0.0;
    spec.flicker_amplitude = 0.0;
    let truth = spec.ground_truth();
    let mut prev = spec.render_frame(0).unwrap();
    for n in 1..spec.frame_count {
        let f = spec.render_frame(n).unwrap();
        let sagging =
            truth.per_frame_sag[n as usize] > 0.0 || truth.per_frame_sag[n as usize - 1] > 0.0;
        if !sagging {
            assert_eq!(f.pixels(), prev.pixels(), "frame {n}");
        }
        prev = f;
    }
}

#[test]
fn s5_motion_lies_outside_default_roi() {
    let mut spec = scenario("S5").unwrap().spec;
    spec.noise_sigma = 0.0;
    let mask = default_roi("S5")
        .rasterize(spec.width, spec.height)
        .unwrap();
    let still = spec.render_frame(0).unwrap();
    let mut moved = 0;
    for n in (0..spec.frame_count).step_by(5) {
        let f = spec.render_frame(n).unwrap();
        for (i, (a, b)) in f.pixels().iter().zip(still.pixels()).enumerate() {
            if a != b {
                moved += 1;
                assert!(!mask.bits()[i], "frame {n} pixel {i} moves inside the ROI");
            }
        }
    }
    assert!(moved > 0);
}

#[test]
fn rendered_scene_round_trips_through_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = scenario("S1").unwrap().spec;
    spec.frame_count = 12;
    let paths = render_scene(&spec, dir.path()).unwrap();
    assert!(paths.raw.exists() && paths.sidecar.exists() && paths.truth.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 3);
    let seq = open_sequence(&paths.raw).unwrap();
    assert_eq!(seq.meta().frame_count, 12);
    for (n, f) in seq.enumerate() {
        let f = f.unwrap();
        assert_eq!(f.pixels(), spec.render_frame(n as u64).unwrap().pixels());
        assert_eq!(f.timestamp_ms(), (1000.0 * n as f64 / 30.0).round() as u64);
    }
    let again = tempfile::tempdir().unwrap();
    let p2 = render_scene(&spec, again.path()).unwrap();
    assert_eq!(fs::read(&paths.raw).unwrap(), fs::read(&p2.raw).unwrap());
    assert_eq!(
        fs::read(&paths.truth).unwrap(),
        fs::read(&p2.truth).unwrap()
    );
}

fn still_frames(n: u64) -> impl Iterator<Item = slackwatch_core::Result<Frame>> {
    (0..n).map(|i| Frame::new(i, i * 33, 32, 32, vec![90; 1024]))
}

#[test]
fn export_without_events() {
    let dir = tempfile::tempdir().unwrap();
    let roi = slackwatch_core::RoiConfig::new(
        "q",
        vec![slackwatch_core::RoiPolygon::rect("r", 4.0, 4.0, 28.0, 28.0).unwrap()],
    );
    let run = run_pipeline(still_frames(25), &roi, &DetectorConfig::default()).unwrap();
    let paths = export_run(dir.path(), &run, Some(&roi)).unwrap();
    let csv = fs::read_to_string(&paths.scores).unwrap();
    assert_eq!(csv.lines().count(), 1 + 24);
    assert!(paths.overlays.is_empty());
    assert_eq!(fs::read_to_string(&paths.events).unwrap().trim(), "[]");
}

#[test]
fn s1_export_round_trips_and_is_idempotent() {
    let sc = scenario("S1").unwrap();
    let cfg = DetectorConfig::default();
    let run = run_pipeline(sc.spec.frames(), &sc.roi, &cfg).unwrap();
    assert_eq!(run.events.len(), 1);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = export_run(a.path(), &run, Some(&sc.roi)).unwrap();
    let pb = export_run(b.path(), &run, Some(&sc.roi)).unwrap();
    assert_eq!(pa.overlays.len(), 1);
    let ev = &run.events[0];
    assert_eq!(
        pa.overlays[0].file_name().unwrap().to_str().unwrap(),
        format!("event_001_frame_{:06}.png", ev.peak_frame)
    );
    for (x, y) in [
        (&pa.scores, &pb.scores),
        (&pa.events, &pb.events),
        (&pa.overlays[0], &pb.overlays[0]),
    ] {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }

    let parsed = parse_scores_csv(&fs::read_to_string(&pa.scores).unwrap()).unwrap();
    let records: Vec<_> = parsed.iter().map(|(r, _)| *r).collect();
    assert_eq!(
        ScoreSeries::from_records(cfg.avg_window, records),
        run.series
    );
    for (r, id) in &parsed {
        assert_eq!(id.is_some(), ev.contains(r.frame));
    }

    let img = image::open(&pa.overlays[0]).unwrap().to_rgb8();
    let cap = &run.captures[0];
    for (x, y, p) in img.enumerate_pixels() {
        if cap.change.get(x as usize, y as usize) {
            assert_eq!(p[0], 255);
        }
    }
}

/// `P(|N(0,1)| >= z)` by composite Simpson integration of the density.
fn two_sided_tail(z: f64) -> f64 {
    let steps = 20_000;
    let h = z / steps as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(z);
    for i in 1..steps {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * s * h / 3.0
}

#[test]
fn target_rate_matches_numeric_tail_oracle() {
    for (sigma, p) in [(4.0, 1e-6), (2.0, 1e-3), (3.3, 0.05)] {
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if two_sided_tail(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let want = (std::f64::consts::SQRT_2 * sigma * hi).ceil() as u32;
        assert_eq!(
            tau_for_false_alarm_rate(sigma, p).unwrap(),
            want,
            "sigma {sigma} p {p}"
        );
    }
}

#[test]
fn s3_calibration_suggests_tau_in_range() {
    let sc = scenario("S3").unwrap();
    let frames: Vec<Frame> = sc.spec.frames().take(100).map(|f| f.unwrap()).collect();
    let mask = sc.roi.rasterize(sc.spec.width, sc.spec.height).unwrap();
    let c = calibrate(&frames, &mask, CalibrationMode::Sigmas).unwrap();
    assert!((3.4..=4.6).contains(&c.sigma), "{c:?}");
    assert!((25..=32).contains(&c.tau), "{c:?}");
    assert_eq!(c.tau, tau_from_sigma(c.sigma));
}
