//! Pipeline orchestration: motion masks → coarse proposals → classification
//! → tracklet tracking → re-detection → association, with optional stage
//! dumps. Detection is parallel over frames; tracking, re-detection and
//! association run sequentially in frame order so identical inputs produce
//! byte-identical outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::associate::{associate, Trajectory, TrackerGroups};
use crate::classify::{
    extract_patch_stack_at, Classifier, Detection, ExternalClassifier, FallbackClassifier,
    HeuristicClassifier,
};
use crate::config::{ClassifierSpec, PipelineConfig};
use crate::media::{load_sequence, write_frame, write_p5, Frame, SequenceManifest};
use crate::motion::motion_mask;
use crate::proposals::{coarse_proposals, RegionProposal, PROPOSAL_CSV_HEADER};
use crate::redetect::{GrowDirection, Redetector};
use crate::track::{validated_tracks, Track, Tracker, TRACK_CSV_HEADER};
use crate::{Error, Result};

/// Optional intermediate dumps; they never alter the main outputs.
#[derive(Debug, Clone, Default)]
pub struct StageDumps {
    pub masks: bool,
    pub proposals: bool,
    pub tracklets: bool,
    pub detections: bool,
}

impl StageDumps {
    pub fn parse(names: &[String]) -> Result<StageDumps> {
        let mut dumps = StageDumps::default();
        for name in names {
            match name.as_str() {
                "masks" => dumps.masks = true,
                "proposals" => dumps.proposals = true,
                "tracklets" => dumps.tracklets = true,
                "detections" => dumps.detections = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown stage `{other}` (expected masks|proposals|tracklets|detections)"
                    )))
                }
            }
        }
        Ok(dumps)
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub dumps: StageDumps,
    /// Directory for trajectory files and dumps; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub trajectory: Trajectory,
    pub groups: TrackerGroups,
    /// Validated tracklets as produced by round one, before re-detection.
    pub round_one_tracks: Vec<Track>,
    /// The same tracklets after intra/inter re-detection.
    pub tracks: Vec<Track>,
    /// All classified detections per frame (every label, not just balls).
    pub detections: Vec<Vec<Detection>>,
}

/// Builds the classifier backend from the config. A failing external spawn
/// degrades to the heuristic backend with a logged warning; later runtime
/// failures degrade the same way via [`FallbackClassifier`].
pub fn build_classifier(config: &PipelineConfig) -> Box<dyn Classifier> {
    let heuristic = HeuristicClassifier::new(config.heuristic_params());
    match &config.classifier {
        ClassifierSpec::Heuristic => Box::new(heuristic),
        ClassifierSpec::External(command) => match ExternalClassifier::spawn(command) {
            Ok(external) => Box::new(FallbackClassifier::new(Box::new(external), heuristic)),
            Err(e) => {
                log::warn!("external classifier unavailable ({e}); using heuristic backend");
                Box::new(heuristic)
            }
        },
    }
}

/// Runs detection on one interior frame: motion mask, coarse proposals,
/// classification, and coalescing of split ball observations.
fn detect_frame(
    frames: &[Frame],
    t: usize,
    config: &PipelineConfig,
    classifier: &dyn Classifier,
) -> Result<(Vec<RegionProposal>, Vec<Detection>)> {
    let params = config.proposal_params(frames[t].width, frames[t].height);
    let mask = motion_mask(&frames[t - 1], &frames[t], &frames[t + 1], config.motion_threshold)?;
    let proposals = coarse_proposals(&mask, &params);
    let stacks: Vec<_> = proposals
        .iter()
        .map(|p| extract_patch_stack_at(frames, p))
        .collect::<Result<_>>()?;
    let classifications = classifier.classify_batch(&stacks)?;
    let detections = proposals
        .iter()
        .zip(classifications)
        .map(|(p, c)| Detection::from_proposal(p, c))
        .collect();
    let gate = config.tracker_params(frames[t].width, frames[t].height).d;
    Ok((proposals, coalesce_ball_detections(detections, gate / 2.0)))
}

/// The streak of a ball changing direction mid-exposure can split into two
/// motion components, yielding two observations of one physical target.
/// Ball detections closer than `radius` merge into one: area-weighted
/// centroid, union bounding box, and the classification of the strongest
/// member. Non-ball detections pass through untouched.
fn coalesce_ball_detections(detections: Vec<Detection>, radius: f64) -> Vec<Detection> {
    let (balls, others): (Vec<Detection>, Vec<Detection>) =
        detections.into_iter().partition(|d| d.is_ball());
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| {
        balls[b]
            .confidence
            .partial_cmp(&balls[a].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut taken = vec![false; balls.len()];
    let mut out = Vec::with_capacity(balls.len());
    for &i in &order {
        if taken[i] {
            continue;
        }
        taken[i] = true;
        let mut merged = balls[i].clone();
        let mut weight = balls[i].bbox.area() as f64;
        let mut cx = merged.centroid.0 * weight;
        let mut cy = merged.centroid.1 * weight;
        for &j in &order {
            if taken[j] {
                continue;
            }
            if crate::geom::euclidean(balls[i].centroid, balls[j].centroid) <= radius {
                taken[j] = true;
                let w = balls[j].bbox.area() as f64;
                cx += balls[j].centroid.0 * w;
                cy += balls[j].centroid.1 * w;
                weight += w;
                let x0 = merged.bbox.x.min(balls[j].bbox.x);
                let y0 = merged.bbox.y.min(balls[j].bbox.y);
                let x1 = (merged.bbox.x + merged.bbox.w).max(balls[j].bbox.x + balls[j].bbox.w);
                let y1 = (merged.bbox.y + merged.bbox.h).max(balls[j].bbox.y + balls[j].bbox.h);
                merged.bbox = crate::geom::Bbox { x: x0, y: y0, w: x1 - x0, h: y1 - y0 };
            }
        }
        merged.centroid = (cx / weight, cy / weight);
        out.push(merged);
    }
    out.extend(others);
    // frame order is rebuilt deterministically: strongest-first within frame
    out
}

/// Full pipeline over an in-memory frame sequence.
pub fn run_on_frames(
    frames: &[Frame],
    config: &PipelineConfig,
    options: &PipelineOptions,
) -> Result<PipelineOutput> {
    config.validate()?;
    if frames.len() < 3 {
        return Err(Error::SequenceTooShort(frames.len()));
    }
    let n = frames.len();
    let (width, height) = (frames[0].width, frames[0].height);
    let classifier = build_classifier(config);

    // round one: detection, parallel over interior frames
    let stage = Error::at_stage("detect");
    let interior: Vec<usize> = (1..n - 1).collect();
    let per_frame: Vec<(Vec<RegionProposal>, Vec<Detection>)> = if config.threads == 1 {
        interior
            .iter()
            .map(|&t| detect_frame(frames, t, config, classifier.as_ref()))
            .collect::<Result<_>>()
            .map_err(stage)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads) // 0 = one thread per core
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| {
            interior
                .par_iter()
                .map(|&t| detect_frame(frames, t, config, classifier.as_ref()))
                .collect::<Result<_>>()
        })
        .map_err(stage)?
    };

    let mut proposals: Vec<Vec<RegionProposal>> = vec![Vec::new(); n];
    let mut detections: Vec<Vec<Detection>> = vec![Vec::new(); n];
    for (&t, (props, dets)) in interior.iter().zip(per_frame) {
        proposals[t] = props;
        detections[t] = dets;
    }

    // round one: tracking over ball detections, sequential in frame order
    let mut tracker = Tracker::new(config.tracker_params(width, height));
    for t in 0..n {
        let balls: Vec<Detection> = detections[t]
            .iter()
            .filter(|d| d.is_ball())
            .cloned()
            .collect();
        tracker.step(t, &balls);
    }
    let round_one_tracks = validated_tracks(tracker.finish());

    // round two: re-detection inside predicted regions of interest
    let mut tracks = round_one_tracks.clone();
    let redetector = Redetector {
        frames,
        proposal_params: &config.proposal_params(width, height),
        classifier: classifier.as_ref(),
        params: config.redetect_params(width, height),
    };
    for track in tracks.iter_mut() {
        redetector.intra_redetect(track);
    }
    // neighbour choices come from the pre-growth spans
    let spans: Vec<(usize, usize)> = tracks.iter().map(|t| (t.start_frame(), t.end_frame())).collect();
    for i in 0..tracks.len() {
        let (start, end) = spans[i];
        let future = spans
            .iter()
            .enumerate()
            .filter(|(j, (s, _))| *j != i && *s > end)
            .min_by_key(|(j, (s, _))| (*s, *j))
            .map(|(j, _)| j);
        let past = spans
            .iter()
            .enumerate()
            .filter(|(j, (_, e))| *j != i && *e < start)
            .max_by_key(|(j, (_, e))| (*e, usize::MAX - *j))
            .map(|(j, _)| j);
        if let Some(j) = future {
            let neighbor = tracks[j].clone();
            redetector.inter_redetect(&mut tracks[i], &neighbor, GrowDirection::Future);
        }
        if let Some(j) = past {
            let neighbor = tracks[j].clone();
            redetector.inter_redetect(&mut tracks[i], &neighbor, GrowDirection::Past);
        }
    }

    // association into the final trajectory
    let (trajectory, groups) = associate(&tracks, config.epsilon, config.t_valid);

    let output = PipelineOutput {
        trajectory,
        groups,
        round_one_tracks,
        tracks,
        detections,
    };
    if let Some(dir) = &options.out_dir {
        write_outputs(dir, &output, &proposals, options, config, frames)?;
    }
    Ok(output)
}

/// Full pipeline from a manifest on disk.
pub fn run_pipeline(
    manifest: &SequenceManifest,
    config: &PipelineConfig,
    options: &PipelineOptions,
) -> Result<PipelineOutput> {
    let frames = load_sequence(manifest).map_err(Error::at_stage("load"))?;
    run_on_frames(&frames, config, options)
}

fn write_outputs(
    dir: &Path,
    output: &PipelineOutput,
    proposals: &[Vec<RegionProposal>],
    options: &PipelineOptions,
    config: &PipelineConfig,
    frames: &[Frame],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write_text = |path: PathBuf, text: String| -> Result<()> {
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };

    write_text(dir.join("trajectory.csv"), output.trajectory.to_csv())?;
    write_text(
        dir.join("trajectory.json"),
        serde_json::to_string_pretty(&output.trajectory.to_json()).expect("json serializes"),
    )?;

    if options.dumps.proposals {
        let mut text = String::from(PROPOSAL_CSV_HEADER);
        text.push('\n');
        for frame_props in proposals {
            for p in frame_props {
                text.push_str(&p.csv_row());
                text.push('\n');
            }
        }
        write_text(dir.join("proposals.csv"), text)?;
    }
    if options.dumps.detections {
        let mut text = String::from("frame,cx,cy,label,confidence\n");
        for dets in &output.detections {
            for d in dets {
                text.push_str(&format!(
                    "{},{:.3},{:.3},{},{:.3}\n",
                    d.frame, d.centroid.0, d.centroid.1, d.label.id, d.confidence
                ));
            }
        }
        write_text(dir.join("detections.csv"), text)?;
    }
    if options.dumps.tracklets {
        let mut text = String::from(TRACK_CSV_HEADER);
        text.push('\n');
        for track in &output.tracks {
            for row in track.csv_rows() {
                text.push_str(&row);
                text.push('\n');
            }
        }
        write_text(dir.join("tracklets.csv"), text)?;
    }
    if options.dumps.masks {
        let mask_dir = dir.join("masks");
        fs::create_dir_all(&mask_dir).map_err(|e| Error::io(&mask_dir, e))?;
        for t in 1..frames.len().saturating_sub(1) {
            let mask = motion_mask(
                &frames[t - 1],
                &frames[t],
                &frames[t + 1],
                config.motion_threshold,
            )?;
            write_p5(
                &mask_dir.join(format!("mask_{t:05}.pgm")),
                mask.bits.width,
                mask.bits.height,
                &mask.bits.to_gray(),
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Overlay rendering
// ---------------------------------------------------------------------------

const MARKER: [u8; 3] = [230, 32, 32];
/// Trail length in frames for the overlay polyline.
const TRAIL: usize = 15;

fn draw_line(frame: &mut Frame, a: (f64, f64), b: (f64, f64)) {
    // Bresenham over rounded endpoints
    let (mut x0, mut y0) = (a.0.round() as i64, a.1.round() as i64);
    let (x1, y1) = (b.0.round() as i64, b.1.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x0 >= 0 && y0 >= 0 && (x0 as u32) < frame.width && (y0 as u32) < frame.height {
            frame.set_rgb(x0 as u32, y0 as u32, MARKER);
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn draw_marker(frame: &mut Frame, center: (f64, f64)) {
    let (cx, cy) = (center.0.round() as i64, center.1.round() as i64);
    for (dx, dy) in [(0i64, 0i64), (1, 0), (-1, 0), (0, 1), (0, -1)] {
        let (x, y) = (cx + dx, cy + dy);
        if x >= 0 && y >= 0 && (x as u32) < frame.width && (y as u32) < frame.height {
            frame.set_rgb(x as u32, y as u32, MARKER);
        }
    }
    // ring at radius 4
    for i in 0..32 {
        let a = i as f64 / 32.0 * std::f64::consts::TAU;
        let x = (center.0 + 4.0 * a.cos()).round() as i64;
        let y = (center.1 + 4.0 * a.sin()).round() as i64;
        if x >= 0 && y >= 0 && (x as u32) < frame.width && (y as u32) < frame.height {
            frame.set_rgb(x as u32, y as u32, MARKER);
        }
    }
}

/// Draws the trajectory point and a trailing polyline on each frame.
/// Frames without a trajectory position are returned unmodified.
pub fn overlay(frames: &[Frame], trajectory: &Trajectory) -> Vec<Frame> {
    frames
        .iter()
        .map(|f| {
            let mut out = f.clone();
            let t = f.index;
            // trail: consecutive positions within the window
            let lo = t.saturating_sub(TRAIL);
            let mut prev: Option<(f64, f64)> = None;
            for ft in lo..=t {
                if let Some(pos) = trajectory.position(ft) {
                    if let Some(p) = prev {
                        draw_line(&mut out, p, pos);
                    }
                    prev = Some(pos);
                } else {
                    prev = None;
                }
            }
            if let Some(pos) = trajectory.position(t) {
                draw_marker(&mut out, pos);
            }
            out
        })
        .collect()
}

/// Renders overlays for a sequence on disk into `out_dir` (P6 frames plus a
/// manifest).
pub fn overlay_to_dir(
    manifest: &SequenceManifest,
    trajectory: &Trajectory,
    out_dir: &Path,
) -> Result<()> {
    let frames = load_sequence(manifest)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = Vec::new();
    for frame in overlay(&frames, trajectory) {
        let name = format!("overlay_{:05}.ppm", frame.index);
        write_frame(&out_dir.join(&name), &frame)?;
        files.push(name);
    }
    let out_manifest = SequenceManifest::new(out_dir, files, manifest.fps);
    crate::media::write_manifest(&out_dir.join("sequence.txt"), &out_manifest)?;
    Ok(())
}

/// Writes an evaluation report beside the trajectory.
pub fn write_report(dir: &Path, report: &crate::eval::EvalReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("report.json");
    fs::write(&json_path, report.to_json()).map_err(|e| Error::io(&json_path, e))?;
    let table_path = dir.join("report.txt");
    let mut f = fs::File::create(&table_path).map_err(|e| Error::io(&table_path, e))?;
    f.write_all(report.to_table().as_bytes())
        .map_err(|e| Error::io(&table_path, e))
}
