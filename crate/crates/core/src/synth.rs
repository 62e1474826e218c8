//! Deterministic synthetic rally sequences with ground truth.
//!
//! The ball follows piecewise ballistic motion — constant gravity, velocity
//! reset at each hit event — and is rendered as an anti-aliased motion-blur
//! streak along its per-frame displacement. A green court with white
//! sidelines, swaying player blobs, bright specks (optionally blinking) and
//! occlusion windows provide the interference the detector has to survive.
//! Everything derives from the config, so identical configs produce
//! byte-identical frames.
//!
//! Ground truth records each frame's class: IF (ball absent or out of view),
//! OF (ball visible against a player body) or NOF (ball against the normal
//! background), plus the ball center for valid frames and the hit frames.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::media::{write_frame, write_manifest, Frame, SequenceManifest};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameClass {
    #[serde(rename = "IF")]
    Invalid,
    #[serde(rename = "OF")]
    Overlapping,
    #[serde(rename = "NOF")]
    NonOverlapping,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtFrame {
    pub i: usize,
    pub class: FrameClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frames: Vec<GtFrame>,
    #[serde(default)]
    pub hits: Vec<usize>,
}

impl GroundTruth {
    pub fn center(&self, frame: usize) -> Option<Point> {
        let f = self.frames.get(frame)?;
        Some((f.cx?, f.cy?))
    }

    pub fn class(&self, frame: usize) -> Option<FrameClass> {
        self.frames.get(frame).map(|f| f.class)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("ground truth serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<GroundTruth> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Synth(format!("{}: bad ground truth: {e}", path.display())))
    }

    /// Ranges of consecutive OF frames; used for the fragment audit.
    pub fn overlap_windows(&self) -> Vec<(usize, usize)> {
        let mut windows = Vec::new();
        let mut start: Option<usize> = None;
        for f in &self.frames {
            match (f.class, start) {
                (FrameClass::Overlapping, None) => start = Some(f.i),
                (FrameClass::Overlapping, Some(_)) => {}
                (_, Some(s)) => {
                    windows.push((s, f.i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            windows.push((s, self.frames.len() - 1));
        }
        windows
    }
}

/// A racket hit: from this frame on, the ball flies with the new velocity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HitEvent {
    pub frame: usize,
    pub velocity: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OcclusionKind {
    #[serde(rename = "player-overlap")]
    PlayerOverlap,
    #[serde(rename = "out-of-view")]
    OutOfView,
}

/// Inclusive frame window in which the ball is occluded or covered.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OcclusionWindow {
    pub start: usize,
    pub end: usize,
    pub kind: OcclusionKind,
}

/// A swaying two-blob player: torso ellipse plus head disc.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlayerSpec {
    pub center: (f64, f64),
    /// Torso half-axes in pixels.
    pub size: (f64, f64),
    pub sway_amplitude: f64,
    pub sway_period: f64,
    pub phase: f64,
}

/// A small bright speck; `blink_period` 0 keeps it always on, otherwise it
/// is visible for `blink_period` frames, hidden for the next
/// `blink_period`, and so on. With a `blink_window`, blinking happens only
/// inside that inclusive frame range and the speck is solid-on outside it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpeckSpec {
    pub pos: (f64, f64),
    pub radius: f64,
    pub blink_period: usize,
    #[serde(default)]
    pub blink_window: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub fps: f64,
    pub start: (f64, f64),
    pub initial_velocity: (f64, f64),
    /// Downward acceleration in px/frame².
    pub gravity: f64,
    pub segments: Vec<HitEvent>,
    pub ball_radius: f64,
    /// Streak length factor: exposure time in frames.
    pub blur_factor: f64,
    pub players: Vec<PlayerSpec>,
    pub specks: Vec<SpeckSpec>,
    pub occlusions: Vec<OcclusionWindow>,
}

impl SynthConfig {
    /// Loads a synthetic config from its JSON form.
    pub fn load(path: &Path) -> Result<SynthConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SynthConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Synth(format!("{}: bad synth config: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < crate::media::MIN_DIM || self.height < crate::media::MIN_DIM {
            return Err(Error::Synth(format!(
                "resolution {}x{} below minimum",
                self.width, self.height
            )));
        }
        if self.frames == 0 {
            return Err(Error::Synth("frame count must be positive".into()));
        }
        let mut last = None;
        for hit in &self.segments {
            if hit.frame >= self.frames {
                return Err(Error::Synth(format!(
                    "hit at frame {} beyond sequence of {}",
                    hit.frame, self.frames
                )));
            }
            if let Some(prev) = last {
                if hit.frame <= prev {
                    return Err(Error::Synth(
                        "hit frames must be strictly increasing".into(),
                    ));
                }
            }
            last = Some(hit.frame);
        }
        for w in &self.occlusions {
            if w.start > w.end || w.end >= self.frames {
                return Err(Error::Synth(format!(
                    "occlusion window {}..={} out of range",
                    w.start, w.end
                )));
            }
        }
        if self.ball_radius <= 0.0 || self.blur_factor < 0.0 {
            return Err(Error::Synth("ball radius/blur factor out of range".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Kinematics
// ---------------------------------------------------------------------------

/// Piecewise ballistic ball path, evaluable at fractional frame times.
#[derive(Debug, Clone)]
pub struct BallPath {
    /// Per integer frame: position and velocity at that instant.
    knots: Vec<(Point, Point)>,
    gravity: f64,
}

impl BallPath {
    pub fn new(config: &SynthConfig) -> BallPath {
        let mut knots = Vec::with_capacity(config.frames);
        let mut pos = config.start;
        let mut vel = config.initial_velocity;
        for t in 0..config.frames {
            if let Some(hit) = config.segments.iter().find(|h| h.frame == t) {
                vel = hit.velocity;
            }
            knots.push((pos, vel));
            // constant-acceleration step
            pos = (
                pos.0 + vel.0,
                pos.1 + vel.1 + config.gravity / 2.0,
            );
            vel = (vel.0, vel.1 + config.gravity);
        }
        BallPath { knots, gravity: config.gravity }
    }

    /// Position at integer frame t.
    pub fn at(&self, t: usize) -> Point {
        self.knots[t.min(self.knots.len() - 1)].0
    }

    /// Position at fractional time; clamped to the sequence span.
    pub fn at_time(&self, time: f64) -> Point {
        let max_t = (self.knots.len() - 1) as f64;
        let time = time.clamp(0.0, max_t);
        let base = (time.floor() as usize).min(self.knots.len() - 1);
        let s = time - base as f64;
        let (p, v) = self.knots[base];
        (
            p.0 + v.0 * s,
            p.1 + v.1 * s + self.gravity * s * s / 2.0,
        )
    }
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

pub const COURT_GREEN: [u8; 3] = [62, 118, 72];
pub const LINE_WHITE: [u8; 3] = [200, 200, 200];
pub const BALL_WHITE: [u8; 3] = [244, 244, 240];
const TORSO_RED: [u8; 3] = [148, 44, 52];
const SKIN: [u8; 3] = [210, 168, 138];
const SPECK_WHITE: [u8; 3] = [235, 235, 230];

fn blend(f: &mut Frame, x: u32, y: u32, rgb: [u8; 3], alpha: f64) {
    if alpha <= 0.0 {
        return;
    }
    if alpha >= 1.0 {
        f.set_rgb(x, y, rgb);
        return;
    }
    let bg = f.rgb(x, y);
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (bg[c] as f64 * (1.0 - alpha) + rgb[c] as f64 * alpha).round() as u8;
    }
    f.set_rgb(x, y, out);
}

fn fill_disc(f: &mut Frame, cx: f64, cy: f64, r: f64, rgb: [u8; 3]) {
    let x0 = ((cx - r - 1.0).floor().max(0.0)) as u32;
    let y0 = ((cy - r - 1.0).floor().max(0.0)) as u32;
    let x1 = (((cx + r + 1.0).ceil()).max(0.0) as u32).min(f.width.saturating_sub(1));
    let y1 = (((cy + r + 1.0).ceil()).max(0.0) as u32).min(f.height.saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            blend(f, x, y, rgb, (r + 0.5 - d).clamp(0.0, 1.0));
        }
    }
}

fn fill_ellipse(f: &mut Frame, cx: f64, cy: f64, rx: f64, ry: f64, rgb: [u8; 3]) {
    let x0 = ((cx - rx - 1.0).floor().max(0.0)) as u32;
    let y0 = ((cy - ry - 1.0).floor().max(0.0)) as u32;
    let x1 = (((cx + rx + 1.0).ceil()).max(0.0) as u32).min(f.width.saturating_sub(1));
    let y1 = (((cy + ry + 1.0).ceil()).max(0.0) as u32).min(f.height.saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let nx = (x as f64 - cx) / rx;
            let ny = (y as f64 - cy) / ry;
            let d = (nx * nx + ny * ny).sqrt();
            // approximate 1px AA band in normalized space
            let band = 1.0 / rx.min(ry);
            let alpha = ((1.0 + band / 2.0 - d) / band).clamp(0.0, 1.0);
            blend(f, x, y, rgb, alpha);
        }
    }
}

fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len2 = ab.0 * ab.0 + ab.1 * ab.1;
    if len2 < 1e-12 {
        return (ap.0 * ap.0 + ap.1 * ap.1).sqrt();
    }
    let t = ((ap.0 * ab.0 + ap.1 * ab.1) / len2).clamp(0.0, 1.0);
    let q = (a.0 + ab.0 * t, a.1 + ab.1 * t);
    ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
}

fn fill_capsule(f: &mut Frame, a: Point, b: Point, r: f64, rgb: [u8; 3]) {
    let x0 = ((a.0.min(b.0) - r - 1.0).floor().max(0.0)) as u32;
    let y0 = ((a.1.min(b.1) - r - 1.0).floor().max(0.0)) as u32;
    let x1 = (((a.0.max(b.0) + r + 1.0).ceil()).max(0.0) as u32).min(f.width.saturating_sub(1));
    let y1 = (((a.1.max(b.1) + r + 1.0).ceil()).max(0.0) as u32).min(f.height.saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d = distance_to_segment((x as f64, y as f64), a, b);
            blend(f, x, y, rgb, (r + 0.5 - d).clamp(0.0, 1.0));
        }
    }
}

fn draw_court(f: &mut Frame) {
    let w = f.width as f64;
    let h = f.height as f64;
    let line = |f: &mut Frame, x0: f64, y0: f64, x1: f64, y1: f64, t: f64| {
        for y in (y0.max(0.0) as u32)..=(y1.min(h - 1.0) as u32) {
            for x in (x0.max(0.0) as u32)..=(x1.min(w - 1.0) as u32) {
                let _ = t;
                f.set_rgb(x, y, LINE_WHITE);
            }
        }
    };
    let mx = w * 0.08;
    let my = h * 0.12;
    let t = (w / 640.0).max(1.0).round();
    // outer rectangle
    line(f, mx, my, w - mx, my + t, t);
    line(f, mx, h - my - t, w - mx, h - my, t);
    line(f, mx, my, mx + t, h - my, t);
    line(f, w - mx - t, my, w - mx, h - my, t);
    // service line across the middle
    let mid = h / 2.0;
    line(f, mx, mid, w - mx, mid + t, t);
}

/// Player torso + head at a given sway offset.
fn draw_player(f: &mut Frame, center: Point, size: (f64, f64)) {
    fill_ellipse(f, center.0, center.1, size.0, size.1, TORSO_RED);
    fill_disc(f, center.0, center.1 - size.1 - size.0 * 0.5, size.0 * 0.55, SKIN);
}

fn player_center(spec: &PlayerSpec, t: usize) -> Point {
    let sway = spec.sway_amplitude
        * (2.0 * std::f64::consts::PI * t as f64 / spec.sway_period + spec.phase).sin();
    (spec.center.0 + sway, spec.center.1)
}

fn occlusion_at(config: &SynthConfig, t: usize) -> Option<&OcclusionWindow> {
    config.occlusions.iter().find(|w| w.start <= t && t <= w.end)
}

/// Blend-in margin, in frames, for the occluder blob sliding onto the ball.
const OCCLUDER_APPROACH: usize = 3;

fn occluder_center(config: &SynthConfig, path: &BallPath, w: &OcclusionWindow, t: usize) -> Option<Point> {
    // parked above the frame, slides in over the approach margin, covers the
    // ball during the window, slides back out
    let park = (path.at(w.start).0, -(config.height as f64) * 0.4);
    let target = path.at(t.clamp(w.start, w.end));
    if t + OCCLUDER_APPROACH < w.start || t > w.end + OCCLUDER_APPROACH {
        return None;
    }
    if t < w.start {
        let s = 1.0 - (w.start - t) as f64 / OCCLUDER_APPROACH as f64;
        Some(crate::geom::lerp(park, path.at(w.start), s))
    } else if t <= w.end {
        Some(target)
    } else {
        let s = (t - w.end) as f64 / OCCLUDER_APPROACH as f64;
        Some(crate::geom::lerp(path.at(w.end), park, s))
    }
}

/// Renders one frame of the sequence.
fn render_frame(config: &SynthConfig, path: &BallPath, t: usize) -> Frame {
    let mut f = Frame::filled(t, config.width, config.height, COURT_GREEN);
    draw_court(&mut f);

    for spec in &config.players {
        draw_player(&mut f, player_center(spec, t), spec.size);
    }
    for speck in &config.specks {
        let blinking = match speck.blink_window {
            Some((s, e)) => s <= t && t <= e,
            None => true,
        };
        let on = match speck.blink_period {
            0 => true,
            _ if !blinking => true,
            p => (t / p) % 2 == 0,
        };
        if on {
            fill_disc(&mut f, speck.pos.0, speck.pos.1, speck.radius, SPECK_WHITE);
        }
    }

    let occlusion = occlusion_at(config, t);
    // the player-overlap occluder is drawn for every window of that kind
    // whose approach margin covers t
    for w in config
        .occlusions
        .iter()
        .filter(|w| w.kind == OcclusionKind::PlayerOverlap)
    {
        if let Some(center) = occluder_center(config, path, w, t) {
            let size = (
                (config.width as f64 / 640.0) * 26.0,
                (config.height as f64 / 360.0) * 48.0,
            );
            draw_player(&mut f, (center.0, center.1), size);
        }
    }

    let hidden = matches!(occlusion, Some(w) if w.kind == OcclusionKind::OutOfView);
    if !hidden {
        // motion-blur streak: sub-sampled capsule chain over the exposure,
        // robust to velocity kinks at hit frames
        let e = config.blur_factor;
        let subs = 6;
        let mut prev = path.at_time(t as f64 - e / 2.0);
        for i in 1..=subs {
            let time = t as f64 - e / 2.0 + e * i as f64 / subs as f64;
            let next = path.at_time(time);
            fill_capsule(&mut f, prev, next, config.ball_radius, BALL_WHITE);
            prev = next;
        }
    }
    f
}

fn classify_frame(config: &SynthConfig, path: &BallPath, t: usize) -> GtFrame {
    let pos = path.at(t);
    let in_bounds =
        pos.0 >= 0.0 && pos.1 >= 0.0 && pos.0 < config.width as f64 && pos.1 < config.height as f64;
    let class = match occlusion_at(config, t) {
        Some(w) if w.kind == OcclusionKind::OutOfView => FrameClass::Invalid,
        Some(w) if w.kind == OcclusionKind::PlayerOverlap => FrameClass::Overlapping,
        _ if !in_bounds => FrameClass::Invalid,
        _ => FrameClass::NonOverlapping,
    };
    match class {
        FrameClass::Invalid => GtFrame { i: t, class, cx: None, cy: None },
        _ => GtFrame { i: t, class, cx: Some(pos.0), cy: Some(pos.1) },
    }
}

/// Renders the whole sequence in memory.
pub fn simulate(config: &SynthConfig) -> Result<(Vec<Frame>, GroundTruth)> {
    config.validate()?;
    let path = BallPath::new(config);
    // the ball must stay in frame outside configured out-of-view windows,
    // otherwise ground-truth classes would not reconcile with the config
    for t in 0..config.frames {
        let gt = classify_frame(config, &path, t);
        let configured_invalid = matches!(
            occlusion_at(config, t),
            Some(w) if w.kind == OcclusionKind::OutOfView
        );
        if gt.class == FrameClass::Invalid && !configured_invalid {
            return Err(Error::Synth(format!(
                "ball leaves the frame at t={t} outside any out-of-view window"
            )));
        }
    }
    let frames: Vec<Frame> = (0..config.frames)
        .map(|t| render_frame(config, &path, t))
        .collect();
    let truth = GroundTruth {
        frames: (0..config.frames)
            .map(|t| classify_frame(config, &path, t))
            .collect(),
        hits: config.segments.iter().map(|h| h.frame).collect(),
    };
    Ok((frames, truth))
}

/// Renders the sequence into `dir` as P6 frames plus `sequence.txt` manifest
/// and `ground_truth.json`.
pub fn generate(config: &SynthConfig, dir: &Path) -> Result<(SequenceManifest, GroundTruth)> {
    let (frames, truth) = simulate(config)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(frames.len());
    for frame in &frames {
        let name = format!("frame_{:05}.ppm", frame.index);
        write_frame(&dir.join(&name), frame)?;
        files.push(name);
    }
    let manifest = SequenceManifest::new(dir, files, config.fps);
    write_manifest(&dir.join("sequence.txt"), &manifest)?;
    truth.save(&dir.join("ground_truth.json"))?;
    Ok((manifest, truth))
}

// ---------------------------------------------------------------------------
// Scenario presets
// ---------------------------------------------------------------------------

/// Builders for the benchmark scenes used by the acceptance suite and the
/// CLI. All take the target resolution; speeds and layout scale with it.
pub mod scenarios {
    use super::*;

    /// splitmix64; used to derive stable speck/phase jitter from the seed.
    fn mix(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn unit(state: &mut u64) -> f64 {
        (mix(state) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn base(seed: u64, width: u32, height: u32, frames: usize) -> SynthConfig {
        let sx = width as f64 / 640.0;
        let sy = height as f64 / 360.0;
        SynthConfig {
            seed,
            width,
            height,
            frames,
            fps: 30.0,
            start: (60.0 * sx, 250.0 * sy),
            initial_velocity: (5.0 * sx, -4.0 * sy),
            gravity: 0.35 * (height as f64 / 720.0),
            segments: vec![],
            ball_radius: 2.5 * sx.max(0.8),
            blur_factor: 0.5,
            players: vec![],
            specks: vec![],
            occlusions: vec![],
        }
    }

    /// 120-frame rally with two hits, no distractors, no occlusion.
    pub fn clean_rally(seed: u64, width: u32, height: u32) -> SynthConfig {
        let sx = width as f64 / 640.0;
        let sy = height as f64 / 360.0;
        let mut cfg = base(seed, width, height, 120);
        cfg.segments = vec![
            HitEvent { frame: 45, velocity: (-5.5 * sx, -4.5 * sy) },
            HitEvent { frame: 85, velocity: (5.0 * sx, -3.5 * sy) },
        ];
        cfg
    }

    /// Clean rally plus one 5-frame player-overlap window mid-flight.
    pub fn occlusion(seed: u64, width: u32, height: u32) -> SynthConfig {
        let mut cfg = clean_rally(seed, width, height);
        cfg.occlusions = vec![OcclusionWindow {
            start: 60,
            end: 64,
            kind: OcclusionKind::PlayerOverlap,
        }];
        cfg
    }

    /// Rally with a 6-frame smash at ~45 px/frame (at 640×360) between two
    /// normal-speed segments.
    pub fn fastball(seed: u64, width: u32, height: u32) -> SynthConfig {
        let sx = width as f64 / 640.0;
        let sy = height as f64 / 360.0;
        let mut cfg = base(seed, width, height, 90);
        cfg.start = (70.0 * sx, 100.0 * sy);
        cfg.initial_velocity = (5.0 * sx, -3.0 * sy);
        cfg.segments = vec![
            // smash: frames 40..=45 down the court
            HitEvent { frame: 40, velocity: (42.0 * sx, 8.0 * sy) },
            // block return to normal speed
            HitEvent { frame: 46, velocity: (-4.0 * sx, -7.0 * sy) },
        ];
        cfg
    }

    /// Frames of [`fastball`] reached by a smash-speed displacement: the
    /// smash hit lands at frame 40, the block at 46, so the ball arrives at
    /// frames 41..=46 at smash speed.
    pub const FASTBALL_SMASH: (usize, usize) = (41, 46);

    /// Clean rally plus a white speck far from the flight path that blinks
    /// for twenty frames, producing a ~10-response bogus stationary tracklet
    /// for association to reject.
    pub fn noise(seed: u64, width: u32, height: u32) -> SynthConfig {
        let sx = width as f64 / 640.0;
        let sy = height as f64 / 360.0;
        let mut cfg = clean_rally(seed, width, height);
        let mut state = seed.wrapping_add(1);
        let jx = unit(&mut state) * 20.0 - 10.0;
        let jy = unit(&mut state) * 10.0 - 5.0;
        cfg.specks = vec![SpeckSpec {
            pos: ((520.0 + jx) * sx, (60.0 + jy) * sy),
            radius: 2.5 * sx.max(0.8),
            blink_period: 1,
            blink_window: Some((20, 41)),
        }];
        cfg
    }

    /// Rally passing behind a standing player (for OF-frame coverage) with a
    /// static speck; exercises every interference source at once.
    pub fn busy(seed: u64, width: u32, height: u32) -> SynthConfig {
        let sx = width as f64 / 640.0;
        let sy = height as f64 / 360.0;
        let mut cfg = occlusion(seed, width, height);
        let mut state = seed.wrapping_add(7);
        cfg.players = vec![PlayerSpec {
            center: (480.0 * sx, 260.0 * sy),
            size: (22.0 * sx, 42.0 * sy),
            sway_amplitude: 6.0 * sx,
            sway_period: 40.0,
            phase: unit(&mut state) * std::f64::consts::TAU,
        }];
        cfg.specks = vec![SpeckSpec {
            pos: (560.0 * sx, 40.0 * sy),
            radius: 2.0 * sx.max(0.8),
            blink_period: 0,
            blink_window: None,
        }];
        cfg
    }
}
