//! Ball/non-ball decision over region proposals.
//!
//! A proposal is judged from a stack of three 50×50 patches cut from frames
//! t−1, t, t+1. Each patch is a window centred on the proposal centroid with
//! side 5 × max(bbox w, h) — the target itself has almost no texture, so the
//! decision needs surrounding context — clamped at frame borders by edge
//! replication and bilinearly resized.
//!
//! The classifier backend is pluggable: a rule-based in-core backend, or an
//! external process speaking line-delimited JSON over standard streams (for a
//! learned model). Both emit an 18-way label, a confidence and a 64-element
//! unit-norm feature vector used by the fastball tracker.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::media::{pixel_rgb_to_hsl, Frame};
use crate::proposals::RegionProposal;
use crate::{Error, Result};

/// Side of a classification patch in pixels.
pub const PATCH_SIZE: u32 = 50;
/// Window enlargement relative to the proposal bounding box.
pub const WINDOW_SCALE: f64 = 5.0;
/// Length of the feature vector produced by every backend.
pub const FEATURE_LEN: usize = 64;

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

/// One of the 18 object classes observed on a badminton court.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel {
    pub id: u8,
}

pub const LABEL_NAMES: [&str; 18] = [
    "Ball on simple background",
    "Ball on sideline",
    "Ball on complex background",
    "Sideline",
    "Hand",
    "Head",
    "Racket",
    "Trunk",
    "Field without sideline",
    "Shoe",
    "Score column",
    "Letter",
    "Light",
    "Arm",
    "Leg",
    "Pants",
    "Shoulder",
    "Other objects",
];

pub const BALL_SIMPLE: ClassLabel = ClassLabel { id: 0 };
pub const BALL_SIDELINE: ClassLabel = ClassLabel { id: 1 };
pub const BALL_COMPLEX: ClassLabel = ClassLabel { id: 2 };
pub const SIDELINE: ClassLabel = ClassLabel { id: 3 };
pub const TRUNK: ClassLabel = ClassLabel { id: 7 };
pub const OTHER: ClassLabel = ClassLabel { id: 17 };

impl ClassLabel {
    pub fn new(id: u8) -> Result<Self> {
        if (id as usize) < LABEL_NAMES.len() {
            Ok(ClassLabel { id })
        } else {
            Err(Error::Backend(format!("label id {id} out of range")))
        }
    }

    pub fn name(&self) -> &'static str {
        LABEL_NAMES[self.id as usize]
    }
}

/// The pipeline only cares whether the target is the ball, not which of the
/// three ball classes it fell into.
pub fn is_ball(label: ClassLabel) -> bool {
    matches!(label.id, 0 | 1 | 2)
}

// ---------------------------------------------------------------------------
// Patch extraction
// ---------------------------------------------------------------------------

/// One 50×50 RGB patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    data: Vec<u8>, // PATCH_SIZE × PATCH_SIZE × 3
}

impl Patch {
    #[inline]
    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * PATCH_SIZE as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn luminance(&self, x: u32, y: u32) -> f64 {
        let [r, g, b] = self.rgb(x, y);
        let max = r.max(g).max(b) as f64;
        let min = r.min(g).min(b) as f64;
        (max + min) / (2.0 * 255.0)
    }

    pub fn bytes(&self) -> &[u8] {
        &self.data
    }
}

/// Three consecutive patches (t−1, t, t+1) around one proposal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchStack {
    pub patches: [Patch; 3],
}

fn cut_patch(frame: &Frame, center: Point, side: f64) -> Patch {
    let scale = side / PATCH_SIZE as f64;
    let mut data = Vec::with_capacity((PATCH_SIZE * PATCH_SIZE * 3) as usize);
    for py in 0..PATCH_SIZE {
        for px in 0..PATCH_SIZE {
            let sx = center.0 - side / 2.0 + (px as f64 + 0.5) * scale;
            let sy = center.1 - side / 2.0 + (py as f64 + 0.5) * scale;
            let rgb = frame.sample_bilinear(sx, sy);
            data.push(rgb[0].round().clamp(0.0, 255.0) as u8);
            data.push(rgb[1].round().clamp(0.0, 255.0) as u8);
            data.push(rgb[2].round().clamp(0.0, 255.0) as u8);
        }
    }
    Patch { data }
}

/// Cuts the context window from three given frames. The window side is
/// 5 × max(bbox w, h); borders are handled by edge replication before the
/// bilinear resize to 50×50.
pub fn extract_patch_stack(
    prev: &Frame,
    cur: &Frame,
    next: &Frame,
    proposal: &RegionProposal,
) -> PatchStack {
    let side = (WINDOW_SCALE * proposal.bbox.w.max(proposal.bbox.h) as f64).max(1.0);
    PatchStack {
        patches: [
            cut_patch(prev, proposal.centroid, side),
            cut_patch(cur, proposal.centroid, side),
            cut_patch(next, proposal.centroid, side),
        ],
    }
}

/// Like [`extract_patch_stack`], indexing neighbours out of a sequence.
/// Errors at sequence boundaries; the pipeline substitutes a duplicate of the
/// centre frame there.
pub fn extract_patch_stack_at(frames: &[Frame], proposal: &RegionProposal) -> Result<PatchStack> {
    let t = proposal.frame;
    if t == 0 || t + 1 >= frames.len() {
        return Err(Error::Boundary { frame: t });
    }
    Ok(extract_patch_stack(
        &frames[t - 1],
        &frames[t],
        &frames[t + 1],
        proposal,
    ))
}

// ---------------------------------------------------------------------------
// Classification result and detections
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Classification {
    pub label: ClassLabel,
    pub confidence: f64,
    /// Unit-norm feature vector of length [`FEATURE_LEN`].
    pub feature: Vec<f64>,
}

/// A classified proposal.
#[derive(Debug, Clone)]
pub struct Detection {
    pub frame: usize,
    pub centroid: Point,
    pub bbox: crate::geom::Bbox,
    pub label: ClassLabel,
    pub confidence: f64,
    pub feature: Vec<f64>,
}

impl Detection {
    pub fn from_proposal(proposal: &RegionProposal, c: Classification) -> Self {
        Detection {
            frame: proposal.frame,
            centroid: proposal.centroid,
            bbox: proposal.bbox,
            label: c.label,
            confidence: c.confidence,
            feature: c.feature,
        }
    }

    pub fn is_ball(&self) -> bool {
        is_ball(self.label)
    }
}

/// Classifier backend interface. Implementations must be deterministic for a
/// fixed input.
pub trait Classifier: Send + Sync {
    fn classify(&self, stack: &PatchStack) -> Result<Classification>;

    /// Batched classification; backends with request pipelining override it.
    fn classify_batch(&self, stacks: &[PatchStack]) -> Result<Vec<Classification>> {
        stacks.iter().map(|s| self.classify(s)).collect()
    }

    fn name(&self) -> &'static str;
}

fn normalize_feature(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        let uniform = 1.0 / (FEATURE_LEN as f64).sqrt();
        return vec![uniform; FEATURE_LEN];
    }
    for x in &mut v {
        *x /= norm;
    }
    v
}

// ---------------------------------------------------------------------------
// Heuristic backend
// ---------------------------------------------------------------------------

/// Tunables of the rule-based backend.
#[derive(Debug, Clone)]
pub struct HeuristicParams {
    /// Patch-luminance percentile the centre must reach to count as bright.
    pub brightness_percentile: f64,
    /// Minimum mean absolute luminance difference between the centre region
    /// of patch t and patches t±1.
    pub min_variation: f64,
    /// Absolute floor on the centre region's mean luminance.
    pub min_center_lum: f64,
    /// Shape bounds on the bright blob inside the centre area.
    pub min_aspect: f64,
    pub min_area_frac: f64,
    pub max_area_frac: f64,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            brightness_percentile: 85.0,
            min_variation: 12.0 / 255.0,
            min_center_lum: 0.45,
            min_aspect: 0.08,
            min_area_frac: 0.015,
            max_area_frac: 0.9,
        }
    }
}

/// Rule-based stand-in for a learned patch classifier.
///
/// Ball when the centre region is bright relative to the patch, varies
/// across the three patches (the ball moves; court furniture does not) and
/// the bright blob has plausible shape. Otherwise the patch falls through a
/// small set of templates: a static bright line is a sideline, a large
/// skin-toned area is a body part, everything else is "Other objects".
#[derive(Debug, Clone, Default)]
pub struct HeuristicClassifier {
    pub params: HeuristicParams,
}

// centre region: the bbox maps to the central fifth of the 5× window
const CENTER_LO: u32 = 20;
const CENTER_HI: u32 = 30;
// wider centre area used for shape statistics
const SHAPE_LO: u32 = 12;
const SHAPE_HI: u32 = 38;

struct PatchStats {
    center_mean: f64,
    center_max: f64,
    bright_threshold: f64,
    variation: f64,
    static_line: bool,
    shape_aspect: f64,
    shape_area_frac: f64,
    skin_frac: f64,
}

impl HeuristicClassifier {
    pub fn new(params: HeuristicParams) -> Self {
        HeuristicClassifier { params }
    }

    fn stats(&self, stack: &PatchStack) -> PatchStats {
        let cur = &stack.patches[1];
        let prev = &stack.patches[0];
        let next = &stack.patches[2];

        let mut lums: Vec<f64> = Vec::with_capacity((PATCH_SIZE * PATCH_SIZE) as usize);
        for y in 0..PATCH_SIZE {
            for x in 0..PATCH_SIZE {
                lums.push(cur.luminance(x, y));
            }
        }
        let mut sorted = lums.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let idx = ((self.params.brightness_percentile / 100.0) * (sorted.len() - 1) as f64)
            .round() as usize;
        let bright_threshold = sorted[idx.min(sorted.len() - 1)];

        let mut center_sum = 0.0;
        let mut center_max = 0.0f64;
        let mut diff_sum = 0.0;
        let mut n_center = 0.0;
        for y in CENTER_LO..CENTER_HI {
            for x in CENTER_LO..CENTER_HI {
                let l = cur.luminance(x, y);
                center_sum += l;
                center_max = center_max.max(l);
                let dp = (l - prev.luminance(x, y)).abs();
                let dn = (l - next.luminance(x, y)).abs();
                diff_sum += (dp + dn) / 2.0;
                n_center += 1.0;
            }
        }
        let center_mean = center_sum / n_center;
        let variation = diff_sum / n_center;

        // bright pixels that barely change over time: static structure
        let mut static_bright: Vec<(f64, f64)> = Vec::new();
        let mut skin = 0usize;
        for y in 0..PATCH_SIZE {
            for x in 0..PATCH_SIZE {
                let l = cur.luminance(x, y);
                let dp = (l - prev.luminance(x, y)).abs();
                let dn = (l - next.luminance(x, y)).abs();
                if l >= bright_threshold && l >= 0.5 && dp < 0.05 && dn < 0.05 {
                    static_bright.push((x as f64, y as f64));
                }
                let [r, g, b] = cur.rgb(x, y);
                let (h, s, _) = pixel_rgb_to_hsl(r, g, b);
                if (10.0..=45.0).contains(&h) && s > 0.2 {
                    skin += 1;
                }
            }
        }
        let static_line = line_like(&static_bright);
        let skin_frac = skin as f64 / (PATCH_SIZE * PATCH_SIZE) as f64;

        // shape of the bright blob around the centre
        let mut bright_px: Vec<(f64, f64)> = Vec::new();
        for y in SHAPE_LO..SHAPE_HI {
            for x in SHAPE_LO..SHAPE_HI {
                if cur.luminance(x, y) >= bright_threshold.max(0.5) {
                    bright_px.push((x as f64, y as f64));
                }
            }
        }
        let shape_area = (SHAPE_HI - SHAPE_LO).pow(2) as f64;
        let shape_area_frac = bright_px.len() as f64 / shape_area;
        let shape_aspect = if bright_px.is_empty() {
            0.0
        } else {
            let (min_x, max_x) = min_max(bright_px.iter().map(|p| p.0));
            let (min_y, max_y) = min_max(bright_px.iter().map(|p| p.1));
            let w = max_x - min_x + 1.0;
            let h = max_y - min_y + 1.0;
            w.min(h) / w.max(h)
        };

        PatchStats {
            center_mean,
            center_max,
            bright_threshold,
            variation,
            static_line,
            shape_aspect,
            shape_area_frac,
            skin_frac,
        }
    }

    fn feature(&self, stack: &PatchStack) -> Vec<f64> {
        let cur = &stack.patches[1];
        let mut hist = vec![0.0f64; 48];
        for y in CENTER_LO..CENTER_HI {
            for x in CENTER_LO..CENTER_HI {
                let [r, g, b] = cur.rgb(x, y);
                let (h, s, l) = pixel_rgb_to_hsl(r, g, b);
                let hb = ((h / 360.0) * 16.0).min(15.0) as usize;
                let sb = (s * 16.0).min(15.0) as usize;
                let lb = (l * 16.0).min(15.0) as usize;
                hist[hb] += 1.0;
                hist[16 + sb] += 1.0;
                hist[32 + lb] += 1.0;
            }
        }
        // 16-ring radial intensity profile over the whole patch
        let mut rings = vec![0.0f64; 16];
        let mut counts = vec![0.0f64; 16];
        let c = (PATCH_SIZE as f64 - 1.0) / 2.0;
        let max_r = (c * c * 2.0).sqrt();
        for y in 0..PATCH_SIZE {
            for x in 0..PATCH_SIZE {
                let r = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
                let bin = ((r / max_r) * 16.0).min(15.0) as usize;
                rings[bin] += cur.luminance(x, y);
                counts[bin] += 1.0;
            }
        }
        for (ring, n) in rings.iter_mut().zip(&counts) {
            if *n > 0.0 {
                *ring /= *n;
            }
        }
        let mut feature = hist;
        feature.extend(rings);
        normalize_feature(feature)
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// True when the points form a long, thin, strongly elongated structure,
/// measured by the principal axes of their scatter.
fn line_like(points: &[(f64, f64)]) -> bool {
    if points.len() < 20 {
        return false;
    }
    let n = points.len() as f64;
    let (mx, my) = points
        .iter()
        .fold((0.0, 0.0), |(ax, ay), p| (ax + p.0, ay + p.1));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let dx = p.0 - mx;
        let dy = p.1 - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    sxx /= n;
    syy /= n;
    sxy /= n;
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let l1 = tr / 2.0 + disc;
    let l2 = (tr / 2.0 - disc).max(1e-9);
    // at least 8× longer than wide, spanning most of the patch
    // (√12·σ estimates the full span of a uniform segment)
    l1 / l2 >= 64.0 && l1.sqrt() * 12f64.sqrt() >= 0.7 * PATCH_SIZE as f64
}

impl Classifier for HeuristicClassifier {
    fn classify(&self, stack: &PatchStack) -> Result<Classification> {
        let p = &self.params;
        let s = self.stats(stack);
        let feature = self.feature(stack);

        let bright = s.center_max >= s.bright_threshold - 1e-9 && s.center_mean >= p.min_center_lum;
        let moving = s.variation >= p.min_variation;
        let shaped = s.shape_aspect >= p.min_aspect
            && s.shape_area_frac >= p.min_area_frac
            && s.shape_area_frac <= p.max_area_frac;

        let (label, confidence) = if bright && moving && shaped {
            let label = if s.static_line {
                BALL_SIDELINE
            } else if s.bright_threshold > 0.55 {
                // bright clutter around the target: complex background
                BALL_COMPLEX
            } else {
                BALL_SIMPLE
            };
            let margin = ((s.variation / p.min_variation - 1.0) * 0.25).clamp(0.0, 0.35);
            (label, (0.55 + margin + 0.1 * s.center_mean).min(0.99))
        } else if s.static_line && !moving {
            (SIDELINE, 0.9)
        } else if s.skin_frac > 0.4 {
            (TRUNK, 0.7)
        } else {
            (OTHER, 0.6)
        };

        Ok(Classification { label, confidence, feature })
    }

    fn name(&self) -> &'static str {
        "heuristic"
    }
}

// ---------------------------------------------------------------------------
// External backend (line-delimited JSON over stdio)
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct WireRequest<'a> {
    id: u64,
    patches: [&'a str; 3],
}

#[derive(Deserialize)]
struct WireResponse {
    id: u64,
    label: u8,
    confidence: f64,
    feature: Vec<f64>,
}

/// Maximum number of requests in flight per external process.
pub const EXTERNAL_WINDOW: usize = 8;

struct ExternalIo {
    child: Child,
    stdin: std::process::ChildStdin,
    stdout: BufReader<std::process::ChildStdout>,
    next_id: u64,
}

/// Classifier backed by an external process. Each request is one JSON line
/// `{"id":n,"patches":[b64,b64,b64]}` (base64 of raw 50×50 RGB bytes); each
/// response one JSON line `{"id":n,"label":k,"confidence":c,"feature":[..]}`.
/// Responses are matched by id, order-independent, with at most
/// [`EXTERNAL_WINDOW`] requests outstanding.
pub struct ExternalClassifier {
    io: Mutex<ExternalIo>,
    command: String,
}

impl ExternalClassifier {
    /// Spawns `command` (whitespace-split; no shell quoting).
    pub fn spawn(command: &str) -> Result<Self> {
        let mut words = command.split_whitespace();
        let program = words
            .next()
            .ok_or_else(|| Error::Backend("empty classifier command".into()))?;
        let mut child = Command::new(program)
            .args(words)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Backend(format!("failed to spawn `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("stdin piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout piped"));
        Ok(ExternalClassifier {
            io: Mutex::new(ExternalIo { child, stdin, stdout, next_id: 0 }),
            command: command.to_string(),
        })
    }

    fn send(io: &mut ExternalIo, stack: &PatchStack) -> Result<u64> {
        let id = io.next_id;
        io.next_id += 1;
        let engine = base64::engine::general_purpose::STANDARD;
        let encoded: Vec<String> = stack
            .patches
            .iter()
            .map(|p| engine.encode(p.bytes()))
            .collect();
        let req = WireRequest {
            id,
            patches: [&encoded[0], &encoded[1], &encoded[2]],
        };
        let mut line = serde_json::to_string(&req)
            .map_err(|e| Error::Backend(format!("request encode: {e}")))?;
        line.push('\n');
        io.stdin
            .write_all(line.as_bytes())
            .map_err(|e| Error::Backend(format!("write to classifier: {e}")))?;
        io.stdin
            .flush()
            .map_err(|e| Error::Backend(format!("flush to classifier: {e}")))?;
        Ok(id)
    }

    fn receive(io: &mut ExternalIo) -> Result<(u64, Classification)> {
        let mut line = String::new();
        let n = io
            .stdout
            .read_line(&mut line)
            .map_err(|e| Error::Backend(format!("read from classifier: {e}")))?;
        if n == 0 {
            return Err(Error::Backend("classifier closed its output".into()));
        }
        let resp: WireResponse = serde_json::from_str(line.trim())
            .map_err(|e| Error::Backend(format!("bad response line: {e}")))?;
        if resp.feature.len() != FEATURE_LEN {
            return Err(Error::Backend(format!(
                "feature length {} != {FEATURE_LEN}",
                resp.feature.len()
            )));
        }
        let label = ClassLabel::new(resp.label)?;
        Ok((
            resp.id,
            Classification {
                label,
                confidence: resp.confidence.clamp(0.0, 1.0),
                feature: normalize_feature(resp.feature),
            },
        ))
    }
}

impl Classifier for ExternalClassifier {
    fn classify(&self, stack: &PatchStack) -> Result<Classification> {
        let mut results = self.classify_batch(std::slice::from_ref(stack))?;
        Ok(results.pop().expect("one result per request"))
    }

    fn classify_batch(&self, stacks: &[PatchStack]) -> Result<Vec<Classification>> {
        let mut io = self.io.lock().expect("classifier mutex poisoned");
        let mut by_id: HashMap<u64, usize> = HashMap::new();
        let mut out: Vec<Option<Classification>> = vec![None; stacks.len()];
        let mut sent = 0usize;
        let mut received = 0usize;
        while received < stacks.len() {
            while sent < stacks.len() && sent - received < EXTERNAL_WINDOW {
                let id = Self::send(&mut io, &stacks[sent])?;
                by_id.insert(id, sent);
                sent += 1;
            }
            let (id, classification) = Self::receive(&mut io)?;
            let slot = by_id
                .remove(&id)
                .ok_or_else(|| Error::Backend(format!("response for unknown id {id}")))?;
            out[slot] = Some(classification);
            received += 1;
        }
        Ok(out.into_iter().map(|c| c.expect("all slots filled")).collect())
    }

    fn name(&self) -> &'static str {
        "external"
    }
}

impl Drop for ExternalClassifier {
    fn drop(&mut self) {
        if let Ok(mut io) = self.io.lock() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}

impl std::fmt::Debug for ExternalClassifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalClassifier")
            .field("command", &self.command)
            .finish()
    }
}

// ---------------------------------------------------------------------------
// Fallback wrapper
// ---------------------------------------------------------------------------

/// Runs a primary backend and permanently falls back to the heuristic one
/// after the first failure, with a logged warning.
pub struct FallbackClassifier {
    primary: Mutex<Option<Box<dyn Classifier>>>,
    fallback: HeuristicClassifier,
}

impl FallbackClassifier {
    pub fn new(primary: Box<dyn Classifier>, fallback: HeuristicClassifier) -> Self {
        FallbackClassifier {
            primary: Mutex::new(Some(primary)),
            fallback,
        }
    }

    fn run<T>(
        &self,
        primary_op: impl Fn(&dyn Classifier) -> Result<T>,
        fallback_op: impl Fn(&HeuristicClassifier) -> Result<T>,
    ) -> Result<T> {
        let mut guard = self.primary.lock().expect("fallback mutex poisoned");
        if let Some(primary) = guard.as_deref() {
            match primary_op(primary) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    log::warn!("classifier backend failed ({e}); falling back to heuristic");
                    *guard = None;
                }
            }
        }
        fallback_op(&self.fallback)
    }
}

impl Classifier for FallbackClassifier {
    fn classify(&self, stack: &PatchStack) -> Result<Classification> {
        self.run(|p| p.classify(stack), |f| f.classify(stack))
    }

    fn classify_batch(&self, stacks: &[PatchStack]) -> Result<Vec<Classification>> {
        self.run(|p| p.classify_batch(stacks), |f| f.classify_batch(stacks))
    }

    fn name(&self) -> &'static str {
        "fallback"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Bbox;
    use crate::proposals::ProposalSource;
    use approx::assert_abs_diff_eq;

    fn proposal_at(frame: usize, cx: f64, cy: f64, w: u32, h: u32) -> RegionProposal {
        RegionProposal {
            frame,
            bbox: Bbox {
                x: (cx as u32).saturating_sub(w / 2),
                y: (cy as u32).saturating_sub(h / 2),
                w,
                h,
            },
            centroid: (cx, cy),
            perimeter: 2.0 * (w + h) as f64,
            seed: None,
            source: ProposalSource::Coarse,
        }
    }

    const GREEN: [u8; 3] = [60, 120, 70];
    const WHITE: [u8; 3] = [245, 245, 240];

    fn court_frame(index: usize) -> Frame {
        Frame::filled(index, 200, 160, GREEN)
    }

    fn draw_disc(f: &mut Frame, cx: f64, cy: f64, r: f64, rgb: [u8; 3]) {
        for y in 0..f.height {
            for x in 0..f.width {
                if ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() <= r {
                    f.set_rgb(x, y, rgb);
                }
            }
        }
    }

    fn draw_hline(f: &mut Frame, y0: u32, thickness: u32, rgb: [u8; 3]) {
        for y in y0..y0 + thickness {
            for x in 0..f.width {
                f.set_rgb(x, y, rgb);
            }
        }
    }

    #[test]
    fn patch_stack_identity_when_window_is_fifty() {
        // 10×10 bbox → 50 px window; centroid picked so samples land on
        // integer pixels and the resize is the identity
        let frame = Frame::from_test_pattern(1, 120, 100);
        let prop = proposal_at(1, 44.5, 44.5, 10, 10);
        // centroid (44.5, 44.5): first window sample lands on (20, 20)
        let stack = extract_patch_stack(&frame, &frame, &frame, &prop);
        for py in 0..PATCH_SIZE {
            for px in 0..PATCH_SIZE {
                assert_eq!(
                    stack.patches[1].rgb(px, py),
                    frame.rgb(20 + px, 20 + py),
                    "mismatch at ({px},{py})"
                );
            }
        }
    }

    #[test]
    fn patch_stack_clamps_at_corner() {
        let frame = court_frame(1);
        let prop = proposal_at(1, 1.0, 1.0, 10, 10);
        let stack = extract_patch_stack(&frame, &frame, &frame, &prop);
        assert_eq!(stack.patches[0].rgb(0, 0), GREEN);
        assert_eq!(stack.patches[2].rgb(49, 49), GREEN);
    }

    #[test]
    fn patch_center_matches_frame_pixel() {
        let mut frame = court_frame(1);
        draw_disc(&mut frame, 100.0, 80.0, 4.0, WHITE);
        let prop = proposal_at(1, 100.0, 80.0, 8, 8);
        let stack = extract_patch_stack(&frame, &frame, &frame, &prop);
        let center = stack.patches[1].rgb(25, 25);
        for c in 0..3 {
            assert!((center[c] as i16 - WHITE[c] as i16).abs() <= 2);
        }
    }

    #[test]
    fn boundary_frame_is_an_error() {
        let frames = vec![court_frame(0), court_frame(1), court_frame(2)];
        let prop = proposal_at(0, 50.0, 50.0, 8, 8);
        assert!(matches!(
            extract_patch_stack_at(&frames, &prop),
            Err(Error::Boundary { frame: 0 })
        ));
        let prop = proposal_at(1, 50.0, 50.0, 8, 8);
        assert!(extract_patch_stack_at(&frames, &prop).is_ok());
    }

    #[test]
    fn is_ball_covers_the_three_ball_classes() {
        assert!(is_ball(ClassLabel { id: 0 }));
        assert!(is_ball(ClassLabel { id: 1 }));
        assert!(is_ball(ClassLabel { id: 2 }));
        assert!(!is_ball(ClassLabel { id: 3 }));
        assert!(!is_ball(ClassLabel { id: 17 }));
    }

    /// White streak moving over court green: the canonical ball patch.
    fn moving_ball_stack() -> PatchStack {
        let mut prev = court_frame(0);
        let mut cur = court_frame(1);
        let mut next = court_frame(2);
        draw_disc(&mut prev, 94.0, 80.0, 3.0, WHITE);
        draw_disc(&mut cur, 100.0, 80.0, 3.0, WHITE);
        draw_disc(&mut next, 106.0, 80.0, 3.0, WHITE);
        let prop = proposal_at(1, 100.0, 80.0, 8, 8);
        extract_patch_stack(&prev, &cur, &next, &prop)
    }

    #[test]
    fn heuristic_accepts_moving_ball() {
        let c = HeuristicClassifier::default()
            .classify(&moving_ball_stack())
            .unwrap();
        assert_eq!(c.label, BALL_SIMPLE, "got {:?} ({})", c.label, c.label.name());
        assert!(c.confidence > 0.5);
    }

    #[test]
    fn heuristic_rejects_all_black() {
        let black = Frame::filled(1, 200, 160, [0, 0, 0]);
        let prop = proposal_at(1, 100.0, 80.0, 8, 8);
        let stack = extract_patch_stack(&black, &black, &black, &prop);
        let c = HeuristicClassifier::default().classify(&stack).unwrap();
        assert_eq!(c.label, OTHER);
    }

    #[test]
    fn heuristic_labels_static_sideline() {
        let mut f = court_frame(1);
        draw_hline(&mut f, 79, 3, [200, 200, 200]);
        let prop = proposal_at(1, 100.0, 80.0, 8, 8);
        let stack = extract_patch_stack(&f, &f, &f, &prop);
        let c = HeuristicClassifier::default().classify(&stack).unwrap();
        assert_eq!(c.label, SIDELINE, "got {:?} ({})", c.label, c.label.name());
    }

    #[test]
    fn heuristic_labels_ball_on_sideline() {
        let mut prev = court_frame(0);
        let mut cur = court_frame(1);
        let mut next = court_frame(2);
        for f in [&mut prev, &mut cur, &mut next] {
            draw_hline(f, 79, 3, [200, 200, 200]);
        }
        draw_disc(&mut prev, 94.0, 80.0, 3.0, WHITE);
        draw_disc(&mut cur, 100.0, 80.0, 3.0, WHITE);
        draw_disc(&mut next, 106.0, 80.0, 3.0, WHITE);
        let prop = proposal_at(1, 100.0, 80.0, 8, 8);
        let stack = extract_patch_stack(&prev, &cur, &next, &prop);
        let c = HeuristicClassifier::default().classify(&stack).unwrap();
        assert_eq!(c.label, BALL_SIDELINE, "got {:?} ({})", c.label, c.label.name());
        assert!(is_ball(c.label));
    }

    #[test]
    fn features_are_unit_norm_and_deterministic() {
        let stack = moving_ball_stack();
        let classifier = HeuristicClassifier::default();
        let a = classifier.classify(&stack).unwrap();
        let b = classifier.classify(&stack).unwrap();
        assert_eq!(a.feature, b.feature);
        assert_eq!(a.label, b.label);
        assert_eq!(a.feature.len(), FEATURE_LEN);
        let norm: f64 = a.feature.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(crate::geom::dot(&a.feature, &b.feature), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn zero_patch_feature_still_unit_norm() {
        let v = normalize_feature(vec![0.0; FEATURE_LEN]);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn spawn_failure_is_reported() {
        assert!(ExternalClassifier::spawn("definitely-not-a-real-binary-xyz").is_err());
    }

    struct FailingBackend;
    impl Classifier for FailingBackend {
        fn classify(&self, _: &PatchStack) -> Result<Classification> {
            Err(Error::Backend("boom".into()))
        }
        fn name(&self) -> &'static str {
            "failing"
        }
    }

    #[test]
    fn fallback_uses_heuristic_after_primary_error() {
        let fb = FallbackClassifier::new(Box::new(FailingBackend), HeuristicClassifier::default());
        let c = fb.classify(&moving_ball_stack()).unwrap();
        assert_eq!(c.label, BALL_SIMPLE);
        // second call goes straight to the fallback
        let c2 = fb.classify(&moving_ball_stack()).unwrap();
        assert_eq!(c2.label, c.label);
    }
}
