//! Rule-based tracklet tracking over per-frame detections.
//!
//! Two matching strategies cover the two flight regimes:
//!
//! * normal speed — the score is the cosine between the track's direction
//!   and the track→detection vector, gated to 0 unless the Manhattan
//!   distance is below `d` (the flight path is treated as a collection of
//!   short straight segments);
//! * fastball — smashes cover long distances in very few frames, so
//!   positional gating is useless; the score is the cosine similarity of the
//!   feature vectors, gated to 0 unless the Manhattan distance is *above*
//!   `d`.
//!
//! Any two targets within three consecutive frames can form a tentative
//! tracker; far-and-similar pairs in adjacent frames additionally form a
//! fastball tracker. A track becomes valid after more than `T_Valid`
//! responses (a reduced threshold for fastballs) and terminates after
//! `T_Lost` consecutive misses.

use std::collections::VecDeque;

use crate::classify::Detection;
use crate::geom::{self, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackKind {
    Normal,
    Fast,
}

impl TrackKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackKind::Normal => "normal",
            TrackKind::Fast => "fast",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Tentative,
    Valid,
    Lost,
    Terminated,
}

impl TrackState {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackState::Tentative => "tentative",
            TrackState::Valid => "valid",
            TrackState::Lost => "lost",
            TrackState::Terminated => "terminated",
        }
    }
}

/// Where a track point came from. Round-one detections are appended by the
/// tracker itself; the re-detector inserts interior points and grows ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSource {
    Detection,
    IntraRedetect,
    InterRedetect,
}

impl PointSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointSource::Detection => "detection",
            PointSource::IntraRedetect => "intra",
            PointSource::InterRedetect => "inter",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrackPoint {
    pub frame: usize,
    pub pos: Point,
    pub source: PointSource,
}

/// One tracklet: an ordered run of positions with direction state, response
/// and miss counters, and a lifecycle state.
#[derive(Debug, Clone)]
pub struct Track {
    pub id: usize,
    pub kind: TrackKind,
    /// Strictly increasing in frame index.
    pub points: Vec<TrackPoint>,
    /// Unit direction from a least-squares fit of the most recent points;
    /// `None` while the fitted velocity is (near) zero.
    pub direction: Option<Point>,
    /// Count of matched frames; the spawning pair counts as 2.
    pub responses: u32,
    /// Consecutive unmatched frames.
    pub misses: u32,
    pub state: TrackState,
    /// Set once the track passes its validation threshold; survives
    /// termination so validated tracklets stay eligible for association.
    pub validated: bool,
    pub last_feature: Option<Vec<f64>>,
}

pub const TRACK_CSV_HEADER: &str = "track_id,kind,frame,cx,cy,state,responses";

impl Track {
    fn from_pair(id: usize, kind: TrackKind, a: &Detection, b: &Detection, k_fit: usize) -> Self {
        debug_assert!(a.frame < b.frame);
        let points = vec![
            TrackPoint { frame: a.frame, pos: a.centroid, source: PointSource::Detection },
            TrackPoint { frame: b.frame, pos: b.centroid, source: PointSource::Detection },
        ];
        let direction = fit_direction(&points, k_fit);
        Track {
            id,
            kind,
            points,
            direction,
            responses: 2,
            misses: 0,
            state: TrackState::Tentative,
            validated: false,
            last_feature: Some(b.feature.clone()),
        }
    }

    pub fn start_frame(&self) -> usize {
        self.points.first().expect("tracks hold at least two points").frame
    }

    pub fn end_frame(&self) -> usize {
        self.points.last().expect("tracks hold at least two points").frame
    }

    pub fn last_pos(&self) -> Point {
        self.points.last().expect("tracks hold at least two points").pos
    }

    pub fn point_at(&self, frame: usize) -> Option<&TrackPoint> {
        self.points
            .binary_search_by_key(&frame, |p| p.frame)
            .ok()
            .map(|i| &self.points[i])
    }

    /// Inserts a point, keeping frames strictly increasing. Existing points
    /// are never replaced.
    pub fn insert_point(&mut self, point: TrackPoint) {
        match self.points.binary_search_by_key(&point.frame, |p| p.frame) {
            Ok(_) => {} // already have a point at that frame
            Err(i) => self.points.insert(i, point),
        }
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| {
                format!(
                    "{},{},{},{:.3},{:.3},{},{}",
                    self.id,
                    self.kind.as_str(),
                    p.frame,
                    p.pos.0,
                    p.pos.1,
                    self.state.as_str(),
                    self.responses
                )
            })
            .collect()
    }
}

/// Least-squares velocity direction over the `k` most recent points,
/// normalized to unit length. `None` when the fit is degenerate (all points
/// coincident), which happens for stationary flicker noise.
pub fn fit_direction(points: &[TrackPoint], k: usize) -> Option<Point> {
    let tail = &points[points.len().saturating_sub(k.max(2))..];
    fit_velocity(tail).and_then(|v| {
        let n = geom::norm(v);
        if n < 1e-9 {
            None
        } else {
            Some((v.0 / n, v.1 / n))
        }
    })
}

/// Least-squares velocity (px/frame) over a run of points.
pub fn fit_velocity(points: &[TrackPoint]) -> Option<Point> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_f = points.iter().map(|p| p.frame as f64).sum::<f64>() / n;
    let mean_x = points.iter().map(|p| p.pos.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.pos.1).sum::<f64>() / n;
    let mut sff = 0.0;
    let mut sfx = 0.0;
    let mut sfy = 0.0;
    for p in points {
        let df = p.frame as f64 - mean_f;
        sff += df * df;
        sfx += df * (p.pos.0 - mean_x);
        sfy += df * (p.pos.1 - mean_y);
    }
    if sff < 1e-12 {
        return None;
    }
    Some((sfx / sff, sfy / sff))
}

/// Normal-speed score: cosine between the track direction and the vector
/// from the track endpoint to the detection, when the Manhattan distance is
/// below the gate; 0 otherwise. A detection sitting exactly on the endpoint
/// scores 1.0; a directionless (stationary) track scores any in-gate
/// detection 1.0 on pure proximity.
pub fn cost_normal(track: &Track, det: &Detection, d: f64) -> f64 {
    let endpoint = track.last_pos();
    if geom::manhattan(det.centroid, endpoint) >= d {
        return 0.0;
    }
    let to_det = (det.centroid.0 - endpoint.0, det.centroid.1 - endpoint.1);
    if geom::norm(to_det) < 1e-9 {
        return 1.0;
    }
    match track.direction {
        Some(dir) => geom::cosine(dir, to_det),
        None => 1.0,
    }
}

/// Fastball score: cosine similarity of the feature vectors when the
/// Manhattan distance is *above* the gate (the reverse of the normal gate);
/// 0 otherwise or when either feature is missing.
pub fn cost_fast(track: &Track, det: &Detection, d: f64) -> f64 {
    if geom::manhattan(det.centroid, track.last_pos()) <= d {
        return 0.0;
    }
    match &track.last_feature {
        Some(f) => geom::dot(f, &det.feature),
        None => 0.0,
    }
}

#[derive(Debug, Clone)]
pub struct TrackerParams {
    /// Manhattan gate in pixels.
    pub d: f64,
    /// Responses needed to validate a normal track (strictly more than).
    pub t_valid: u32,
    /// Reduced validation threshold for fastball tracks.
    pub t_valid_fast: u32,
    /// Consecutive misses that terminate a track.
    pub t_lost: u32,
    /// Minimum directional score to accept a normal match.
    pub cos_min: f64,
    /// Minimum feature similarity to accept a fastball match (and to spawn
    /// fastball trackers).
    pub sim_min: f64,
    /// Points used for the direction fit.
    pub k_fit: usize,
    /// Disables the fastball tracker entirely when false.
    pub fast_enabled: bool,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            d: 40.0,
            t_valid: 5,
            t_valid_fast: 3,
            t_lost: 4,
            cos_min: 0.8,
            sim_min: 0.9,
            k_fit: 5,
            fast_enabled: true,
        }
    }
}

impl TrackerParams {
    fn validation_threshold(&self, kind: TrackKind) -> u32 {
        match kind {
            TrackKind::Normal => self.t_valid,
            TrackKind::Fast => self.t_valid_fast,
        }
    }
}

/// Enumerates the trackers spawned by up to three consecutive frames of
/// detections: every pair with frame gap 1 or 2 forms a normal tracker, and
/// every far-but-similar pair in adjacent frames forms a fastball tracker.
/// Ids are assigned from `first_id` in enumeration order.
pub fn spawn(
    frames: &[(usize, Vec<Detection>)],
    params: &TrackerParams,
    first_id: usize,
) -> Vec<Track> {
    let mut out = Vec::new();
    let mut next_id = first_id;
    for (i, (fa, dets_a)) in frames.iter().enumerate() {
        for (fb, dets_b) in frames.iter().skip(i + 1) {
            let gap = fb.wrapping_sub(*fa);
            if !(1..=2).contains(&gap) {
                continue;
            }
            for a in dets_a {
                for b in dets_b {
                    out.push(Track::from_pair(next_id, TrackKind::Normal, a, b, params.k_fit));
                    next_id += 1;
                    let far = geom::manhattan(a.centroid, b.centroid) > params.d;
                    let similar = geom::dot(&a.feature, &b.feature) >= params.sim_min;
                    if params.fast_enabled && gap == 1 && far && similar {
                        out.push(Track::from_pair(next_id, TrackKind::Fast, a, b, params.k_fit));
                        next_id += 1;
                    }
                }
            }
        }
    }
    out
}

/// Streaming tracker state machine. Feed detections frame by frame with
/// [`Tracker::step`], then collect tracklets with [`Tracker::finish`].
#[derive(Debug)]
pub struct Tracker {
    pub params: TrackerParams,
    next_id: usize,
    active: Vec<Track>,
    finished: Vec<Track>,
    /// Unmatched detections from the last two frames, newest last.
    spawn_buffer: VecDeque<(usize, Vec<Detection>)>,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Tracker {
            params,
            next_id: 0,
            active: Vec::new(),
            finished: Vec::new(),
            spawn_buffer: VecDeque::new(),
        }
    }

    pub fn active_tracks(&self) -> &[Track] {
        &self.active
    }

    /// Processes the detections of one frame: scores the assignment matrix,
    /// matches greedily one-to-one in descending score order, updates
    /// lifecycles, and feeds unmatched detections to the spawn buffer.
    pub fn step(&mut self, frame: usize, detections: &[Detection]) {
        debug_assert!(detections.iter().all(|d| d.frame == frame));

        // score matrix, kept sparse: only entries above the acceptance
        // threshold can ever match
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
        for (ti, track) in self.active.iter().enumerate() {
            for (di, det) in detections.iter().enumerate() {
                let score = match track.kind {
                    TrackKind::Normal => cost_normal(track, det, self.params.d),
                    TrackKind::Fast => cost_fast(track, det, self.params.d),
                };
                let threshold = match track.kind {
                    TrackKind::Normal => self.params.cos_min,
                    TrackKind::Fast => self.params.sim_min,
                };
                if score >= threshold {
                    pairs.push((ti, di, score));
                }
            }
        }
        // greedy one-to-one: descending score, ties by lower track id then
        // lower detection index
        pairs.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.active[a.0].id.cmp(&self.active[b.0].id))
                .then(a.1.cmp(&b.1))
        });
        let mut track_taken = vec![false; self.active.len()];
        let mut det_taken = vec![false; detections.len()];
        for (ti, di, _) in pairs {
            if track_taken[ti] || det_taken[di] {
                continue;
            }
            track_taken[ti] = true;
            det_taken[di] = true;
            let track = &mut self.active[ti];
            let det = &detections[di];
            track.points.push(TrackPoint {
                frame,
                pos: det.centroid,
                source: PointSource::Detection,
            });
            track.responses += 1;
            track.misses = 0;
            track.direction = fit_direction(&track.points, self.params.k_fit);
            track.last_feature = Some(det.feature.clone());
            if !track.validated && track.responses > self.params.validation_threshold(track.kind) {
                track.validated = true;
            }
            if track.validated {
                track.state = TrackState::Valid;
            }
        }

        // unmatched tracks miss; T_Lost consecutive misses terminate
        let t_lost = self.params.t_lost;
        let mut still_active = Vec::with_capacity(self.active.len());
        for (ti, mut track) in std::mem::take(&mut self.active).into_iter().enumerate() {
            if !track_taken[ti] {
                track.misses += 1;
                if track.misses >= t_lost {
                    track.state = TrackState::Terminated;
                    self.finished.push(track);
                    continue;
                } else if track.validated {
                    track.state = TrackState::Lost;
                }
            }
            still_active.push(track);
        }
        self.active = still_active;

        // unmatched detections pair with the buffered unmatched detections
        // of the previous two frames
        let unmatched: Vec<Detection> = detections
            .iter()
            .enumerate()
            .filter(|(di, _)| !det_taken[*di])
            .map(|(_, d)| d.clone())
            .collect();
        for (past_frame, past_dets) in &self.spawn_buffer {
            let gap = frame - past_frame;
            if !(1..=2).contains(&gap) {
                continue;
            }
            for a in past_dets {
                for b in &unmatched {
                    let mut spawned =
                        Track::from_pair(self.next_id, TrackKind::Normal, a, b, self.params.k_fit);
                    self.next_id += 1;
                    spawned.state = TrackState::Tentative;
                    self.active.push(spawned);
                    let far = geom::manhattan(a.centroid, b.centroid) > self.params.d;
                    let similar = geom::dot(&a.feature, &b.feature) >= self.params.sim_min;
                    if self.params.fast_enabled && gap == 1 && far && similar {
                        let fast =
                            Track::from_pair(self.next_id, TrackKind::Fast, a, b, self.params.k_fit);
                        self.next_id += 1;
                        self.active.push(fast);
                    }
                }
            }
        }
        self.spawn_buffer.push_back((frame, unmatched));
        while self
            .spawn_buffer
            .front()
            .is_some_and(|(f, _)| frame - f >= 2)
        {
            self.spawn_buffer.pop_front();
        }
    }

    /// Terminates remaining active tracks and returns every track ever
    /// created, sorted by id.
    pub fn finish(mut self) -> Vec<Track> {
        for mut track in self.active.drain(..) {
            track.state = TrackState::Terminated;
            self.finished.push(track);
        }
        let mut all = self.finished;
        all.sort_by_key(|t| t.id);
        all
    }
}

/// Tracks that passed lifecycle validation, regardless of how they ended.
pub fn validated_tracks(tracks: Vec<Track>) -> Vec<Track> {
    tracks.into_iter().filter(|t| t.validated).collect()
}
