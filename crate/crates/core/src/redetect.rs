//! Second-round, fine-grained re-detection.
//!
//! Tracklets from round one miss frames for two reasons: the ball coincides
//! with a similarly colored background (frame differencing sees nothing), or
//! players and direction changes break the straight-line matching. This pass
//! predicts where the ball should be and reruns the fine-grained region
//! proposals inside that region of interest only — without the motion-mask
//! restriction and without the non-human filter, both of which only apply to
//! round one.
//!
//! * intra: missing frames inside a tracklet are interpolated between the
//!   surrounding points and re-detected in a fixed-radius disc;
//! * inter: a tracklet grows from its own end toward the start of the
//!   chronologically closest tracklet by constant-velocity extrapolation,
//!   one frame at a time, re-anchoring after each accepted point; the ROI
//!   radius grows with the prediction distance, and growth is abandoned when
//!   the gap exceeds `g_max`.
//!
//! Re-detection never modifies existing track points; it only inserts or
//! appends/prepends.

use crate::classify::{extract_patch_stack, Classifier, Detection};
use crate::geom::{self, Point};
use crate::media::Frame;
use crate::motion::Mask;
use crate::proposals::{fine_proposals, ProposalParams, RegionProposal};
use crate::track::{fit_velocity, PointSource, Track, TrackPoint};

#[derive(Debug, Clone)]
pub struct RedetectParams {
    /// ROI radius for intra-track gap filling.
    pub r_intra: f64,
    /// Base ROI radius for inter-track growth.
    pub r0: f64,
    /// ROI radius growth per frame of prediction distance.
    pub r_growth: f64,
    /// Maximum frame gap an inter-track growth will attempt.
    pub g_max: usize,
    /// Points used for the constant-velocity fit.
    pub k_fit: usize,
    /// Agreement tolerance for the point grown onto the neighbour's own
    /// boundary frame; growth claims that frame only when it confirms the
    /// neighbour's observation.
    pub confirm_epsilon: f64,
}

impl Default for RedetectParams {
    fn default() -> Self {
        RedetectParams {
            r_intra: 25.0,
            r0: 20.0,
            r_growth: 8.0,
            g_max: 12,
            k_fit: 5,
            confirm_epsilon: 5.0,
        }
    }
}

/// Predicted region of interest for one frame.
#[derive(Debug, Clone, Copy)]
pub struct RoiPrediction {
    pub frame: usize,
    pub center: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowDirection {
    Past,
    Future,
}

/// Constant-velocity least-squares extrapolation of a track to
/// `target_frame`, fitted over the `k_fit` points nearest the relevant end.
/// The ROI radius is `r0 + r_growth × |Δframes|` beyond the track span.
pub fn predict(track: &Track, target_frame: usize, params: &RedetectParams) -> RoiPrediction {
    let points = &track.points;
    let (window, anchor_frame): (&[TrackPoint], usize) = if target_frame >= track.end_frame() {
        let k = params.k_fit.max(2).min(points.len());
        (&points[points.len() - k..], track.end_frame())
    } else if target_frame <= track.start_frame() {
        let k = params.k_fit.max(2).min(points.len());
        (&points[..k], track.start_frame())
    } else {
        // interior prediction: fit over everything, anchor at nearest point
        (&points[..], target_frame)
    };

    let velocity = fit_velocity(window).unwrap_or((0.0, 0.0));
    // evaluate the fitted line at the target frame
    let n = window.len() as f64;
    let mean_f = window.iter().map(|p| p.frame as f64).sum::<f64>() / n;
    let mean_x = window.iter().map(|p| p.pos.0).sum::<f64>() / n;
    let mean_y = window.iter().map(|p| p.pos.1).sum::<f64>() / n;
    let df = target_frame as f64 - mean_f;
    let center = (mean_x + velocity.0 * df, mean_y + velocity.1 * df);

    let distance = target_frame.abs_diff(anchor_frame) as f64;
    RoiPrediction {
        frame: target_frame,
        center,
        radius: params.r0 + params.r_growth * distance,
    }
}

/// Re-detection context: the frame sequence, the proposal parameters used
/// inside ROIs, and the classifier.
pub struct Redetector<'a> {
    pub frames: &'a [Frame],
    pub proposal_params: &'a ProposalParams,
    pub classifier: &'a dyn Classifier,
    pub params: RedetectParams,
}

impl<'a> Redetector<'a> {
    /// All accepted ball detections inside a disc: the fine proposal pass
    /// runs on a crop around the disc, candidates are classified, and only
    /// ball-class detections with centroids inside the disc survive.
    /// The seed mask is the whole disc: no motion restriction applies here.
    pub fn candidates_in_roi(&self, frame_idx: usize, center: Point, radius: f64) -> Vec<Detection> {
        let Some(frame) = self.frames.get(frame_idx) else {
            return Vec::new();
        };
        // the crop must not clip a region the perimeter bound would accept,
        // or its centroid shifts toward the predicted center
        let margin = (self.proposal_params.c_max / 3.0).max(10.0);
        let half = radius + margin;
        let x0 = ((center.0 - half).floor().max(0.0)) as u32;
        let y0 = ((center.1 - half).floor().max(0.0)) as u32;
        let x1 = ((center.0 + half).ceil() as u32).min(frame.width - 1);
        let y1 = ((center.1 + half).ceil() as u32).min(frame.height - 1);
        if x1 <= x0 || y1 <= y0 {
            return Vec::new();
        }
        let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);
        if cw < crate::media::MIN_DIM || ch < crate::media::MIN_DIM {
            return Vec::new();
        }

        let mut crop = Frame::filled(frame_idx, cw, ch, [0, 0, 0]);
        for y in 0..ch {
            for x in 0..cw {
                crop.set_rgb(x, y, frame.rgb(x0 + x, y0 + y));
            }
        }
        let mut disc = Mask::zeros(cw, ch);
        for y in 0..ch {
            for x in 0..cw {
                let dx = (x0 + x) as f64 - center.0;
                let dy = (y0 + y) as f64 - center.1;
                if (dx * dx + dy * dy).sqrt() <= radius {
                    disc.set(x, y, true);
                }
            }
        }

        let mut candidates: Vec<Detection> = Vec::new();
        for prop in fine_proposals(&crop, &disc, self.proposal_params) {
            // back to frame coordinates
            let centroid = (prop.centroid.0 + x0 as f64, prop.centroid.1 + y0 as f64);
            if geom::euclidean(centroid, center) > radius {
                continue;
            }
            let frame_prop = RegionProposal {
                frame: frame_idx,
                bbox: crate::geom::Bbox {
                    x: prop.bbox.x + x0,
                    y: prop.bbox.y + y0,
                    ..prop.bbox
                },
                centroid,
                perimeter: prop.perimeter,
                seed: prop.seed.map(|(sx, sy)| (sx + x0, sy + y0)),
                source: prop.source,
            };
            let stack = self.patch_stack(&frame_prop);
            let Ok(classification) = self.classifier.classify(&stack) else {
                continue;
            };
            if crate::classify::is_ball(classification.label) {
                candidates.push(Detection::from_proposal(&frame_prop, classification));
            }
        }
        candidates
    }

    /// The accepted ball detection nearest the predicted center; the ROI
    /// prior is the only disambiguator available.
    pub fn detect_in_roi(&self, frame_idx: usize, center: Point, radius: f64) -> Option<Detection> {
        self.candidates_in_roi(frame_idx, center, radius)
            .into_iter()
            .min_by(|a, b| {
                geom::euclidean(a.centroid, center)
                    .partial_cmp(&geom::euclidean(b.centroid, center))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    }

    fn patch_stack(&self, proposal: &RegionProposal) -> crate::classify::PatchStack {
        let t = proposal.frame;
        let cur = &self.frames[t];
        let prev = if t > 0 { &self.frames[t - 1] } else { cur };
        let next = if t + 1 < self.frames.len() { &self.frames[t + 1] } else { cur };
        extract_patch_stack(prev, cur, next, proposal)
    }

    /// Fills interior gaps of a track: each missing frame between two known
    /// points is searched at the linear interpolation of its neighbours.
    /// Gaps simply remain when nothing is accepted. Returns the number of
    /// inserted points.
    pub fn intra_redetect(&self, track: &mut Track) -> usize {
        let mut to_insert: Vec<TrackPoint> = Vec::new();
        for pair in track.points.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.frame <= a.frame + 1 {
                continue;
            }
            for f in a.frame + 1..b.frame {
                let t = (f - a.frame) as f64 / (b.frame - a.frame) as f64;
                let center = geom::lerp(a.pos, b.pos, t);
                if let Some(det) = self.detect_in_roi(f, center, self.params.r_intra) {
                    to_insert.push(TrackPoint {
                        frame: f,
                        pos: det.centroid,
                        source: PointSource::IntraRedetect,
                    });
                }
            }
        }
        let n = to_insert.len();
        for p in to_insert {
            track.insert_point(p);
        }
        n
    }

    /// Grows a track from its own end toward the nearest end of `neighbor`,
    /// one frame at a time, re-anchoring the extrapolation after every
    /// accepted point. The target range includes the neighbour's first (or
    /// last) frame so a successful growth produces one shared frame — that
    /// boundary point is only claimed when it agrees with the neighbour's
    /// own observation within `confirm_epsilon` (hit frames can carry two
    /// observations of a bent streak; a contradicting one must not be
    /// forced). When the gap exceeds `g_max` the prediction is considered
    /// hopeless and nothing is attempted. Returns the number of added points.
    pub fn inter_redetect(
        &self,
        track: &mut Track,
        neighbor: &Track,
        direction: GrowDirection,
    ) -> usize {
        let frames: Vec<usize> = match direction {
            GrowDirection::Future => {
                if neighbor.start_frame() <= track.end_frame() {
                    return 0;
                }
                if neighbor.start_frame() - track.end_frame() > self.params.g_max {
                    return 0;
                }
                (track.end_frame() + 1..=neighbor.start_frame()).collect()
            }
            GrowDirection::Past => {
                if neighbor.end_frame() >= track.start_frame() {
                    return 0;
                }
                if track.start_frame() - neighbor.end_frame() > self.params.g_max {
                    return 0;
                }
                (neighbor.end_frame()..track.start_frame()).rev().collect()
            }
        };
        let mut added = 0;
        for f in frames {
            let roi = predict(track, f, &self.params);
            let accepted = match neighbor.point_at(f) {
                // boundary frame: nearest candidate to the neighbour's own
                // point, and only when it confirms that point
                Some(anchor) => self
                    .candidates_in_roi(f, roi.center, roi.radius)
                    .into_iter()
                    .map(|det| (geom::euclidean(det.centroid, anchor.pos), det))
                    .filter(|(dist, _)| *dist <= self.params.confirm_epsilon)
                    .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
                    .map(|(_, det)| det),
                None => self.detect_in_roi(f, roi.center, roi.radius),
            };
            if let Some(det) = accepted {
                track.insert_point(TrackPoint {
                    frame: f,
                    pos: det.centroid,
                    source: PointSource::InterRedetect,
                });
                added += 1;
            }
        }
        added
    }
}
