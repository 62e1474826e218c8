//! Valid-frame scoring of a trajectory against ground truth.
//!
//! Frames split into invalid (IF) and valid (VF = OF + NOF). Per valid
//! frame: a reported position within τ of the truth is a true positive; a
//! reported position off by more than τ — or any position on an invalid
//! frame — is a false positive; a valid frame without a position is a false
//! negative. Precision = TP/(TP+FP), recall = TP/VF, F1 = 2PR/(P+R).

use serde::Serialize;

use crate::associate::Trajectory;
use crate::geom;
use crate::synth::{FrameClass, GroundTruth};
use crate::track::Track;
use crate::{Error, Result};

/// Why a trajectory fragment ended, when the ground truth can tell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InterruptionReason {
    /// 0: direction change after hitting the racket.
    DirectionChange,
    /// 1: human body overlap.
    HumanOverlap,
    /// 2: sideline overlap.
    SidelineOverlap,
}

impl InterruptionReason {
    pub fn code(&self) -> u8 {
        match self {
            InterruptionReason::DirectionChange => 0,
            InterruptionReason::HumanOverlap => 1,
            InterruptionReason::SidelineOverlap => 2,
        }
    }
}

/// Per-fragment audit row: one round-one tracklet, its length, why it was
/// interrupted (when the ground truth provides it) and whether it actually
/// followed the ball.
#[derive(Debug, Clone, Serialize)]
pub struct FragmentAudit {
    pub id: usize,
    pub length: usize,
    pub reason: Option<InterruptionReason>,
    pub is_ball: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub if_count: usize,
    pub of_count: usize,
    pub nof_count: usize,
    pub vf_count: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fragments: Vec<FragmentAudit>,
}

/// F1 from precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Frame-class counts (IF, OF, NOF, VF) of a ground truth.
pub fn frame_taxonomy(truth: &GroundTruth) -> (usize, usize, usize, usize) {
    let mut counts = (0usize, 0usize, 0usize);
    for f in &truth.frames {
        match f.class {
            FrameClass::Invalid => counts.0 += 1,
            FrameClass::Overlapping => counts.1 += 1,
            FrameClass::NonOverlapping => counts.2 += 1,
        }
    }
    (counts.0, counts.1, counts.2, counts.1 + counts.2)
}

/// Scores a trajectory at match tolerance τ (px).
pub fn score(trajectory: &Trajectory, truth: &GroundTruth, tau: f64) -> Result<EvalReport> {
    if let Some(end) = trajectory.end_frame() {
        if end >= truth.len() {
            return Err(Error::RangeMismatch { frame: end, len: truth.len() });
        }
    }
    let (if_count, of_count, nof_count, vf_count) = frame_taxonomy(truth);

    let mut tp = 0usize;
    let mut fp = 0usize;
    for gt in &truth.frames {
        let reported = trajectory.position(gt.i);
        match (gt.class, reported) {
            (FrameClass::Invalid, Some(_)) => fp += 1,
            (FrameClass::Invalid, None) => {}
            (_, Some(pos)) => {
                let center = truth.center(gt.i).expect("valid frames carry a center");
                if geom::euclidean(pos, center) <= tau {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
            (_, None) => {}
        }
    }
    let fn_count = vf_count - tp;

    let precision = if tp + fp == 0 {
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if vf_count == 0 {
        0.0
    } else {
        tp as f64 / vf_count as f64
    };
    Ok(EvalReport {
        if_count,
        of_count,
        nof_count,
        vf_count,
        tp,
        fp,
        fn_count,
        precision,
        recall,
        f1: f1_score(precision, recall),
        fragments: Vec::new(),
    })
}

/// Recall restricted to non-overlapping frames.
pub fn recall_on_nof(trajectory: &Trajectory, truth: &GroundTruth, tau: f64) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for gt in &truth.frames {
        if gt.class != FrameClass::NonOverlapping {
            continue;
        }
        total += 1;
        if let (Some(pos), Some(center)) = (trajectory.position(gt.i), truth.center(gt.i)) {
            if geom::euclidean(pos, center) <= tau {
                hits += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Audits round-one fragments against the ground truth: fragment length,
/// whether the majority of its points follow the ball, and the interruption
/// reason when a hit or an overlap window sits at the fragment's end.
pub fn audit_fragments(tracks: &[Track], truth: &GroundTruth, tau: f64) -> Vec<FragmentAudit> {
    let overlap_windows = truth.overlap_windows();
    tracks
        .iter()
        .map(|track| {
            let on_ball = track
                .points
                .iter()
                .filter(|p| {
                    truth
                        .center(p.frame)
                        .is_some_and(|c| geom::euclidean(p.pos, c) <= tau)
                })
                .count();
            let is_ball = 2 * on_ball > track.points.len();
            let end = track.end_frame();
            let reason = if !is_ball {
                None
            } else if truth
                .hits
                .iter()
                .any(|&h| h >= end.saturating_sub(1) && h <= end + 3)
            {
                Some(InterruptionReason::DirectionChange)
            } else if overlap_windows
                .iter()
                .any(|&(s, e)| end + 2 >= s && end <= e + 2)
            {
                Some(InterruptionReason::HumanOverlap)
            } else {
                None
            };
            FragmentAudit {
                id: track.id,
                length: track.points.len(),
                reason,
                is_ball,
            }
        })
        .collect()
}

impl EvalReport {
    pub fn with_fragments(mut self, fragments: Vec<FragmentAudit>) -> Self {
        self.fragments = fragments;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table: frame taxonomy, then the metric row, then
    /// the fragment audit when present.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str("IF    OF    NOF   Frames\n");
        out.push_str(&format!(
            "{:<5} {:<5} {:<5} {}\n\n",
            self.if_count,
            self.of_count,
            self.nof_count,
            self.if_count + self.vf_count
        ));
        out.push_str("VF    Pre(%)  Re(%)   F1(%)\n");
        out.push_str(&format!(
            "{:<5} {:<7.1} {:<7.1} {:<7.1}\n",
            self.vf_count,
            self.precision * 100.0,
            self.recall * 100.0,
            self.f1 * 100.0
        ));
        if !self.fragments.is_empty() {
            out.push_str("\nFragment  Number  Reason  Ball\n");
            for f in &self.fragments {
                let reason = f
                    .reason
                    .map(|r| r.code().to_string())
                    .unwrap_or_else(|| "-".into());
                out.push_str(&format!(
                    "{:<9} {:<7} {:<7} {}\n",
                    f.id,
                    f.length,
                    reason,
                    if f.is_ball { 1 } else { 0 }
                ));
            }
        }
        out
    }
}
