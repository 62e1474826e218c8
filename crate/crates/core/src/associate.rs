//! Merging track fragments into the single ball trajectory.
//!
//! The tracker with the most responses seeds the correct group. Then, in a
//! loop until the original group is empty:
//!
//! 1. intra-trajectory comparison — every unresolved tracker sharing frames
//!    with the trajectory is compared on those frames: agreement within ε
//!    everywhere moves it to the correct group and merges its points; any
//!    disagreement moves it to the wrong group;
//! 2. inter-trajectory comparison — the chronologically closest unresolved
//!    trackers at either end are checked for a consistent shared point
//!    (overlap normally created by re-detection growth); a match merges and
//!    returns to step 1; otherwise the strongest remaining tracker is
//!    promoted as a new correct segment — or dropped, with everything else,
//!    when nothing strong enough remains.
//!
//! Merging never overwrites: on shared frames the existing value wins, so
//! the seed (most responses) dominates.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::geom::{self, Point};
use crate::track::{PointSource, Track};

/// One output position with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct TrajPoint {
    pub pos: Point,
    pub source: PointSource,
    pub track_id: usize,
}

/// The final per-frame ball position map; gaps are simply missing keys.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    points: BTreeMap<usize, TrajPoint>,
    pub contributing: Vec<TrackSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackSummary {
    pub id: usize,
    pub kind: &'static str,
    pub start_frame: usize,
    pub end_frame: usize,
    pub responses: u32,
}

impl TrackSummary {
    fn of(track: &Track) -> Self {
        TrackSummary {
            id: track.id,
            kind: track.kind.as_str(),
            start_frame: track.start_frame(),
            end_frame: track.end_frame(),
            responses: track.responses,
        }
    }
}

pub const TRAJECTORY_CSV_HEADER: &str = "frame,cx,cy,provenance";

impl Trajectory {
    pub fn position(&self, frame: usize) -> Option<Point> {
        self.points.get(&frame).map(|p| p.pos)
    }

    pub fn point(&self, frame: usize) -> Option<&TrajPoint> {
        self.points.get(&frame)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start_frame(&self) -> Option<usize> {
        self.points.keys().next().copied()
    }

    pub fn end_frame(&self) -> Option<usize> {
        self.points.keys().next_back().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &TrajPoint)> {
        self.points.iter().map(|(f, p)| (*f, p))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_CSV_HEADER);
        out.push('\n');
        for (frame, p) in self.iter() {
            out.push_str(&format!(
                "{},{:.3},{:.3},{}\n",
                frame,
                p.pos.0,
                p.pos.1,
                p.source.as_str()
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let frames: Vec<serde_json::Value> = self
            .iter()
            .map(|(f, p)| {
                serde_json::json!({
                    "i": f,
                    "cx": p.pos.0,
                    "cy": p.pos.1,
                    "provenance": p.source.as_str(),
                    "track": p.track_id,
                })
            })
            .collect();
        serde_json::json!({ "frames": frames, "tracks": self.contributing })
    }

    /// Parses the trajectory CSV written by [`Trajectory::to_csv`].
    pub fn from_csv(text: &str) -> crate::Result<Trajectory> {
        let mut traj = Trajectory::default();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line == TRAJECTORY_CSV_HEADER {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(crate::Error::Config(format!(
                    "trajectory CSV line {}: expected 4 fields, got {}",
                    ln + 1,
                    fields.len()
                )));
            }
            let parse_err = |what: &str| {
                crate::Error::Config(format!("trajectory CSV line {}: bad {what}", ln + 1))
            };
            let frame: usize = fields[0].parse().map_err(|_| parse_err("frame"))?;
            let cx: f64 = fields[1].parse().map_err(|_| parse_err("cx"))?;
            let cy: f64 = fields[2].parse().map_err(|_| parse_err("cy"))?;
            let source = match fields[3] {
                "detection" => PointSource::Detection,
                "intra" => PointSource::IntraRedetect,
                "inter" => PointSource::InterRedetect,
                other => {
                    return Err(crate::Error::Config(format!(
                        "trajectory CSV line {}: unknown provenance `{other}`",
                        ln + 1
                    )))
                }
            };
            traj.points.insert(
                frame,
                TrajPoint { pos: (cx, cy), source, track_id: 0 },
            );
        }
        Ok(traj)
    }
}

/// Disjoint groups produced by association. `dropped` holds trackers that
/// neither contradicted the trajectory nor were strong enough to promote;
/// they contribute nothing to the output.
#[derive(Debug, Clone, Default)]
pub struct TrackerGroups {
    pub original: Vec<usize>,
    pub correct: Vec<usize>,
    pub wrong: Vec<usize>,
    pub dropped: Vec<usize>,
}

/// Merges a consistent track into the trajectory: union of points, existing
/// values win on shared frames.
pub fn merge(trajectory: &mut Trajectory, track: &Track) {
    for p in &track.points {
        trajectory.points.entry(p.frame).or_insert(TrajPoint {
            pos: p.pos,
            source: p.source,
            track_id: track.id,
        });
    }
    trajectory.contributing.push(TrackSummary::of(track));
}

/// Shared-frame comparison: `Some(true)` when every shared frame agrees
/// within ε, `Some(false)` when any disagrees, `None` without shared frames.
fn compare_on_shared_frames(trajectory: &Trajectory, track: &Track, epsilon: f64) -> Option<bool> {
    let mut shared = false;
    for p in &track.points {
        if let Some(existing) = trajectory.points.get(&p.frame) {
            shared = true;
            if geom::euclidean(existing.pos, p.pos) > epsilon {
                return Some(false);
            }
        }
    }
    shared.then_some(true)
}

/// Frame distance between a track's span and the trajectory's span;
/// 0 when the spans overlap (the track may still share no frame if it sits
/// in a trajectory gap).
fn span_distance(trajectory: &Trajectory, track: &Track) -> usize {
    let (Some(start), Some(end)) = (trajectory.start_frame(), trajectory.end_frame()) else {
        return usize::MAX;
    };
    if track.end_frame() < start {
        start - track.end_frame()
    } else if track.start_frame() > end {
        track.start_frame() - end
    } else {
        0
    }
}

/// Selection order for seeds and promotions: most responses, then earliest
/// start frame, then lowest id.
fn strongest(tracks: &[Track], ids: &[usize]) -> Option<usize> {
    ids.iter().copied().min_by_key(|&id| {
        let t = &tracks[id];
        (std::cmp::Reverse(t.responses), t.start_frame(), t.id)
    })
}

/// Runs the association procedure over validated tracks and returns the
/// merged trajectory together with the final grouping. `min_promote` is the
/// response count a tracker must exceed to be promoted as a fresh segment
/// when neither neighbour matches (normally the normal-track validation
/// threshold).
pub fn associate(tracks: &[Track], epsilon: f64, min_promote: u32) -> (Trajectory, TrackerGroups) {
    let mut groups = TrackerGroups::default();
    let mut trajectory = Trajectory::default();
    if tracks.is_empty() {
        return (trajectory, groups);
    }
    // indices into `tracks`; `strongest` resolves ties deterministically
    let mut original: Vec<usize> = (0..tracks.len()).collect();
    groups.original = original.clone();

    let seed = strongest(tracks, &original).expect("nonempty");
    original.retain(|&i| i != seed);
    merge(&mut trajectory, &tracks[seed]);
    groups.correct.push(tracks[seed].id);

    loop {
        // step 1: sweep trackers sharing frames with the trajectory until
        // none remain (each merge can create new overlaps)
        loop {
            let mut sharing: Vec<usize> = original
                .iter()
                .copied()
                .filter(|&i| compare_on_shared_frames(&trajectory, &tracks[i], epsilon).is_some())
                .collect();
            if sharing.is_empty() {
                break;
            }
            sharing.sort_by_key(|&i| {
                let t = &tracks[i];
                (std::cmp::Reverse(t.responses), t.start_frame(), t.id)
            });
            for i in sharing {
                match compare_on_shared_frames(&trajectory, &tracks[i], epsilon) {
                    Some(true) => {
                        merge(&mut trajectory, &tracks[i]);
                        groups.correct.push(tracks[i].id);
                        original.retain(|&j| j != i);
                    }
                    Some(false) => {
                        groups.wrong.push(tracks[i].id);
                        original.retain(|&j| j != i);
                    }
                    // the trajectory only gains frames, so a track sharing
                    // frames at snapshot time still shares them here
                    None => {}
                }
            }
        }
        if original.is_empty() {
            break;
        }

        // step 2: the closest unresolved trackers at both ends
        let mut candidates: Vec<usize> = original.clone();
        candidates.sort_by_key(|&i| {
            let t = &tracks[i];
            (span_distance(&trajectory, t), t.start_frame(), t.id)
        });
        let nearest = candidates[0];
        let merged_neighbor = compare_on_shared_frames(&trajectory, &tracks[nearest], epsilon)
            == Some(true);
        if merged_neighbor {
            merge(&mut trajectory, &tracks[nearest]);
            groups.correct.push(tracks[nearest].id);
            original.retain(|&j| j != nearest);
            continue; // back to step 1
        }

        // neither neighbour matched: promote the strongest remaining tracker
        // as a new correct segment, or drop the rest when none qualifies
        let candidate = strongest(tracks, &original).expect("nonempty");
        if tracks[candidate].responses > min_promote {
            original.retain(|&j| j != candidate);
            merge(&mut trajectory, &tracks[candidate]);
            groups.correct.push(tracks[candidate].id);
        } else {
            for &i in &original {
                groups.dropped.push(tracks[i].id);
            }
            original.clear();
        }
    }
    (trajectory, groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::{TrackKind, TrackPoint, TrackState};

    fn track(id: usize, points: &[(usize, f64, f64)], responses: u32) -> Track {
        Track {
            id,
            kind: TrackKind::Normal,
            points: points
                .iter()
                .map(|&(frame, x, y)| TrackPoint {
                    frame,
                    pos: (x, y),
                    source: PointSource::Detection,
                })
                .collect(),
            direction: None,
            responses,
            misses: 0,
            state: TrackState::Terminated,
            validated: true,
            last_feature: None,
        }
    }

    fn line_points(range: std::ops::Range<usize>) -> Vec<(usize, f64, f64)> {
        range.map(|t| (t, 10.0 * t as f64, 50.0)).collect()
    }

    #[test]
    fn empty_input_gives_empty_trajectory() {
        let (traj, groups) = associate(&[], 5.0, 5);
        assert!(traj.is_empty());
        assert!(groups.correct.is_empty());
    }

    #[test]
    fn single_track_becomes_the_trajectory() {
        let a = track(0, &line_points(0..10), 10);
        let (traj, groups) = associate(&[a], 5.0, 5);
        assert_eq!(traj.len(), 10);
        assert_eq!(groups.correct, vec![0]);
        assert_eq!(traj.position(3), Some((30.0, 50.0)));
    }

    #[test]
    fn duplicate_fragment_merges_without_changing_shared_frames() {
        let seed = track(0, &line_points(0..40), 40);
        // duplicates 3 frames within ε and adds nothing new
        let dup = track(1, &[(10, 100.5, 50.0), (11, 110.4, 50.2), (12, 120.0, 50.0)], 3);
        let (traj, groups) = associate(&[seed, dup], 5.0, 5);
        assert_eq!(groups.correct, vec![0, 1]);
        assert_eq!(traj.position(10), Some((100.0, 50.0)), "seed value kept");
        assert_eq!(traj.len(), 40);
    }

    #[test]
    fn contradicting_fragment_lands_in_wrong_group() {
        let seed = track(0, &line_points(0..40), 40);
        let distractor = track(
            1,
            &[(15, 300.0, 200.0), (16, 300.0, 200.0), (17, 300.0, 200.0)],
            3,
        );
        let (traj, groups) = associate(&[seed, distractor], 5.0, 5);
        assert_eq!(groups.wrong, vec![1]);
        // none of the distractor's points leaked into the output
        for (_, p) in traj.iter() {
            assert_ne!(p.track_id, 1);
            assert!(geom::euclidean(p.pos, (300.0, 200.0)) > 5.0);
        }
    }

    #[test]
    fn adjacent_fragments_merge_through_one_consistent_shared_frame() {
        // fragment A grown by re-detection so it reaches B's first frame
        let mut a_points = line_points(0..12);
        a_points.push((12, 120.0, 50.0)); // the grown overlap point
        let a = track(0, &a_points, 12);
        let b = track(1, &line_points(12..24), 12);
        let (traj, groups) = associate(&[a, b], 5.0, 5);
        assert_eq!(groups.correct, vec![0, 1]);
        assert_eq!(groups.wrong, Vec::<usize>::new());
        assert_eq!(traj.len(), 24);
        // continuous: every frame of 0..24 present
        for f in 0..24 {
            assert!(traj.position(f).is_some(), "gap at {f}");
        }
    }

    #[test]
    fn disconnected_strong_fragment_is_promoted() {
        let a = track(0, &line_points(0..20), 20);
        let b = track(1, &line_points(40..60), 20);
        let (traj, groups) = associate(&[a, b], 5.0, 5);
        assert_eq!(groups.correct.len(), 2);
        assert_eq!(traj.len(), 40);
    }

    #[test]
    fn disconnected_weak_fragment_is_dropped() {
        let a = track(0, &line_points(0..20), 20);
        let weak = track(1, &[(40, 7.0, 7.0), (41, 7.0, 7.0), (42, 7.0, 7.0), (44, 7.0, 7.0)], 4);
        let (traj, groups) = associate(&[a, weak], 5.0, 5);
        assert_eq!(groups.correct, vec![0]);
        assert_eq!(groups.dropped, vec![1]);
        assert_eq!(traj.len(), 20);
    }

    #[test]
    fn merge_disjoint_and_duplicate_frames() {
        let mut traj = Trajectory::default();
        merge(&mut traj, &track(0, &[(0, 0.0, 0.0), (1, 1.0, 0.0)], 2));
        merge(&mut traj, &track(1, &[(2, 2.0, 0.0)], 1));
        assert_eq!(traj.len(), 3);
        // fully duplicate track changes nothing
        merge(&mut traj, &track(2, &[(0, 9.0, 9.0), (1, 9.0, 9.0)], 2));
        assert_eq!(traj.len(), 3);
        assert_eq!(traj.position(0), Some((0.0, 0.0)));
        // partial overlap adds only the new frames
        merge(&mut traj, &track(3, &[(1, 9.0, 9.0), (3, 3.0, 0.0)], 2));
        assert_eq!(traj.position(1), Some((1.0, 0.0)));
        assert_eq!(traj.position(3), Some((3.0, 0.0)));
    }

    #[test]
    fn association_is_input_order_invariant() {
        let a = track(0, &line_points(0..30), 30);
        let b = track(1, &line_points(29..45), 16);
        let c = track(2, &[(10, 400.0, 10.0), (11, 400.0, 10.0), (12, 400.0, 10.0)], 3);
        let (t1, _) = associate(&[a.clone(), b.clone(), c.clone()], 5.0, 5);
        let (t2, _) = associate(&[c, b, a], 5.0, 5);
        assert_eq!(t1.len(), t2.len());
        for (f, p) in t1.iter() {
            assert_eq!(t2.position(f), Some(p.pos));
        }
    }

    #[test]
    fn wrong_group_tracks_contradict_the_output() {
        let seed = track(0, &line_points(0..40), 40);
        let noisy = track(1, &[(5, 200.0, 200.0), (7, 200.0, 200.0)], 2);
        let good = track(2, &[(20, 200.5, 50.0), (21, 210.0, 50.0)], 2);
        let inputs = vec![seed, noisy, good];
        let (traj, groups) = associate(&inputs, 5.0, 5);
        assert_eq!(groups.wrong, vec![1]);
        for &wid in &groups.wrong {
            let t = inputs.iter().find(|t| t.id == wid).unwrap();
            let contradicts = t.points.iter().any(|p| {
                traj.position(p.frame)
                    .is_some_and(|q| geom::euclidean(q, p.pos) > 5.0)
            });
            assert!(contradicts);
        }
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let a = track(0, &line_points(0..5), 5);
        let (traj, _) = associate(&[a], 5.0, 5);
        let csv = traj.to_csv();
        let parsed = Trajectory::from_csv(&csv).unwrap();
        assert_eq!(parsed.len(), traj.len());
        for (f, p) in traj.iter() {
            assert_eq!(parsed.position(f), Some(p.pos));
        }
        assert!(Trajectory::from_csv("frame,cx\n1,2").is_err());
    }
}
