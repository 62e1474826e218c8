//! Candidate ball regions.
//!
//! Round one generates coarse proposals from the connected components of the
//! motion mask, filtered by the non-human rule: components larger than a
//! human-scale area threshold are discarded, and so is anything whose
//! bounding box touches a discarded component (player-adjacent suppression).
//!
//! Round two (used inside predicted regions of interest) is brightness-seeded
//! region growing: while the mask has set bits, take the brightest masked
//! pixel as seed, grow the 8-connected set of pixels whose HSL lies within a
//! per-channel window around the seed, emit the region when its contour
//! perimeter lies strictly inside (c_min, c_max), and clear the mask over the
//! grown region. Each iteration clears at least the seed bit, so the loop
//! terminates.

use crate::geom::{Bbox, Point};
use crate::media::{mean_blur, rgb_to_hsl, Frame, HslPlanes};
use crate::motion::{Mask, MotionMask};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalSource {
    Coarse,
    Fine,
}

impl ProposalSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProposalSource::Coarse => "coarse",
            ProposalSource::Fine => "fine",
        }
    }
}

/// A candidate ball region at one frame.
#[derive(Debug, Clone)]
pub struct RegionProposal {
    pub frame: usize,
    pub bbox: Bbox,
    pub centroid: Point,
    pub perimeter: f64,
    /// Seed pixel for fine proposals; absent for coarse ones.
    pub seed: Option<(u32, u32)>,
    pub source: ProposalSource,
}

pub const PROPOSAL_CSV_HEADER: &str = "frame,x,y,w,h,cx,cy,perimeter,source";

impl RegionProposal {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.3},{:.3},{:.3},{}",
            self.frame,
            self.bbox.x,
            self.bbox.y,
            self.bbox.w,
            self.bbox.h,
            self.centroid.0,
            self.centroid.1,
            self.perimeter,
            self.source.as_str()
        )
    }
}

/// Per-channel half-widths of the HSL window used for region growing.
/// A single scalar threshold cannot span hue degrees and unit-range
/// saturation/luminance, so the window is specified per channel.
#[derive(Debug, Clone, Copy)]
pub struct HslWindow {
    pub hue: f64,
    pub sat: f64,
    pub lum: f64,
}

#[derive(Debug, Clone)]
pub struct ProposalParams {
    pub window: HslWindow,
    /// Exclusive perimeter bounds for emitted regions.
    pub c_min: f64,
    pub c_max: f64,
    /// Area threshold (px²) of the non-human filter.
    pub a_human: f64,
    /// Cap on region-growing iterations per frame.
    pub max_regions: usize,
    /// Mean-blur applied to the luminance plane before seed selection.
    pub blur_kernel: u32,
    pub blur_passes: u32,
}

impl ProposalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_min > 0.0 && self.c_min < self.c_max) {
            return Err(Error::Config(format!(
                "perimeter bounds require 0 < c_min < c_max, got ({}, {})",
                self.c_min, self.c_max
            )));
        }
        if self.a_human <= self.c_max * self.c_max / 16.0 {
            return Err(Error::Config(format!(
                "a_human ({}) must exceed c_max²/16 ({}); human blobs are far larger than ball contours",
                self.a_human,
                self.c_max * self.c_max / 16.0
            )));
        }
        if self.blur_kernel % 2 == 0 {
            return Err(Error::Config(format!(
                "blur kernel must be odd, got {}",
                self.blur_kernel
            )));
        }
        if self.max_regions == 0 {
            return Err(Error::Config("max_regions must be at least 1".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Connected components
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Component {
    pub pixels: Vec<(u32, u32)>,
    pub bbox: Bbox,
}

impl Component {
    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    pub fn centroid(&self) -> Point {
        let n = self.pixels.len() as f64;
        let (sx, sy) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x as f64, ay + y as f64));
        (sx / n, sy / n)
    }
}

const NEIGHBORS_8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 8-connected components of a mask, in row-major discovery order.
pub fn connected_components(mask: &Mask) -> Vec<Component> {
    let w = mask.width;
    let h = mask.height;
    let mut seen = Mask::zeros(w, h);
    let mut components = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || seen.get(x, y) {
                continue;
            }
            let mut pixels = Vec::new();
            let mut stack = vec![(x, y)];
            seen.set(x, y, true);
            let (mut min_x, mut min_y, mut max_x, mut max_y) = (x, y, x, y);
            while let Some((px, py)) = stack.pop() {
                pixels.push((px, py));
                min_x = min_x.min(px);
                min_y = min_y.min(py);
                max_x = max_x.max(px);
                max_y = max_y.max(py);
                for (dx, dy) in NEIGHBORS_8 {
                    let nx = px as i64 + dx;
                    let ny = py as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as u32, ny as u32);
                    if mask.get(nx, ny) && !seen.get(nx, ny) {
                        seen.set(nx, ny, true);
                        stack.push((nx, ny));
                    }
                }
            }
            components.push(Component {
                pixels,
                bbox: Bbox::from_extents(min_x, min_y, max_x, max_y),
            });
        }
    }
    components
}

// ---------------------------------------------------------------------------
// Contour perimeter
// ---------------------------------------------------------------------------

// Moore neighbourhood in clockwise order (image coordinates, y down).
const RING: [(i64, i64); 8] = [
    (-1, 0),  // W
    (-1, -1), // NW
    (0, -1),  // N
    (1, -1),  // NE
    (1, 0),   // E
    (1, 1),   // SE
    (0, 1),   // S
    (-1, 1),  // SW
];

/// Length of the outer boundary of an 8-connected pixel set: the
/// Moore-neighbour boundary walk (straight steps 1, diagonal steps √2) plus
/// the constant 4 that closes the half-pixel offset between the walk through
/// pixel centres and the region outline. A single pixel is the unit square
/// (4.0); an n×n square gives 4n.
///
/// The walk starts from an artificial entry state that may lie outside the
/// boundary cycle (thin shapes re-enter the start pixel from a different
/// side), so the cycle is found by state recurrence and only the closed part
/// is measured.
pub fn contour_perimeter(pixels: &[(u32, u32)]) -> Result<f64> {
    if pixels.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if pixels.len() == 1 {
        return Ok(4.0);
    }
    let set: std::collections::HashSet<(i64, i64)> = pixels
        .iter()
        .map(|&(x, y)| (x as i64, y as i64))
        .collect();
    // topmost, then leftmost pixel; its W/NW/N/NE neighbours are outside
    let start = pixels
        .iter()
        .map(|&(x, y)| (y as i64, x as i64))
        .min()
        .map(|(y, x)| (x, y))
        .expect("nonempty");

    type State = ((i64, i64), (i64, i64));
    let mut current = start;
    // backtrack: the outside cell we entered the current pixel from
    let mut backtrack = (start.0 - 1, start.1); // W of start
    // walked states with the accumulated length at each
    let mut prefix: std::collections::HashMap<State, f64> =
        std::collections::HashMap::new();
    let mut length = 0.0;
    let max_steps = 8 * pixels.len() + 16;
    for _ in 0..max_steps {
        match prefix.entry((current, backtrack)) {
            std::collections::hash_map::Entry::Occupied(seen) => {
                return Ok(length - seen.get() + 4.0);
            }
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(length);
            }
        }
        let rel = (backtrack.0 - current.0, backtrack.1 - current.1);
        let ring_idx = RING
            .iter()
            .position(|&d| d == rel)
            .expect("backtrack is a Moore neighbour");
        for step in 1..=8 {
            let idx = (ring_idx + step) % 8;
            let cand = (current.0 + RING[idx].0, current.1 + RING[idx].1);
            if set.contains(&cand) {
                let prev_idx = (ring_idx + step + 7) % 8;
                backtrack = (current.0 + RING[prev_idx].0, current.1 + RING[prev_idx].1);
                let dx = cand.0 - current.0;
                let dy = cand.1 - current.1;
                length += if dx != 0 && dy != 0 {
                    std::f64::consts::SQRT_2
                } else {
                    1.0
                };
                current = cand;
                break;
            }
        }
    }
    unreachable!("boundary walk over {} finite states must cycle", pixels.len());
}

// ---------------------------------------------------------------------------
// Coarse proposals (round one)
// ---------------------------------------------------------------------------

/// Connected components of the motion mask converted to proposals, with the
/// non-human filter: components with area above `a_human` are discarded, and
/// components whose bbox intersects a discarded bbox are discarded with them.
/// The perimeter bound is applied to the survivors.
pub fn coarse_proposals(mask: &MotionMask, params: &ProposalParams) -> Vec<RegionProposal> {
    let components = connected_components(&mask.bits);
    let discarded: Vec<Bbox> = components
        .iter()
        .filter(|c| c.area() as f64 > params.a_human)
        .map(|c| c.bbox)
        .collect();
    let mut out = Vec::new();
    for comp in &components {
        if comp.area() as f64 > params.a_human {
            continue;
        }
        if discarded.iter().any(|b| b.intersects(&comp.bbox)) {
            continue;
        }
        let perimeter = contour_perimeter(&comp.pixels).expect("component is nonempty");
        if perimeter > params.c_min && perimeter < params.c_max {
            out.push(RegionProposal {
                frame: mask.t,
                bbox: comp.bbox,
                centroid: comp.centroid(),
                perimeter,
                seed: None,
                source: ProposalSource::Coarse,
            });
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Fine proposals (round two, per-ROI)
// ---------------------------------------------------------------------------

fn hue_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 360.0;
    d.min(360.0 - d)
}

fn in_window(hsl: &HslPlanes, x: u32, y: u32, seed_hsl: (f64, f64, f64), w: &HslWindow) -> bool {
    hue_distance(hsl.h.at(x, y), seed_hsl.0) <= w.hue
        && (hsl.s.at(x, y) - seed_hsl.1).abs() <= w.sat
        && (hsl.l.at(x, y) - seed_hsl.2).abs() <= w.lum
}

/// Grows the 8-connected set of pixels around the seed whose HSL lies within
/// the window centred on the seed's own HSL.
fn grow_region(hsl: &HslPlanes, seed: (u32, u32), window: &HslWindow) -> Component {
    let w = hsl.l.width;
    let h = hsl.l.height;
    let seed_hsl = (
        hsl.h.at(seed.0, seed.1),
        hsl.s.at(seed.0, seed.1),
        hsl.l.at(seed.0, seed.1),
    );
    let mut seen = Mask::zeros(w, h);
    let mut pixels = Vec::new();
    let mut stack = vec![seed];
    seen.set(seed.0, seed.1, true);
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (seed.0, seed.1, seed.0, seed.1);
    while let Some((px, py)) = stack.pop() {
        pixels.push((px, py));
        min_x = min_x.min(px);
        min_y = min_y.min(py);
        max_x = max_x.max(px);
        max_y = max_y.max(py);
        for (dx, dy) in NEIGHBORS_8 {
            let nx = px as i64 + dx;
            let ny = py as i64 + dy;
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let (nx, ny) = (nx as u32, ny as u32);
            if !seen.get(nx, ny) && in_window(hsl, nx, ny, seed_hsl, window) {
                seen.set(nx, ny, true);
                stack.push((nx, ny));
            }
        }
    }
    Component {
        pixels,
        bbox: Bbox::from_extents(min_x, min_y, max_x, max_y),
    }
}

/// Brightest masked pixel of the (blurred) luminance plane; ties broken by
/// smallest row, then smallest column.
fn select_seed(lum: &crate::media::Plane, mask: &Mask) -> Option<(u32, u32)> {
    let mut best: Option<((u32, u32), f64)> = None;
    for y in 0..mask.height {
        for x in 0..mask.width {
            if !mask.get(x, y) {
                continue;
            }
            let v = lum.at(x, y);
            match best {
                Some((_, bv)) if bv >= v => {}
                _ => best = Some(((x, y), v)),
            }
        }
    }
    best.map(|(p, _)| p)
}

/// Brightness-seeded region growing over the masked area of a frame.
///
/// The mask restricts seed selection only; regions grow wherever the HSL
/// window admits them. Emitted proposals have pairwise disjoint pixel sets
/// because every grown region is erased from the mask. `params` must have
/// passed [`ProposalParams::validate`].
pub fn fine_proposals(frame: &Frame, mask: &Mask, params: &ProposalParams) -> Vec<RegionProposal> {
    assert_eq!(
        (frame.width, frame.height),
        (mask.width, mask.height),
        "mask must match frame dimensions"
    );
    let hsl = rgb_to_hsl(frame);
    let seed_plane = mean_blur(&hsl.l, params.blur_kernel, params.blur_passes)
        .expect("params validated: odd kernel");

    let mut mask = mask.clone();
    let mut out = Vec::new();
    for _ in 0..params.max_regions {
        let Some(seed) = select_seed(&seed_plane, &mask) else {
            break;
        };
        let region = grow_region(&hsl, seed, &params.window);
        let perimeter = contour_perimeter(&region.pixels).expect("region contains the seed");
        if perimeter > params.c_min && perimeter < params.c_max {
            out.push(RegionProposal {
                frame: frame.index,
                bbox: region.bbox,
                centroid: region.centroid(),
                perimeter,
                seed: Some(seed),
                source: ProposalSource::Fine,
            });
        }
        for &(x, y) in &region.pixels {
            mask.set(x, y, false);
        }
    }
    out
}
