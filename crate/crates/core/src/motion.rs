//! Per-frame binary motion masks from three-frame differencing: the mask at
//! time t is the elementwise AND of the thresholded absolute differences
//! against the previous and the next frame. The AND removes the single-sided
//! ghosts a plain two-frame difference leaves at the old and new positions
//! of a moving object. No dilation or hole filling is applied in round one.

use crate::media::Frame;
use crate::{Error, Result};

/// Binary matrix with frame dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn zeros(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn ones(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            bits: vec![true; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|b| *b)
    }

    /// Set pixel coordinates in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| ((i % w as usize) as u32, (i / w as usize) as u32))
    }

    /// 0/255 bytes for P5 dumps.
    pub fn to_gray(&self) -> Vec<u8> {
        self.bits.iter().map(|b| if *b { 255 } else { 0 }).collect()
    }
}

/// Motion mask at frame t; defined only for frames with neighbours on both
/// sides (1 ≤ t ≤ N−2).
#[derive(Debug, Clone)]
pub struct MotionMask {
    pub t: usize,
    pub bits: Mask,
}

/// Per-pixel difference of two frames: the maximum over the three channels
/// of the absolute difference. Keeps sensitivity to any single channel.
pub fn channel_abs_diff(a: &Frame, b: &Frame) -> Result<Vec<u8>> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch(a.width, a.height, b.width, b.height));
    }
    let out = a
        .data()
        .chunks_exact(3)
        .zip(b.data().chunks_exact(3))
        .map(|(pa, pb)| {
            let d0 = pa[0].abs_diff(pb[0]);
            let d1 = pa[1].abs_diff(pb[1]);
            let d2 = pa[2].abs_diff(pb[2]);
            d0.max(d1).max(d2)
        })
        .collect();
    Ok(out)
}

/// Thresholds a difference image: bit set iff diff > a.
pub fn binarize(diff: &[u8], width: u32, height: u32, a: u8) -> Mask {
    assert_eq!(diff.len(), width as usize * height as usize);
    Mask {
        width,
        height,
        bits: diff.iter().map(|d| *d > a).collect(),
    }
}

/// Three-frame difference mask for the middle frame: pixels that differ from
/// both the previous and the next frame by more than the threshold.
pub fn motion_mask(prev: &Frame, cur: &Frame, next: &Frame, a: u8) -> Result<MotionMask> {
    let back = binarize(&channel_abs_diff(cur, prev)?, cur.width, cur.height, a);
    let fwd = binarize(&channel_abs_diff(cur, next)?, cur.width, cur.height, a);
    let bits = Mask {
        width: cur.width,
        height: cur.height,
        bits: back
            .bits
            .iter()
            .zip(fwd.bits.iter())
            .map(|(b, f)| *b && *f)
            .collect(),
    };
    Ok(MotionMask { t: cur.index, bits })
}
