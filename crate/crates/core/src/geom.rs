//! Small geometric helpers shared across the pipeline.

/// A point in image coordinates. Pixel (x, y) samples the continuous plane at
/// integer coordinates, so a centroid of a single pixel (3, 4) is (3.0, 4.0).
pub type Point = (f64, f64);

/// Axis-aligned bounding box in pixel coordinates, inclusive of its origin,
/// `w`/`h` counted in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bbox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Bbox {
    pub fn from_extents(min_x: u32, min_y: u32, max_x: u32, max_y: u32) -> Self {
        Bbox {
            x: min_x,
            y: min_y,
            w: max_x - min_x + 1,
            h: max_y - min_y + 1,
        }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x as f64
            && x <= (self.x + self.w - 1) as f64
            && y >= self.y as f64
            && y <= (self.y + self.h - 1) as f64
    }

    pub fn intersects(&self, other: &Bbox) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }
}

pub fn manhattan(a: Point, b: Point) -> f64 {
    (a.0 - b.0).abs() + (a.1 - b.1).abs()
}

pub fn euclidean(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub fn norm(v: Point) -> f64 {
    (v.0 * v.0 + v.1 * v.1).sqrt()
}

/// Cosine of the angle between two vectors; 0.0 when either is (near) zero.
pub fn cosine(a: Point, b: Point) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na < 1e-12 || nb < 1e-12 {
        return 0.0;
    }
    (a.0 * b.0 + a.1 * b.1) / (na * nb)
}

/// Dot product of two equal-length vectors; feature similarity for
/// unit-normalized vectors.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
}
