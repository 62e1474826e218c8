//! Frame loading, pixel access, RGB→HSL conversion, and the canonical
//! on-disk formats: binary P6 pixmaps plus a plain-text manifest listing one
//! frame file per line. Video container decoding is out of scope; sequences
//! are pre-extracted to pixmaps by external tools or by [`crate::synth`].

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::{Error, Result};

/// Minimum frame edge length.
pub const MIN_DIM: u32 = 16;

/// One RGB image of a fixed-camera sequence, indexed by time.
/// Pixels are stored row-major, 8 bits per channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub index: usize,
    pub width: u32,
    pub height: u32,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(index: usize, width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width < MIN_DIM || height < MIN_DIM {
            return Err(Error::FrameTooSmall { w: width, h: height });
        }
        assert_eq!(
            data.len(),
            width as usize * height as usize * 3,
            "pixel buffer does not match dimensions"
        );
        Ok(Frame { index, width, height, data })
    }

    /// Frame filled with a single color.
    pub fn filled(index: usize, width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            data.extend_from_slice(&rgb);
        }
        Frame::new(index, width, height, data).expect("dimensions checked by caller")
    }

    #[inline]
    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_rgb(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn in_bounds(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64
    }

    /// Bilinear sample with edge clamping; returns RGB as floats in [0, 255].
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [f64; 3] {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor();
        let y0 = y.floor();
        let x1 = (x0 + 1.0).min(max_x);
        let y1 = (y0 + 1.0).min(max_y);
        let fx = x - x0;
        let fy = y - y0;
        let p00 = self.rgb(x0 as u32, y0 as u32);
        let p10 = self.rgb(x1 as u32, y0 as u32);
        let p01 = self.rgb(x0 as u32, y1 as u32);
        let p11 = self.rgb(x1 as u32, y1 as u32);
        let mut out = [0.0; 3];
        for c in 0..3 {
            let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
            let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
            out[c] = top * (1.0 - fy) + bottom * fy;
        }
        out
    }
}

/// A real-valued matrix with frame dimensions; used for channel planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: u32,
    pub height: u32,
    data: Vec<f64>,
}

impl Plane {
    pub fn zeros(width: u32, height: u32) -> Self {
        Plane {
            width,
            height,
            data: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f64) -> Self {
        let mut p = Plane::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                p.set(x, y, f(x, y));
            }
        }
        p
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Per-channel HSL planes of one frame: hue in degrees [0, 360),
/// saturation and luminance in [0, 1].
#[derive(Debug, Clone)]
pub struct HslPlanes {
    pub h: Plane,
    pub s: Plane,
    pub l: Plane,
}

/// Hexcone HSL of one 8-bit RGB pixel. Achromatic pixels get hue 0.
pub fn pixel_rgb_to_hsl(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let r = r as f64 / 255.0;
    let g = g as f64 / 255.0;
    let b = b as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let l = (max + min) / 2.0;

    if delta == 0.0 {
        return (0.0, 0.0, l);
    }

    // the quotient can exceed 1.0 by an ulp near the gamut edge
    let s = (delta / (1.0 - (2.0 * l - 1.0).abs())).clamp(0.0, 1.0);
    let h = if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = if h >= 360.0 { h - 360.0 } else { h };
    (h, s, l)
}

/// Inverse of [`pixel_rgb_to_hsl`]; recovers each 8-bit channel within ±1.
pub fn pixel_hsl_to_rgb(h: f64, s: f64, l: f64) -> [u8; 3] {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    [
        ((r1 + m) * 255.0).round().clamp(0.0, 255.0) as u8,
        ((g1 + m) * 255.0).round().clamp(0.0, 255.0) as u8,
        ((b1 + m) * 255.0).round().clamp(0.0, 255.0) as u8,
    ]
}

/// Converts a frame to HSL planes.
pub fn rgb_to_hsl(frame: &Frame) -> HslPlanes {
    let mut h = Plane::zeros(frame.width, frame.height);
    let mut s = Plane::zeros(frame.width, frame.height);
    let mut l = Plane::zeros(frame.width, frame.height);
    for y in 0..frame.height {
        for x in 0..frame.width {
            let [r, g, b] = frame.rgb(x, y);
            let (hh, ss, ll) = pixel_rgb_to_hsl(r, g, b);
            h.set(x, y, hh);
            s.set(x, y, ss);
            l.set(x, y, ll);
        }
    }
    HslPlanes { h, s, l }
}

/// `repeats` passes of a k×k mean filter with edge replication.
/// The clamped k×k window factors into a row pass and a column pass.
pub fn mean_blur(plane: &Plane, kernel: u32, repeats: u32) -> Result<Plane> {
    if kernel % 2 == 0 {
        return Err(Error::EvenKernel(kernel));
    }
    let mut cur = plane.clone();
    if kernel == 1 {
        return Ok(cur);
    }
    let half = (kernel / 2) as i64;
    let w = plane.width as i64;
    let h = plane.height as i64;
    for _ in 0..repeats {
        let mut rows = Plane::zeros(plane.width, plane.height);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for dx in -half..=half {
                    let sx = (x + dx).clamp(0, w - 1);
                    acc += cur.at(sx as u32, y as u32);
                }
                rows.set(x as u32, y as u32, acc / kernel as f64);
            }
        }
        let mut cols = Plane::zeros(plane.width, plane.height);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for dy in -half..=half {
                    let sy = (y + dy).clamp(0, h - 1);
                    acc += rows.at(x as u32, sy as u32);
                }
                cols.set(x as u32, y as u32, acc / kernel as f64);
            }
        }
        cur = cols;
    }
    Ok(cur)
}

// ---------------------------------------------------------------------------
// P6 / P5 pixmaps
// ---------------------------------------------------------------------------

fn parse_header(bytes: &[u8], path: &Path, magic: &[u8]) -> Result<(u32, u32, usize)> {
    let bad = |reason: &str| Error::PixmapFormat {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 2 || &bytes[0..2] != magic {
        return Err(bad(&format!(
            "missing {} magic",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // skip whitespace and `#` comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("expected integer in header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits are ascii");
        *field = text.parse().map_err(|_| bad("header value out of range"))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(bad("expected whitespace after maxval")),
    }
    if fields[2] != 255 {
        return Err(bad(&format!("maxval must be 255, got {}", fields[2])));
    }
    if fields[0] == 0 || fields[1] == 0 {
        return Err(bad("zero dimension"));
    }
    Ok((fields[0], fields[1], pos))
}

/// Loads a binary P6 pixmap as a frame with the given index.
pub fn load_frame(path: &Path, index: usize) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, offset) = parse_header(&bytes, path, b"P6")?;
    let expected = width as usize * height as usize * 3;
    if bytes.len() - offset < expected {
        return Err(Error::PixmapFormat {
            path: path.to_path_buf(),
            reason: format!(
                "pixel data truncated: want {} bytes, have {}",
                expected,
                bytes.len() - offset
            ),
        });
    }
    let data = bytes[offset..offset + expected].to_vec();
    Frame::new(index, width, height, data)
}

/// Writes a frame as a binary P6 pixmap in canonical form
/// (`P6\n<w> <h>\n255\n` followed by raw RGB bytes).
pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write!(out, "P6\n{} {}\n255\n", frame.width, frame.height).map_err(|e| Error::io(path, e))?;
    out.write_all(&frame.data).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes a grayscale P5 pixmap; used for mask dumps.
pub fn write_p5(path: &Path, width: u32, height: u32, gray: &[u8]) -> Result<()> {
    assert_eq!(gray.len(), width as usize * height as usize);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write!(out, "P5\n{} {}\n255\n", width, height).map_err(|e| Error::io(path, e))?;
    out.write_all(gray).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Sequence manifest
// ---------------------------------------------------------------------------

/// Ordered list of frame files in a directory. The frame index is the
/// position in the list; the frame rate is carried as metadata only.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceManifest {
    pub directory: PathBuf,
    pub files: Vec<String>,
    pub fps: f64,
}

pub const DEFAULT_FPS: f64 = 30.0;

impl SequenceManifest {
    pub fn new(directory: impl Into<PathBuf>, files: Vec<String>, fps: f64) -> Self {
        SequenceManifest {
            directory: directory.into(),
            files,
            fps,
        }
    }

    pub fn frame_path(&self, index: usize) -> PathBuf {
        self.directory.join(&self.files[index])
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}

/// Reads a manifest: one relative file name per line, in frame order.
/// Blank lines and `#` comments are ignored; a `# fps <value>` comment sets
/// the frame rate.
pub fn load_manifest(path: &Path) -> Result<SequenceManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let directory = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut files = Vec::new();
    let mut fps = DEFAULT_FPS;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("fps") {
                if let Some(Ok(v)) = words.next().map(str::parse::<f64>) {
                    fps = v;
                }
            }
            continue;
        }
        files.push(line.to_string());
    }
    Ok(SequenceManifest { directory, files, fps })
}

pub fn write_manifest(path: &Path, manifest: &SequenceManifest) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# fps {}", manifest.fps).map_err(|e| Error::io(path, e))?;
    for name in &manifest.files {
        writeln!(out, "{name}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Loads every frame of a manifest, in index order, checking that all frames
/// share dimensions.
pub fn load_sequence(manifest: &SequenceManifest) -> Result<Vec<Frame>> {
    let mut frames: Vec<Frame> = Vec::with_capacity(manifest.len());
    for (index, _) in manifest.files.iter().enumerate() {
        let path = manifest.frame_path(index);
        let frame = load_frame(&path, index)?;
        if let Some(first) = frames.first() {
            if frame.width != first.width || frame.height != first.height {
                return Err(Error::DimensionMismatch {
                    path,
                    want_w: first.width,
                    want_h: first.height,
                    got_w: frame.width,
                    got_h: frame.height,
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn hsl_white_black_gray() {
        let (h, s, l) = pixel_rgb_to_hsl(255, 255, 255);
        assert_eq!((h, s), (0.0, 0.0));
        assert_abs_diff_eq!(l, 1.0);

        let (_, s, l) = pixel_rgb_to_hsl(0, 0, 0);
        assert_eq!((s, l), (0.0, 0.0));

        let (_, s, l) = pixel_rgb_to_hsl(128, 128, 128);
        assert_eq!(s, 0.0);
        assert_abs_diff_eq!(l, 128.0 / 255.0, epsilon = 1e-12);
    }

    #[test]
    fn hsl_primaries() {
        let (h, s, l) = pixel_rgb_to_hsl(255, 0, 0);
        assert_abs_diff_eq!(h, 0.0);
        assert_abs_diff_eq!(s, 1.0);
        assert_abs_diff_eq!(l, 0.5);
        let (h, _, _) = pixel_rgb_to_hsl(0, 255, 0);
        assert_abs_diff_eq!(h, 120.0);
        let (h, _, _) = pixel_rgb_to_hsl(0, 0, 255);
        assert_abs_diff_eq!(h, 240.0);
    }

    proptest! {
        #[test]
        fn hsl_round_trip_within_one(r: u8, g: u8, b: u8) {
            let (h, s, l) = pixel_rgb_to_hsl(r, g, b);
            prop_assert!((0.0..360.0).contains(&h));
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((0.0..=1.0).contains(&l));
            let [r2, g2, b2] = pixel_hsl_to_rgb(h, s, l);
            prop_assert!((r as i16 - r2 as i16).abs() <= 1);
            prop_assert!((g as i16 - g2 as i16).abs() <= 1);
            prop_assert!((b as i16 - b2 as i16).abs() <= 1);
        }
    }

    #[test]
    fn blur_zero_repeats_is_identity() {
        let p = Plane::from_fn(20, 18, |x, y| (x * 31 + y * 7) as f64 / 100.0);
        let out = mean_blur(&p, 3, 0).unwrap();
        assert_eq!(out, p);
    }

    #[test]
    fn blur_constant_plane_unchanged() {
        let p = Plane::from_fn(16, 16, |_, _| 0.625);
        let out = mean_blur(&p, 5, 3).unwrap();
        for v in out.data() {
            assert_abs_diff_eq!(*v, 0.625, epsilon = 1e-12);
        }
    }

    #[test]
    fn blur_impulse_spreads_to_ninth() {
        // 5×5 impulse, k=3, n=1 → 3×3 block of 1/9 centered.
        let mut p = Plane::zeros(16, 16);
        p.set(8, 8, 1.0);
        let out = mean_blur(&p, 3, 1).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                let expected = if (7..=9).contains(&x) && (7..=9).contains(&y) {
                    1.0 / 9.0
                } else {
                    0.0
                };
                assert_abs_diff_eq!(out.at(x, y), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn blur_rejects_even_kernel() {
        let p = Plane::zeros(16, 16);
        assert!(matches!(mean_blur(&p, 4, 1), Err(Error::EvenKernel(4))));
    }

    #[test]
    fn blur_preserves_mass_away_from_edges() {
        // All mass far enough from the border that replication never sees it:
        // each pass spreads support by k/2, so margin > repeats * (k/2).
        let k = 3u32;
        let n = 3u32;
        let margin = (n * (k / 2) + 1) as u32;
        let p = Plane::from_fn(32, 32, |x, y| {
            if x >= margin && x < 32 - margin && y >= margin && y < 32 - margin {
                ((x * 13 + y * 29) % 97) as f64 / 97.0
            } else {
                0.0
            }
        });
        let out = mean_blur(&p, k, n).unwrap();
        assert_abs_diff_eq!(out.mean(), p.mean(), epsilon = 1e-9);
    }

    #[test]
    fn ppm_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f0.ppm");
        let frame = Frame::from_test_pattern(0, 64, 48);
        write_frame(&path, &frame).unwrap();
        let first = fs::read(&path).unwrap();
        let loaded = load_frame(&path, 0).unwrap();
        assert_eq!(loaded, frame);
        let path2 = dir.path().join("f0b.ppm");
        write_frame(&path2, &loaded).unwrap();
        assert_eq!(first, fs::read(&path2).unwrap());
    }

    #[test]
    fn ppm_rejects_bad_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ppm");
        fs::write(&path, b"P3\n4 4\n255\n").unwrap();
        assert!(matches!(
            load_frame(&path, 0),
            Err(Error::PixmapFormat { .. })
        ));
        fs::write(&path, b"P6\n64 48\n255\nshort").unwrap();
        assert!(matches!(
            load_frame(&path, 0),
            Err(Error::PixmapFormat { .. })
        ));
    }

    #[test]
    fn sequence_loads_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut files = Vec::new();
        for i in 0..3 {
            let name = format!("frame_{i:04}.ppm");
            let frame = Frame::filled(i, 64, 48, [10 * i as u8, 0, 0]);
            write_frame(&dir.path().join(&name), &frame).unwrap();
            files.push(name);
        }
        let manifest = SequenceManifest::new(dir.path(), files, 30.0);
        let frames = load_sequence(&manifest).unwrap();
        assert_eq!(frames.len(), 3);
        for (i, f) in frames.iter().enumerate() {
            assert_eq!(f.index, i);
            assert_eq!(f.rgb(0, 0), [10 * i as u8, 0, 0]);
        }
    }

    #[test]
    fn sequence_rejects_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_frame(&dir.path().join("a.ppm"), &Frame::filled(0, 64, 48, [0; 3])).unwrap();
        write_frame(&dir.path().join("b.ppm"), &Frame::filled(1, 32, 48, [0; 3])).unwrap();
        let manifest =
            SequenceManifest::new(dir.path(), vec!["a.ppm".into(), "b.ppm".into()], 30.0);
        assert!(matches!(
            load_sequence(&manifest),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sequence_rejects_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = SequenceManifest::new(dir.path(), vec!["missing.ppm".into()], 30.0);
        assert!(matches!(load_sequence(&manifest), Err(Error::Io { .. })));
    }

    #[test]
    fn manifest_round_trip_with_fps_comment() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sequence.txt");
        let manifest = SequenceManifest::new(
            dir.path(),
            vec!["f0.ppm".into(), "f1.ppm".into()],
            25.0,
        );
        write_manifest(&path, &manifest).unwrap();
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(loaded.files, manifest.files);
        assert_eq!(loaded.fps, 25.0);
    }

    impl Frame {
        /// Deterministic non-uniform content for IO tests.
        pub(crate) fn from_test_pattern(index: usize, width: u32, height: u32) -> Frame {
            let mut f = Frame::filled(index, width, height, [0, 0, 0]);
            for y in 0..height {
                for x in 0..width {
                    f.set_rgb(
                        x,
                        y,
                        [
                            (x * 3 + y) as u8,
                            (x ^ y) as u8,
                            (255 - (x + y) as u32 % 256) as u8,
                        ],
                    );
                }
            }
            f
        }
    }
}
