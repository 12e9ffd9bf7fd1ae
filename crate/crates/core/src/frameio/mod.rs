//! Frame sequences on disk and deterministic synthetic scenes.
//!
//! Sequences are stored as one binary PGM (P5) file per frame, named
//! `frame_%06d.pgm`, plus a `meta.txt` with `fps=<int>` and `count=<int>`
//! lines. Intensities are `[0,1]` in memory and quantized with
//! `round(v * 255)` on write.

mod scenes;
mod script;
mod synth;

pub use scenes::*;
pub use script::*;
pub use synth::synthesize_scene;

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Point, Rect};

/// A single grayscale frame with intensities in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
    /// Ordinal of the frame within its sequence.
    pub index: usize,
}

impl Frame {
    pub fn new(width: usize, height: usize, index: usize) -> Frame {
        assert!(width >= 1 && height >= 1);
        Frame {
            width,
            height,
            pixels: vec![0.0; width * height],
            index,
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f32>, index: usize) -> Result<Frame> {
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "pixel count {} does not match {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        if pixels.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Format("intensity outside [0,1]".into()));
        }
        Ok(Frame {
            width,
            height,
            pixels,
            index,
        })
    }

    pub fn from_fn(width: usize, height: usize, index: usize, f: impl Fn(usize, usize) -> f32) -> Frame {
        let mut frame = Frame::new(width, height, index);
        for y in 0..height {
            for x in 0..width {
                frame.pixels[y * width + x] = f(x, y).clamp(0.0, 1.0);
            }
        }
        frame
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.pixels[y * self.width + x] = v.clamp(0.0, 1.0);
    }

    /// Intensity with coordinates clamped to the frame border.
    #[inline]
    pub fn get_clamped(&self, x: i32, y: i32) -> f32 {
        let x = x.clamp(0, self.width as i32 - 1) as usize;
        let y = y.clamp(0, self.height as i32 - 1) as usize;
        self.get(x, y)
    }

    /// Copy of the pixels of `rect ∩ frame`, row-major.
    pub fn region(&self, rect: Rect) -> Vec<f32> {
        let r = rect
            .intersect(&Rect::new(0, 0, self.width as u32, self.height as u32))
            .unwrap_or(Rect::new(0, 0, 0, 0));
        let mut out = Vec::with_capacity((r.w * r.h) as usize);
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                out.push(self.get(x as usize, y as usize));
            }
        }
        out
    }

    /// Extract a `w x h` patch centered on `c`, shifted to fit inside the
    /// frame. `None` if the frame is smaller than the patch.
    pub fn patch(&self, c: Point, w: u32, h: u32) -> Option<Frame> {
        let r = Rect::centered(c, w, h).clamped_into(self.width as u32, self.height as u32)?;
        let mut out = Frame::new(w as usize, h as usize, self.index);
        for y in 0..h as usize {
            for x in 0..w as usize {
                out.set(x, y, self.get(r.x as usize + x, r.y as usize + y));
            }
        }
        Some(out)
    }
}

/// An ordered list of equally-sized frames with a frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    pub fps: u32,
}

pub const DEFAULT_FPS: u32 = 25;

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, fps: u32) -> Result<FrameSequence> {
        if let Some(first) = frames.first() {
            let (w, h) = (first.width, first.height);
            for (i, f) in frames.iter().enumerate() {
                if f.width != w || f.height != h {
                    return Err(Error::Dimension(format!(
                        "frame {i} is {}x{} but sequence is {w}x{h}",
                        f.width, f.height
                    )));
                }
                if f.index != i {
                    return Err(Error::Format(format!(
                        "frame at position {i} has index {}",
                        f.index
                    )));
                }
            }
        }
        Ok(FrameSequence { frames, fps })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames.first().map_or(0, |f| f.width)
    }

    pub fn height(&self) -> usize {
        self.frames.first().map_or(0, |f| f.height)
    }
}

fn frame_name(index: usize) -> String {
    format!("frame_{index:06}.pgm")
}

/// Quantize an intensity to 8 bits, rounding half up.
#[inline]
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut header = String::new();
    let _ = write!(header, "P5\n{} {}\n255\n", frame.width, frame.height);
    let mut bytes = header.into_bytes();
    bytes.extend(frame.pixels.iter().map(|&v| quantize(v)));
    bytes
}

fn decode_pgm(bytes: &[u8], index: usize, path: &Path) -> Result<Frame> {
    let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));
    // Header tokens separated by whitespace; '#' starts a comment.
    let mut pos = 0usize;
    let mut tokens = Vec::new();
    while tokens.len() < 4 && pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos > start {
            tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ascii header"))?);
        }
    }
    if tokens.len() < 4 || tokens[0] != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let width: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
    let maxval: usize = tokens[3].parse().map_err(|_| bad("bad maxval"))?;
    if maxval != 255 {
        return Err(bad("only maxval 255 supported"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width * height;
    if bytes.len() < pos || bytes.len() - pos < need {
        return Err(bad("truncated raster"));
    }
    let pixels = bytes[pos..pos + need]
        .iter()
        .map(|&b| b as f32 / 255.0)
        .collect();
    Frame::from_pixels(width, height, pixels, index)
}

/// Read a frame sequence from a directory of PGM frames plus `meta.txt`.
pub fn read_sequence(dir: &Path) -> Result<FrameSequence> {
    let meta_path = dir.join("meta.txt");
    let meta = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let mut fps = None;
    let mut count = None;
    for line in meta.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some(("fps", v)) => fps = v.trim().parse::<u32>().ok(),
            Some(("count", v)) => count = v.trim().parse::<usize>().ok(),
            _ => {}
        }
    }
    let fps = fps.ok_or_else(|| Error::Format("meta.txt missing fps=<int>".into()))?;
    let count = count.ok_or_else(|| Error::Format("meta.txt missing count=<int>".into()))?;

    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let path = dir.join(frame_name(i));
        let mut bytes = Vec::new();
        match fs::File::open(&path) {
            Ok(mut f) => {
                f.read_to_end(&mut bytes).map_err(|e| Error::io(&path, e))?;
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::FrameGap(i));
            }
            Err(e) => return Err(Error::io(&path, e)),
        }
        frames.push(decode_pgm(&bytes, i, &path)?);
    }
    FrameSequence::new(frames, fps)
}

/// Write a frame sequence as bit-exact PGM files plus `meta.txt`.
pub fn write_sequence(seq: &FrameSequence, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for frame in &seq.frames {
        let path = dir.join(frame_name(frame.index));
        fs::write(&path, encode_pgm(frame)).map_err(|e| Error::io(&path, e))?;
    }
    let meta_path = dir.join("meta.txt");
    let meta = format!("fps={}\ncount={}\n", seq.fps, seq.frames.len());
    fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))
}

/// One scripted interaction as it actually happened in a rendered scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtInteraction {
    pub kind: InteractionKind,
    /// Frame of first hand/object contact at the target.
    pub frame: usize,
    /// Contact point (target cell center) in pixels.
    pub point: Point,
}

/// Ground truth emitted alongside a synthesized scene.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub interactions: Vec<GtInteraction>,
    /// Hand sprite center for every frame (`None` when no hand is scripted).
    pub hand_centers: Vec<Option<Point>>,
    /// Face center and gaze direction per frame when a face is scripted.
    pub faces: Vec<Option<FacePose>>,
    /// Center of every scripted actor sprite per frame (`None` outside its
    /// active window).
    pub actor_centers: Vec<Vec<Option<Point>>>,
}

/// Face center plus the unit gaze direction being rendered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePose {
    pub center: Point,
    pub direction: Point,
}

impl GroundTruth {
    /// Interactions as CSV (`kind,frame,x,y`, header row included).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,frame,x,y\n");
        for it in &self.interactions {
            let _ = writeln!(out, "{},{},{},{}", it.kind.as_str(), it.frame, it.point.x, it.point.y);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<GroundTruth> {
        let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let mut gt = GroundTruth::default();
        for record in rdr.records() {
            let rec = record.map_err(|e| Error::Format(format!("ground truth csv: {e}")))?;
            if rec.len() != 4 {
                return Err(Error::Format("ground truth csv needs kind,frame,x,y".into()));
            }
            let kind = InteractionKind::parse(&rec[0])
                .ok_or_else(|| Error::Format(format!("unknown interaction kind {:?}", &rec[0])))?;
            let frame = rec[1].parse().map_err(|_| Error::Format("bad frame".into()))?;
            let x: f32 = rec[2].parse().map_err(|_| Error::Format("bad x".into()))?;
            let y: f32 = rec[3].parse().map_err(|_| Error::Format("bad y".into()))?;
            gt.interactions.push(GtInteraction {
                kind,
                frame,
                point: Point::new(x, y),
            });
        }
        Ok(gt)
    }

    /// Per-frame face centers as CSV (`frame,x,y`), skipping faceless frames.
    pub fn faces_csv(&self) -> String {
        let mut out = String::from("frame,x,y\n");
        for (i, f) in self.faces.iter().enumerate() {
            if let Some(pose) = f {
                let _ = writeln!(out, "{},{},{}", i, pose.center.x, pose.center.y);
            }
        }
        out
    }
}

/// Parse a faces CSV (`frame,x,y` with header) into a per-frame map.
pub fn read_faces_csv(text: &str) -> Result<Vec<(usize, Point)>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in rdr.records() {
        let rec = record.map_err(|e| Error::Format(format!("faces csv: {e}")))?;
        if rec.len() != 3 {
            return Err(Error::Format("faces csv needs frame,x,y".into()));
        }
        let frame = rec[0].parse().map_err(|_| Error::Format("bad frame".into()))?;
        let x: f32 = rec[1].parse().map_err(|_| Error::Format("bad x".into()))?;
        let y: f32 = rec[2].parse().map_err(|_| Error::Format("bad y".into()))?;
        out.push((frame, Point::new(x, y)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(1.0), 255);
    }

    #[test]
    fn all_zero_frame_writes_zero_bytes() {
        let f = Frame::new(4, 2, 0);
        let bytes = encode_pgm(&f);
        assert!(bytes.starts_with(b"P5\n4 2\n255\n"));
        assert!(bytes[b"P5\n4 2\n255\n".len()..].iter().all(|&b| b == 0));
    }

    #[test]
    fn uniform_round_trip() {
        let dir = tempdir().unwrap();
        let frames: Vec<Frame> = (0..3)
            .map(|i| Frame::from_fn(4, 4, i, |_, _| 0.25))
            .collect();
        let seq = FrameSequence::new(frames, 25).unwrap();
        write_sequence(&seq, dir.path()).unwrap();
        let back = read_sequence(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        assert!(back.frames.iter().all(|f| f
            .pixels()
            .iter()
            .all(|&v| (v - back.frames[0].get(0, 0)).abs() < 1e-6)));
    }

    #[test]
    fn write_read_write_is_byte_stable() {
        let dir1 = tempdir().unwrap();
        let dir2 = tempdir().unwrap();
        let frames: Vec<Frame> = (0..2)
            .map(|i| Frame::from_fn(7, 5, i, |x, y| ((x * 13 + y * 31 + i * 7) % 256) as f32 / 255.0))
            .collect();
        let seq = FrameSequence::new(frames, 25).unwrap();
        write_sequence(&seq, dir1.path()).unwrap();
        let back = read_sequence(dir1.path()).unwrap();
        write_sequence(&back, dir2.path()).unwrap();
        for i in 0..2 {
            let a = std::fs::read(dir1.path().join(frame_name(i))).unwrap();
            let b = std::fs::read(dir2.path().join(frame_name(i))).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn missing_frame_is_gap_error() {
        let dir = tempdir().unwrap();
        let seq = FrameSequence::new(vec![Frame::new(4, 4, 0), Frame::new(4, 4, 1)], 25).unwrap();
        write_sequence(&seq, dir.path()).unwrap();
        std::fs::remove_file(dir.path().join(frame_name(1))).unwrap();
        match read_sequence(dir.path()) {
            Err(Error::FrameGap(1)) => {}
            other => panic!("expected FrameGap(1), got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let dir = tempdir().unwrap();
        write_sequence(
            &FrameSequence::new(vec![Frame::new(4, 4, 0)], 25).unwrap(),
            dir.path(),
        )
        .unwrap();
        // Add a frame with different dimensions and claim two frames.
        let mut f5 = Frame::new(5, 5, 0);
        f5.index = 1;
        std::fs::write(dir.path().join(frame_name(1)), encode_pgm(&f5)).unwrap();
        std::fs::write(dir.path().join("meta.txt"), "fps=25\ncount=2\n").unwrap();
        assert!(matches!(read_sequence(dir.path()), Err(Error::Dimension(_))));
    }

    #[test]
    fn ground_truth_csv_round_trip() {
        let gt = GroundTruth {
            interactions: vec![GtInteraction {
                kind: InteractionKind::Pickup,
                frame: 30,
                point: Point::new(135.0, 135.0),
            }],
            ..Default::default()
        };
        let text = gt.to_csv();
        assert!(text.starts_with("kind,frame,x,y\n"));
        let back = GroundTruth::from_csv(&text).unwrap();
        assert_eq!(back.interactions, gt.interactions);
    }
}
