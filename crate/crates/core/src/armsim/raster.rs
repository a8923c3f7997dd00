//! Synthetic monocular camera: projection, rasterization and PGM export.

use std::io::{Read, Write};

use super::kinematics::{ArmState, Point2};
use crate::error::{Error, Result};

pub const BACKGROUND: f64 = 1.0;
pub const INK: f64 = 0.1;

/// Grayscale image with intensities in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl Frame {
    pub fn blank(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            pixels: vec![BACKGROUND; height * width],
        }
    }

    pub fn from_pixels(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != height * width || height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "{} pixels for a {height}x{width} frame",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Bounds("frame intensities must lie in [0, 1]".into()));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub(crate) fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    /// Binary PGM (P5) with 16-bit big-endian samples.
    pub fn write_pgm(&self, w: &mut impl Write) -> Result<()> {
        write!(w, "P5\n{} {}\n65535\n", self.width, self.height)?;
        for &p in &self.pixels {
            let v = (p * 65535.0).round() as u16;
            w.write_all(&v.to_be_bytes())?;
        }
        Ok(())
    }

    /// Reads P5 files with maxval up to 65535.
    pub fn read_pgm(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
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
            if start == pos {
                return Err(Error::Format("truncated PGM header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        if fields[0] != "P5" {
            return Err(Error::Format(format!("unsupported PGM magic {:?}", fields[0])));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad PGM header field {s:?}")))
        };
        let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Format(format!("bad PGM maxval {maxval}")));
        }
        let bps = if maxval < 256 { 1 } else { 2 };
        let body = bytes.get(pos..).unwrap_or_default();
        if body.len() < width * height * bps {
            return Err(Error::Format("truncated PGM raster".into()));
        }
        let pixels = (0..width * height)
            .map(|i| {
                let v = if bps == 1 {
                    body[i] as f64
                } else {
                    u16::from_be_bytes([body[2 * i], body[2 * i + 1]]) as f64
                };
                (v / maxval as f64).min(1.0)
            })
            .collect();
        Frame::from_pixels(height, width, pixels)
    }
}

/// Maps the unit-square workspace onto an `H × W` image: pixel centers at
/// integer coordinates, row increasing downward, column rightward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub height: usize,
    pub width: usize,
}

impl Camera {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height < 5 || width < 5 {
            return Err(Error::Config(format!(
                "image must be at least 5x5, got {height}x{width}"
            )));
        }
        Ok(Self { height, width })
    }

    pub fn in_workspace(p: Point2) -> bool {
        (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)
    }

    /// Continuous projection (row, col), defined everywhere.
    pub fn project(&self, p: Point2) -> (f64, f64) {
        (
            (1.0 - p.y) * (self.height - 1) as f64,
            p.x * (self.width - 1) as f64,
        )
    }

    pub fn unproject(&self, row: f64, col: f64) -> Point2 {
        Point2::new(
            col / (self.width - 1) as f64,
            1.0 - row / (self.height - 1) as f64,
        )
    }

    /// Nearest pixel of a workspace point.
    pub fn workspace_to_pixel(&self, p: Point2) -> Result<(usize, usize)> {
        if !Self::in_workspace(p) {
            return Err(Error::Bounds(format!(
                "point ({}, {}) outside the unit workspace",
                p.x, p.y
            )));
        }
        let (r, c) = self.project(p);
        Ok((r.round() as usize, c.round() as usize))
    }

    pub fn pixel_to_workspace(&self, row: usize, col: usize) -> Point2 {
        self.unproject(row as f64, col as f64)
    }

    /// Workspace units per pixel along each image axis.
    pub fn pixel_pitch(&self) -> (f64, f64) {
        (
            1.0 / (self.height - 1) as f64,
            1.0 / (self.width - 1) as f64,
        )
    }
}

/// Stroke geometry of rendered scenes, in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderStyle {
    pub link_half_width: f64,
    pub effector_radius: f64,
    pub hand_radius: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            link_half_width: 1.0,
            effector_radius: 3.5,
            hand_radius: 4.5,
        }
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 > 0.0 {
        ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    dx.hypot(dy)
}

fn fill_disc(frame: &mut Frame, center: (f64, f64), radius: f64) {
    let (h, w) = (frame.height as isize, frame.width as isize);
    let r0 = ((center.0 - radius).floor() as isize).max(0);
    let r1 = ((center.0 + radius).ceil() as isize).min(h - 1);
    let c0 = ((center.1 - radius).floor() as isize).max(0);
    let c1 = ((center.1 + radius).ceil() as isize).min(w - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let (dr, dc) = (r as f64 - center.0, c as f64 - center.1);
            if dr * dr + dc * dc <= radius * radius {
                frame.pixels[(r * w + c) as usize] = INK;
            }
        }
    }
}

fn stroke_segment(frame: &mut Frame, a: (f64, f64), b: (f64, f64), half_width: f64) {
    let (h, w) = (frame.height as isize, frame.width as isize);
    let r0 = ((a.0.min(b.0) - half_width).floor() as isize).max(0);
    let r1 = ((a.0.max(b.0) + half_width).ceil() as isize).min(h - 1);
    let c0 = ((a.1.min(b.1) - half_width).floor() as isize).max(0);
    let c1 = ((a.1.max(b.1) + half_width).ceil() as isize).min(w - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            if segment_distance((r as f64, c as f64), a, b) <= half_width {
                frame.pixels[(r * w + c) as usize] = INK;
            }
        }
    }
}

/// Arm links as thick dark segments and the end effector as a filled disc.
pub fn render(camera: &Camera, style: &RenderStyle, state: &ArmState) -> Frame {
    let mut frame = Frame::blank(camera.height, camera.width);
    let pts: Vec<_> = state
        .chain_points()
        .into_iter()
        .map(|p| camera.project(p))
        .collect();
    for pair in pts.windows(2) {
        stroke_segment(&mut frame, pair[0], pair[1], style.link_half_width);
    }
    fill_disc(&mut frame, pts[pts.len() - 1], style.effector_radius);
    frame
}

/// A hand marker: a single filled disc at `point`.
pub fn render_hand(camera: &Camera, style: &RenderStyle, point: Point2) -> Result<Frame> {
    if !Camera::in_workspace(point) {
        return Err(Error::Bounds(format!(
            "hand position ({}, {}) outside the unit workspace",
            point.x, point.y
        )));
    }
    let mut frame = Frame::blank(camera.height, camera.width);
    fill_disc(&mut frame, camera.project(point), style.hand_radius);
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> Camera {
        Camera::new(64, 64).unwrap()
    }

    #[test]
    fn corner_and_center_mapping() {
        let c = cam();
        assert_eq!(c.workspace_to_pixel(Point2::new(0.0, 0.0)).unwrap(), (63, 0));
        assert_eq!(c.workspace_to_pixel(Point2::new(1.0, 1.0)).unwrap(), (0, 63));
        let (r, col) = c.workspace_to_pixel(Point2::new(0.5, 0.5)).unwrap();
        assert!(r.abs_diff(32) <= 1 && col.abs_diff(32) <= 1);
        assert!(c.workspace_to_pixel(Point2::new(1.01, 0.5)).is_err());
    }

    #[test]
    fn pixel_round_trip() {
        let c = cam();
        for r in 0..64 {
            for col in 0..64 {
                let p = c.pixel_to_workspace(r, col);
                assert_eq!(c.workspace_to_pixel(p).unwrap(), (r, col));
            }
        }
    }

    #[test]
    fn straight_arm_draws_center_band() {
        let c = cam();
        let arm = ArmState::new(vec![0.0; 3], vec![0.4, 0.3, 0.2], Point2::new(0.5, 0.5)).unwrap();
        let f = render(&c, &RenderStyle::default(), &arm);
        for col in 32..64 {
            assert_eq!(f.get(31, col), INK);
            assert_eq!(f.get(32, col), INK);
            assert_eq!(f.get(29, col), BACKGROUND);
            assert_eq!(f.get(34, col), BACKGROUND);
        }
        for col in 0..30 {
            assert_eq!(f.get(31, col), BACKGROUND);
        }
    }

    #[test]
    fn hand_out_of_bounds_is_rejected() {
        assert!(matches!(
            render_hand(&cam(), &RenderStyle::default(), Point2::new(-0.1, 0.5)),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn pgm_round_trip() {
        let f = render_hand(&cam(), &RenderStyle::default(), Point2::new(0.2, 0.7)).unwrap();
        let mut buf = Vec::new();
        f.write_pgm(&mut buf).unwrap();
        let back = Frame::read_pgm(&mut &buf[..]).unwrap();
        assert_eq!(back.height(), 64);
        assert!(back
            .pixels()
            .iter()
            .zip(f.pixels())
            .all(|(a, b)| (a - b).abs() < 1e-5));
    }
}
