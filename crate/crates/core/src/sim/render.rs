use std::io::Cursor;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};

use super::view::{Camera, NEAR_PLANE};
use super::{Pose, Scene};

pub const BACKGROUND: [u8; 3] = [136, 170, 204];

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame dimensions must be positive, got {width}x{height}")]
    Empty { width: u32, height: u32 },
    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    Length { expected: usize, actual: usize },
    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error("PPM: {0}")]
    Ppm(String),
}

/// Row-major RGB frame.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frame")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("digest", &self.digest())
            .finish()
    }
}

impl Frame {
    pub fn filled(width: u32, height: u32, color: [u8; 3]) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::Empty { width, height });
        }
        let pixels = color
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Ok(Self { width, height, pixels })
    }

    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::Empty { width, height });
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(FrameError::Length {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, color: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&color);
    }

    /// Lowercase hex SHA-256 over the dimensions and pixel bytes.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.width.to_le_bytes());
        h.update(self.height.to_le_bytes());
        h.update(&self.pixels);
        hex::encode(h.finalize())
    }

    pub fn to_png(&self) -> Result<Vec<u8>, FrameError> {
        let mut out = Vec::new();
        PngEncoder::new(Cursor::new(&mut out)).write_image(
            &self.pixels,
            self.width,
            self.height,
            ExtendedColorType::Rgb8,
        )?;
        Ok(out)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self, FrameError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.to_rgb8();
        let (w, h) = img.dimensions();
        Self::from_raw(w, h, img.into_raw())
    }

    /// Binary PPM (P6, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self, FrameError> {
        let bad = |m: &str| FrameError::Ppm(m.to_string());
        let mut fields = Vec::with_capacity(4);
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(bad("only P6 with maxval 255 is supported"));
        }
        let w: u32 = fields[1].parse().map_err(|_| bad("bad width"))?;
        let h: u32 = fields[2].parse().map_err(|_| bad("bad height"))?;
        Self::from_raw(w, h, bytes[pos + 1..].to_vec())
    }
}

struct Face {
    normal: Vec3,
    corners: [Vec3; 4],
    shade: f64,
}

fn box_faces(b: &Aabb) -> [Face; 6] {
    let (lo, hi) = (b.min, b.max);
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    [
        Face {
            normal: v(-1.0, 0.0, 0.0),
            corners: [
                v(lo.x, lo.y, lo.z),
                v(lo.x, hi.y, lo.z),
                v(lo.x, hi.y, hi.z),
                v(lo.x, lo.y, hi.z),
            ],
            shade: 0.72,
        },
        Face {
            normal: v(1.0, 0.0, 0.0),
            corners: [
                v(hi.x, lo.y, lo.z),
                v(hi.x, lo.y, hi.z),
                v(hi.x, hi.y, hi.z),
                v(hi.x, hi.y, lo.z),
            ],
            shade: 0.84,
        },
        Face {
            normal: v(0.0, -1.0, 0.0),
            corners: [
                v(lo.x, lo.y, lo.z),
                v(lo.x, lo.y, hi.z),
                v(hi.x, lo.y, hi.z),
                v(hi.x, lo.y, lo.z),
            ],
            shade: 0.45,
        },
        Face {
            normal: v(0.0, 1.0, 0.0),
            corners: [
                v(lo.x, hi.y, lo.z),
                v(hi.x, hi.y, lo.z),
                v(hi.x, hi.y, hi.z),
                v(lo.x, hi.y, hi.z),
            ],
            shade: 1.0,
        },
        Face {
            normal: v(0.0, 0.0, -1.0),
            corners: [
                v(lo.x, lo.y, lo.z),
                v(hi.x, lo.y, lo.z),
                v(hi.x, hi.y, lo.z),
                v(lo.x, hi.y, lo.z),
            ],
            shade: 0.92,
        },
        Face {
            normal: v(0.0, 0.0, 1.0),
            corners: [
                v(lo.x, lo.y, hi.z),
                v(lo.x, hi.y, hi.z),
                v(hi.x, hi.y, hi.z),
                v(hi.x, lo.y, hi.z),
            ],
            shade: 0.62,
        },
    ]
}

fn shade(color: [u8; 3], factor: f64) -> [u8; 3] {
    color.map(|c| (f64::from(c) * factor).round().clamp(0.0, 255.0) as u8)
}

/// Clips a camera-space polygon against the near plane.
fn clip_near(poly: &[Vec3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let a_in = a.z >= NEAR_PLANE;
        let b_in = b.z >= NEAR_PLANE;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (NEAR_PLANE - a.z) / (b.z - a.z);
            out.push(a.lerp(b, t));
        }
    }
    out
}

/// Fills a convex screen-space polygon, sampling at pixel centers.
fn fill_convex(frame: &mut Frame, pts: &[(f64, f64)], color: [u8; 3]) {
    let (w, h) = (frame.width as i64, frame.height as i64);
    let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let y0 = ((min_y - 0.5).ceil() as i64).max(0);
    let y1 = ((max_y - 0.5).ceil() as i64).min(h);
    for y in y0..y1 {
        let yc = y as f64 + 0.5;
        let mut xl = f64::INFINITY;
        let mut xr = f64::NEG_INFINITY;
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            if (a.1 <= yc && b.1 > yc) || (b.1 <= yc && a.1 > yc) {
                let x = a.0 + (yc - a.1) * (b.0 - a.0) / (b.1 - a.1);
                xl = xl.min(x);
                xr = xr.max(x);
            }
        }
        if xl >= xr {
            continue;
        }
        let x0 = ((xl - 0.5).ceil() as i64).clamp(0, w);
        let x1 = ((xr - 0.5).ceil() as i64).clamp(0, w);
        let row = (y * w) as usize * 3;
        for px in frame.pixels[row + x0 as usize * 3..row + x1 as usize * 3].chunks_exact_mut(3) {
            px.copy_from_slice(&color);
        }
    }
}

/// Renders the first-person view from `pose`: 90-degree horizontal FOV, boxes drawn far
/// to near by centroid distance with flat per-face shading over a constant background.
pub fn render(scene: &Scene, pose: &Pose, width: u32, height: u32) -> Frame {
    let mut frame = Frame::filled(width.max(1), height.max(1), BACKGROUND).expect("positive dimensions");
    let cam = Camera::from_pose(pose);
    let focal = f64::from(frame.width) / 2.0;
    let (cx, cy) = (f64::from(frame.width) / 2.0, f64::from(frame.height) / 2.0);

    let mut order: Vec<_> = scene
        .objects()
        .iter()
        .map(|o| ((o.aabb.centroid() - cam.eye).length(), o))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));

    for (_, obj) in order {
        for face in box_faces(&obj.aabb) {
            let center = face.corners[0].lerp(face.corners[2], 0.5);
            if (cam.eye - center).dot(face.normal) <= 0.0 {
                continue;
            }
            let local: Vec<Vec3> = face.corners.iter().map(|&c| cam.to_camera(c)).collect();
            let clipped = clip_near(&local);
            if clipped.len() < 3 {
                continue;
            }
            let screen: Vec<(f64, f64)> = clipped
                .iter()
                .map(|p| (cx + focal * p.x / p.z, cy - focal * p.y / p.z))
                .collect();
            fill_convex(&mut frame, &screen, shade(obj.color, face.shade));
        }
    }
    frame
}
