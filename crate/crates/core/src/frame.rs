//! RGB-D capture frames and their on-disk layout.
//!
//! A frame directory holds `NNNN.rgb.png` (8-bit RGB), `NNNN.depth.png`
//! (16-bit grayscale, millimeters, 0 = invalid), `NNNN.landmarks.json`
//! and a shared `intrinsics.json`.

use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma, Rgb};
use serde::{Deserialize, Serialize};

use crate::camera::Intrinsics;
use crate::topo::LANDMARK_COUNT;
use crate::{Error, Result};

pub const DEPTH_MAX_MM: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Landmark2d {
    pub id: u32,
    pub u: f64,
    pub v: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Landmark3d {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub valid: bool,
}

/// One RGB-D frame: color in [0,1], metric depth in millimeters
/// (0 marks invalid), pinhole intrinsics, and the 68 detected 2D
/// landmarks. 3D landmarks appear after lifting.
#[derive(Debug, Clone)]
pub struct RgbdFrame {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB, 3 channels interleaved.
    pub rgb: Vec<f32>,
    /// Row-major depth in mm; 0 = invalid.
    pub depth: Vec<f32>,
    pub intrinsics: Intrinsics,
    pub landmarks2d: Vec<Landmark2d>,
    pub landmarks3d: Option<Vec<Landmark3d>>,
}

impl RgbdFrame {
    pub fn new(width: u32, height: u32, intrinsics: Intrinsics) -> Self {
        let n = (width * height) as usize;
        RgbdFrame {
            width,
            height,
            rgb: vec![0.0; n * 3],
            depth: vec![0.0; n],
            intrinsics,
            landmarks2d: Vec::new(),
            landmarks3d: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = (self.width * self.height) as usize;
        if self.rgb.len() != n * 3 || self.depth.len() != n {
            return Err(Error::DimMismatch("frame buffer sizes".into()));
        }
        if self.landmarks2d.len() != LANDMARK_COUNT {
            return Err(Error::DimMismatch(format!(
                "expected {} landmarks, got {}",
                LANDMARK_COUNT,
                self.landmarks2d.len()
            )));
        }
        for d in &self.depth {
            if !(*d == 0.0 || (*d > 0.0 && (*d as f64) < DEPTH_MAX_MM)) {
                return Err(Error::NonFinite("depth value out of range"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn pixel_index(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn depth_at(&self, x: u32, y: u32) -> f32 {
        self.depth[self.pixel_index(x, y)]
    }

    /// Grayscale luminance buffer.
    pub fn luminance(&self) -> Vec<f32> {
        let n = (self.width * self.height) as usize;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(0.299 * self.rgb[3 * i] + 0.587 * self.rgb[3 * i + 1] + 0.114 * self.rgb[3 * i + 2]);
        }
        out
    }
}

fn rgb_path(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("{:04}.rgb.png", id))
}
fn depth_path(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("{:04}.depth.png", id))
}
fn landmarks_path(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("{:04}.landmarks.json", id))
}

pub fn save_intrinsics(intr: &Intrinsics, dir: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(intr)?;
    std::fs::write(dir.join("intrinsics.json"), text)?;
    Ok(())
}

pub fn load_intrinsics(dir: &Path) -> Result<Intrinsics> {
    let text = std::fs::read_to_string(dir.join("intrinsics.json"))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes the frame triple into `dir` under the given frame id.
pub fn save_frame(frame: &RgbdFrame, dir: &Path, id: usize) -> Result<()> {
    let (w, h) = (frame.width, frame.height);
    let rgb = ImageBuffer::from_fn(w, h, |x, y| {
        let i = frame.pixel_index(x, y);
        Rgb([
            (frame.rgb[3 * i].clamp(0.0, 1.0) * 255.0).round() as u8,
            (frame.rgb[3 * i + 1].clamp(0.0, 1.0) * 255.0).round() as u8,
            (frame.rgb[3 * i + 2].clamp(0.0, 1.0) * 255.0).round() as u8,
        ])
    });
    rgb.save(rgb_path(dir, id))?;
    let depth = ImageBuffer::from_fn(w, h, |x, y| {
        let d = frame.depth_at(x, y).round();
        Luma([d.clamp(0.0, 65535.0) as u16])
    });
    depth.save(depth_path(dir, id))?;
    let text = serde_json::to_string(&frame.landmarks2d)?;
    std::fs::write(landmarks_path(dir, id), text)?;
    Ok(())
}

/// Loads one frame by id from a capture directory.
pub fn load_frame(dir: &Path, id: usize) -> Result<RgbdFrame> {
    let intrinsics = load_intrinsics(dir)?;
    let rgb_img = image::open(rgb_path(dir, id))
        .map_err(|e| Error::Frame(id, format!("rgb: {}", e)))?
        .into_rgb8();
    let depth_img = image::open(depth_path(dir, id))
        .map_err(|e| Error::Frame(id, format!("depth: {}", e)))?
        .into_luma16();
    if rgb_img.dimensions() != depth_img.dimensions() {
        return Err(Error::Frame(id, "rgb and depth dimensions differ".into()));
    }
    let (w, h) = rgb_img.dimensions();
    let mut frame = RgbdFrame::new(w, h, intrinsics);
    for (x, y, p) in rgb_img.enumerate_pixels() {
        let i = frame.pixel_index(x, y);
        frame.rgb[3 * i] = p[0] as f32 / 255.0;
        frame.rgb[3 * i + 1] = p[1] as f32 / 255.0;
        frame.rgb[3 * i + 2] = p[2] as f32 / 255.0;
    }
    for (x, y, p) in depth_img.enumerate_pixels() {
        let i = ((y * w) + x) as usize;
        frame.depth[i] = p[0] as f32;
    }
    let text = std::fs::read_to_string(landmarks_path(dir, id))
        .map_err(|e| Error::Frame(id, format!("landmarks: {}", e)))?;
    frame.landmarks2d = serde_json::from_str(&text)?;
    frame.validate()?;
    Ok(frame)
}

/// Frame ids present in a capture directory, in ascending order.
pub fn list_frames(dir: &Path) -> Result<Vec<usize>> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_suffix(".rgb.png") {
            if let Ok(id) = stem.parse::<usize>() {
                ids.push(id);
            }
        }
    }
    ids.sort_unstable();
    Ok(ids)
}
