//! UV-space maps (albedo, normals), their PNG IO, the texel-to-triangle
//! atlas, and region mask derivation.

use std::path::Path;

use image::{ImageBuffer, Rgb};
use nalgebra::Vector3;

use crate::topo::{expand_texel_4x, RegionMasks, ReplaceRegion, Topology, SUB_REGION_COUNT};
use crate::{Error, Result};

/// A square UV-space raster with 3 channels and a per-texel validity mask.
#[derive(Debug, Clone)]
pub struct UVMap {
    pub res: u32,
    /// Row-major, 3 channels interleaved.
    pub data: Vec<f32>,
    pub valid: Vec<bool>,
}

impl UVMap {
    pub fn new(res: u32) -> Self {
        let n = (res * res) as usize;
        UVMap {
            res,
            data: vec![0.0; n * 3],
            valid: vec![false; n],
        }
    }

    pub fn filled(res: u32, value: [f32; 3]) -> Self {
        let n = (res * res) as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&value);
        }
        UVMap {
            res,
            data,
            valid: vec![true; n],
        }
    }

    #[inline]
    pub fn texel_count(&self) -> usize {
        (self.res * self.res) as usize
    }

    #[inline]
    pub fn get(&self, idx: usize) -> [f32; 3] {
        [self.data[3 * idx], self.data[3 * idx + 1], self.data[3 * idx + 2]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: [f32; 3]) {
        self.data[3 * idx] = v[0];
        self.data[3 * idx + 1] = v[1];
        self.data[3 * idx + 2] = v[2];
        self.valid[idx] = true;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Bilinear sample at UV coordinates; ignores validity.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> [f32; 3] {
        let r = self.res as f64;
        let x = (u * r - 0.5).clamp(0.0, r - 1.0);
        let y = (v * r - 0.5).clamp(0.0, r - 1.0);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.res as usize - 1);
        let y1 = (y0 + 1).min(self.res as usize - 1);
        let fx = (x - x0 as f64) as f32;
        let fy = (y - y0 as f64) as f32;
        let idx = |xx: usize, yy: usize| yy * self.res as usize + xx;
        let mut out = [0.0f32; 3];
        for c in 0..3 {
            let v00 = self.data[3 * idx(x0, y0) + c];
            let v10 = self.data[3 * idx(x1, y0) + c];
            let v01 = self.data[3 * idx(x0, y1) + c];
            let v11 = self.data[3 * idx(x1, y1) + c];
            out[c] = v00 * (1.0 - fx) * (1.0 - fy)
                + v10 * fx * (1.0 - fy)
                + v01 * (1.0 - fx) * fy
                + v11 * fx * fy;
        }
        out
    }
}

/// Saves values in [0,1] as an 8-bit RGB PNG. Invalid texels write black.
pub fn save_color_png(map: &UVMap, path: &Path) -> Result<()> {
    let res = map.res;
    let img = ImageBuffer::from_fn(res, res, |x, y| {
        let idx = (y * res + x) as usize;
        if map.valid[idx] {
            let p = map.get(idx);
            Rgb([
                (p[0].clamp(0.0, 1.0) * 255.0).round() as u8,
                (p[1].clamp(0.0, 1.0) * 255.0).round() as u8,
                (p[2].clamp(0.0, 1.0) * 255.0).round() as u8,
            ])
        } else {
            Rgb([0, 0, 0])
        }
    });
    img.save(path)?;
    Ok(())
}

pub fn load_color_png(path: &Path) -> Result<UVMap> {
    let img = image::open(path)?.into_rgb8();
    if img.width() != img.height() {
        return Err(Error::DimMismatch(format!(
            "uv map must be square, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let res = img.width();
    let mut map = UVMap::new(res);
    for (x, y, p) in img.enumerate_pixels() {
        let idx = (y * res + x) as usize;
        map.set(
            idx,
            [
                p[0] as f32 / 255.0,
                p[1] as f32 / 255.0,
                p[2] as f32 / 255.0,
            ],
        );
    }
    Ok(map)
}

/// Saves unit vectors as `0.5 n + 0.5` in 8-bit RGB.
pub fn save_normal_png(map: &UVMap, path: &Path) -> Result<()> {
    let res = map.res;
    let img = ImageBuffer::from_fn(res, res, |x, y| {
        let idx = (y * res + x) as usize;
        if map.valid[idx] {
            let p = map.get(idx);
            Rgb([
                ((p[0] * 0.5 + 0.5).clamp(0.0, 1.0) * 255.0).round() as u8,
                ((p[1] * 0.5 + 0.5).clamp(0.0, 1.0) * 255.0).round() as u8,
                ((p[2] * 0.5 + 0.5).clamp(0.0, 1.0) * 255.0).round() as u8,
            ])
        } else {
            Rgb([128, 128, 255])
        }
    });
    img.save(path)?;
    Ok(())
}

pub fn load_normal_png(path: &Path) -> Result<UVMap> {
    let mut map = load_color_png(path)?;
    for idx in 0..map.texel_count() {
        let p = map.get(idx);
        let mut n = Vector3::new(
            p[0] as f64 * 2.0 - 1.0,
            p[1] as f64 * 2.0 - 1.0,
            p[2] as f64 * 2.0 - 1.0,
        );
        let len = n.norm();
        if len > 1e-6 {
            n /= len;
        } else {
            n = Vector3::new(0.0, 0.0, 1.0);
        }
        map.set(idx, [n.x as f32, n.y as f32, n.z as f32]);
    }
    Ok(map)
}

/// Texel-to-triangle assignment of the UV atlas at one resolution.
///
/// `tri[idx]` is the covering triangle (or -1) and `bary[idx]` the
/// barycentric coordinates of the texel center inside it.
#[derive(Debug, Clone)]
pub struct UvAtlas {
    pub res: u32,
    pub tri: Vec<i32>,
    pub bary: Vec<[f64; 3]>,
    /// Texels claimed strictly inside more than one triangle; a valid
    /// atlas keeps this at zero.
    pub overlaps: usize,
}

impl UvAtlas {
    pub fn build(topo: &Topology, res: u32) -> Self {
        let n = (res * res) as usize;
        let mut tri = vec![-1i32; n];
        let mut bary = vec![[0.0f64; 3]; n];
        let mut overlaps = 0usize;
        let rf = res as f64;
        for (t, f) in topo.faces.iter().enumerate() {
            let a = topo.uv[f[0] as usize];
            let b = topo.uv[f[1] as usize];
            let c = topo.uv[f[2] as usize];
            let (ax, ay) = (a[0] * rf, a[1] * rf);
            let (bx, by) = (b[0] * rf, b[1] * rf);
            let (cx, cy) = (c[0] * rf, c[1] * rf);
            let x_lo = ax.min(bx).min(cx).floor().max(0.0) as usize;
            let x_hi = (ax.max(bx).max(cx).ceil() as usize).min(res as usize - 1);
            let y_lo = ay.min(by).min(cy).floor().max(0.0) as usize;
            let y_hi = (ay.max(by).max(cy).ceil() as usize).min(res as usize - 1);
            let det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
            if det.abs() < 1e-12 {
                continue;
            }
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    let px = x as f64 + 0.5;
                    let py = y as f64 + 0.5;
                    let l1 = ((px - ax) * (cy - ay) - (py - ay) * (cx - ax)) / det;
                    let l2 = ((bx - ax) * (py - ay) - (by - ay) * (px - ax)) / det;
                    let l0 = 1.0 - l1 - l2;
                    let eps = 1e-10;
                    if l0 >= -eps && l1 >= -eps && l2 >= -eps {
                        let idx = y * res as usize + x;
                        if tri[idx] < 0 {
                            tri[idx] = t as i32;
                            bary[idx] = [l0, l1, l2];
                        } else if l0 > eps && l1 > eps && l2 > eps {
                            overlaps += 1;
                        }
                    }
                }
            }
        }
        UvAtlas {
            res,
            tri,
            bary,
            overlaps,
        }
    }

    /// Interpolates per-vertex vectors at a covered texel.
    pub fn interp(&self, topo: &Topology, values: &[Vector3<f64>], idx: usize) -> Option<Vector3<f64>> {
        let t = self.tri[idx];
        if t < 0 {
            return None;
        }
        let f = topo.faces[t as usize];
        let b = self.bary[idx];
        Some(values[f[0] as usize] * b[0] + values[f[1] as usize] * b[1] + values[f[2] as usize] * b[2])
    }

    /// Vertex with the largest barycentric weight at a covered texel.
    pub fn nearest_vertex(&self, topo: &Topology, idx: usize) -> Option<usize> {
        let t = self.tri[idx];
        if t < 0 {
            return None;
        }
        let f = topo.faces[t as usize];
        let b = self.bary[idx];
        let mut best = 0;
        if b[1] > b[best] {
            best = 1;
        }
        if b[2] > b[best] {
            best = 2;
        }
        Some(f[best] as usize)
    }
}

/// Derives vertex and texel index sets for every named region family:
/// the A/B/C/D vertex sets, the three replacement regions, and the 8
/// reflectance sub-regions as texel sets at 512 and 2048 (the 2048 sets
/// are the exact 4x4 block expansion of the 512 sets).
pub fn derive_region_masks(topo: &Topology, atlas512: &UvAtlas) -> Result<RegionMasks> {
    topo.validate()?;
    let mut replace_vertices: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, r) in topo.regions.replace.iter().enumerate() {
        if let Some(r) = r {
            let slot = match r {
                ReplaceRegion::Eyes => 0,
                ReplaceRegion::Nose => 1,
                ReplaceRegion::Mouth => 2,
            };
            replace_vertices[slot].push(i);
        }
    }
    for (k, set) in replace_vertices.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::EmptyRegion(ReplaceRegion::ALL[k].name()));
        }
    }

    let mut sub_texels_512: Vec<Vec<usize>> = vec![Vec::new(); SUB_REGION_COUNT];
    for idx in 0..atlas512.tri.len() {
        if let Some(v) = atlas512.nearest_vertex(topo, idx) {
            if topo.regions.face[v] {
                let label = topo.regions.sub_region[v].ok_or(Error::EmptyRegion("sub-region label"))?;
                sub_texels_512[label as usize].push(idx);
            }
        }
    }
    for (k, set) in sub_texels_512.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::Corpus(format!("reflectance sub-region {} has no texels", k)));
        }
    }
    let sub_texels_2048 = sub_texels_512
        .iter()
        .map(|set| set.iter().flat_map(|&i| expand_texel_4x(i)).collect())
        .collect();

    let face_a = topo.region_indices(&topo.regions.face);
    let back_b = topo.region_indices(&topo.regions.back_head);
    let mid_c = topo.region_indices(&topo.regions.intermediate);
    let overlap_d = topo.region_d();

    Ok(RegionMasks {
        replace_vertices,
        sub_texels_512,
        sub_texels_2048,
        face_a,
        back_b,
        mid_c,
        overlap_d,
    })
}
