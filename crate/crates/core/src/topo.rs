//! Shared mesh topology: triangle list, per-vertex UVs, region labels,
//! landmark schema and the left/right symmetry correspondence.
//!
//! All meshes in a pipeline share one [`Topology`]; vertex i means the
//! same semantic location on every subject, which is what makes
//! vertex-wise statistics valid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of landmarks in the fixed 68-point schema.
pub const LANDMARK_COUNT: usize = 68;

/// Landmark indices with weight 50 in the landmark loss: eyes, nose, mouth.
/// Jaw (0-16) and brows (17-26) keep weight 1.
pub fn landmark_is_keypoint(id: usize) -> bool {
    (27..68).contains(&id)
}

/// Which side of the face a landmark id belongs to in the 68-point
/// schema: -1 = subject areas at negative template x, +1 positive, 0 on
/// the center line. Used to drop occluded-side landmarks per pose group.
pub fn landmark_side(id: usize) -> i8 {
    match id {
        0..=7 => -1,             // jaw, -x arc
        9..=16 => 1,             // jaw, +x arc
        17..=21 => -1,           // brow
        22..=26 => 1,            // brow
        31..=32 => -1,           // nostril
        34..=35 => 1,            // nostril
        36..=41 => -1,           // eye
        42..=47 => 1,            // eye
        48..=50 | 58..=61 | 67 => -1, // mouth, -x half
        52..=56 | 63..=65 => 1,  // mouth, +x half
        _ => 0,                  // 8 chin, 27-30 nose bridge, 33 tip, lip centers
    }
}

/// The three vertex regions used for geometry replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReplaceRegion {
    Eyes,
    Nose,
    Mouth,
}

impl ReplaceRegion {
    pub const ALL: [ReplaceRegion; 3] = [ReplaceRegion::Eyes, ReplaceRegion::Nose, ReplaceRegion::Mouth];

    pub fn name(&self) -> &'static str {
        match self {
            ReplaceRegion::Eyes => "eyes",
            ReplaceRegion::Nose => "nose",
            ReplaceRegion::Mouth => "mouth",
        }
    }
}

/// Number of reflectance sub-regions partitioning the face texels.
pub const SUB_REGION_COUNT: usize = 8;

/// Per-vertex region labelling.
///
/// `face` (A), `back_head` (B) and `intermediate` (C) may overlap only
/// as A ∩ C, which is the stitching band D. Every vertex belongs to at
/// least one of the three. `sub_region` assigns each face vertex one of
/// the 8 reflectance zones; `replace` marks the eyes/nose/mouth patches.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionLabels {
    pub face: Vec<bool>,
    pub back_head: Vec<bool>,
    pub intermediate: Vec<bool>,
    pub sub_region: Vec<Option<u8>>,
    pub replace: Vec<Option<ReplaceRegion>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Topology {
    /// Triangle vertex-index triples.
    pub faces: Vec<[u32; 3]>,
    /// Per-vertex UV in [0,1]^2; the atlas is injective (each texel is
    /// covered by at most one triangle).
    pub uv: Vec<[f64; 2]>,
    pub regions: RegionLabels,
    /// Ordered vertex indices of the 68-point landmark schema.
    pub landmarks: Vec<u32>,
    /// Vertex permutation pairing left/right vertices; an involution.
    pub symmetry: Vec<u32>,
}

impl Topology {
    pub fn vertex_count(&self) -> usize {
        self.uv.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Vertex indices of the D region (A ∩ C).
    pub fn region_d(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&i| self.regions.face[i] && self.regions.intermediate[i])
            .collect()
    }

    pub fn region_indices(&self, mask: &[bool]) -> Vec<usize> {
        mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    /// Vertex indices belonging to a replacement region.
    pub fn replace_indices(&self, region: ReplaceRegion) -> Vec<usize> {
        self.regions
            .replace
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == Some(region))
            .map(|(i, _)| i)
            .collect()
    }

    /// Validates the structural invariants. Called by constructors and
    /// by loaders before a topology is trusted.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertex_count();
        if self.regions.face.len() != nv
            || self.regions.back_head.len() != nv
            || self.regions.intermediate.len() != nv
            || self.regions.sub_region.len() != nv
            || self.regions.replace.len() != nv
            || self.symmetry.len() != nv
        {
            return Err(Error::DimMismatch("topology field lengths".into()));
        }
        for f in &self.faces {
            for &i in f {
                if i as usize >= nv {
                    return Err(Error::MeshFormat {
                        path: String::new(),
                        reason: format!("face index {} out of range", i),
                    });
                }
            }
        }
        for (i, &j) in self.symmetry.iter().enumerate() {
            if j as usize >= nv || self.symmetry[j as usize] as usize != i {
                return Err(Error::MeshFormat {
                    path: String::new(),
                    reason: format!("symmetry map is not an involution at vertex {}", i),
                });
            }
        }
        if self.landmarks.len() != LANDMARK_COUNT {
            return Err(Error::DimMismatch(format!(
                "expected {} landmarks, got {}",
                LANDMARK_COUNT,
                self.landmarks.len()
            )));
        }
        let mut seen = vec![false; nv];
        for &l in &self.landmarks {
            if l as usize >= nv || seen[l as usize] {
                return Err(Error::MeshFormat {
                    path: String::new(),
                    reason: "landmark indices must be distinct vertices".into(),
                });
            }
            seen[l as usize] = true;
        }
        for sub in self.regions.sub_region.iter().flatten() {
            if *sub as usize >= SUB_REGION_COUNT {
                return Err(Error::BadRegionLabel(*sub));
            }
        }
        if !self.regions.face.iter().any(|&b| b) {
            return Err(Error::EmptyRegion("face (A)"));
        }
        if !self.regions.back_head.iter().any(|&b| b) {
            return Err(Error::EmptyRegion("back head (B)"));
        }
        if !self.regions.intermediate.iter().any(|&b| b) {
            return Err(Error::EmptyRegion("intermediate (C)"));
        }
        if self.region_d().is_empty() {
            return Err(Error::EmptyRegion("overlap (D)"));
        }
        // A and C overlap only in D by definition; B stays disjoint.
        for i in 0..nv {
            if self.regions.back_head[i] && (self.regions.face[i] || self.regions.intermediate[i]) {
                return Err(Error::MeshFormat {
                    path: String::new(),
                    reason: format!("vertex {} labelled B and A/C", i),
                });
            }
            if !(self.regions.face[i] || self.regions.back_head[i] || self.regions.intermediate[i]) {
                return Err(Error::MeshFormat {
                    path: String::new(),
                    reason: format!("vertex {} has no A/B/C label", i),
                });
            }
        }
        Ok(())
    }

    pub fn into_shared(self) -> Arc<Topology> {
        Arc::new(self)
    }
}

/// Per-vertex and per-texel index sets derived from the topology labels.
#[derive(Debug, Clone)]
pub struct RegionMasks {
    /// Vertex sets of the replacement regions, in [eyes, nose, mouth] order.
    pub replace_vertices: [Vec<usize>; 3],
    /// Texel index sets (row-major, y * res + x) of the 8 reflectance
    /// sub-regions at 512.
    pub sub_texels_512: Vec<Vec<usize>>,
    /// Sub-region texel sets at 2048: the 4x4 block expansion of the 512
    /// sets, so counts are exactly 16x.
    pub sub_texels_2048: Vec<Vec<usize>>,
    /// Vertex index sets of A, B, C, D.
    pub face_a: Vec<usize>,
    pub back_b: Vec<usize>,
    pub mid_c: Vec<usize>,
    pub overlap_d: Vec<usize>,
}

/// Expands a 512-resolution texel index to its 16 texels at 2048.
pub fn expand_texel_4x(idx512: usize) -> [usize; 16] {
    let x = idx512 % 512;
    let y = idx512 / 512;
    let mut out = [0usize; 16];
    let mut k = 0;
    for dy in 0..4 {
        for dx in 0..4 {
            out[k] = (y * 4 + dy) * 2048 + (x * 4 + dx);
            k += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landmark_sides_are_mirrored() {
        // Jaw arc pairs (i, 16-i) sit on opposite sides.
        for i in 0..8 {
            assert_eq!(landmark_side(i), -landmark_side(16 - i));
        }
        assert_eq!(landmark_side(8), 0);
        // Eye pairs.
        for (l, r) in (36..42).zip(42..48) {
            assert_eq!(landmark_side(l), -landmark_side(r));
        }
        // Mouth mirror pairs.
        for (l, r) in [(48, 54), (49, 53), (50, 52), (59, 55), (58, 56), (60, 64), (61, 63), (67, 65)] {
            assert_eq!(landmark_side(l), -landmark_side(r));
            assert_ne!(landmark_side(l), 0);
        }
        assert_eq!(landmark_side(30), 0);
        assert_eq!(landmark_side(51), 0);
    }

    #[test]
    fn keypoint_weights_cover_eye_nose_mouth() {
        assert!(!landmark_is_keypoint(0));
        assert!(!landmark_is_keypoint(20));
        assert!(landmark_is_keypoint(30));
        assert!(landmark_is_keypoint(40));
        assert!(landmark_is_keypoint(60));
    }

    #[test]
    fn texel_expansion_is_16_distinct() {
        let e = expand_texel_4x(5 * 512 + 7);
        let mut s: Vec<usize> = e.to_vec();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 16);
        assert!(e.iter().all(|&i| i < 2048 * 2048));
    }
}
