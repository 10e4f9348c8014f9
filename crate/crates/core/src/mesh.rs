//! Topology-aligned meshes and their text-format IO.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DVector, Vector3};

use crate::topo::Topology;
use crate::{Error, Result};

/// Vertex positions (millimeters) on a shared [`Topology`].
#[derive(Debug, Clone)]
pub struct AlignedMesh {
    pub topo: Arc<Topology>,
    pub positions: Vec<Vector3<f64>>,
}

impl AlignedMesh {
    pub fn new(topo: Arc<Topology>, positions: Vec<Vector3<f64>>) -> Result<Self> {
        if positions.len() != topo.vertex_count() {
            return Err(Error::TopologyMismatch {
                got: positions.len(),
                expected: topo.vertex_count(),
            });
        }
        if positions.iter().any(|p| !p.x.is_finite() || !p.y.is_finite() || !p.z.is_finite()) {
            return Err(Error::NonFinite("mesh vertex"));
        }
        Ok(AlignedMesh { topo, positions })
    }

    /// Flattens positions to a 3V vector (x0, y0, z0, x1, ...).
    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.positions.len() * 3);
        for (i, p) in self.positions.iter().enumerate() {
            v[3 * i] = p.x;
            v[3 * i + 1] = p.y;
            v[3 * i + 2] = p.z;
        }
        v
    }

    pub fn from_vector(topo: Arc<Topology>, v: &DVector<f64>) -> Result<Self> {
        if v.len() != topo.vertex_count() * 3 {
            return Err(Error::TopologyMismatch {
                got: v.len() / 3,
                expected: topo.vertex_count(),
            });
        }
        let positions = (0..topo.vertex_count())
            .map(|i| Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]))
            .collect();
        AlignedMesh::new(topo, positions)
    }

    /// Axis-aligned bounding box (min, max).
    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn centroid(&self) -> Vector3<f64> {
        let mut c = Vector3::zeros();
        for p in &self.positions {
            c += p;
        }
        c / self.positions.len() as f64
    }

    /// Positions of the 68 landmark vertices.
    pub fn landmark_positions(&self) -> Vec<Vector3<f64>> {
        self.topo.landmarks.iter().map(|&i| self.positions[i as usize]).collect()
    }

    /// Root-mean-square per-vertex distance to another mesh (mm).
    pub fn rms_distance(&self, other: &AlignedMesh) -> f64 {
        let n = self.positions.len();
        let ss: f64 = self
            .positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| (a - b).norm_squared())
            .sum();
        (ss / n as f64).sqrt()
    }
}

/// Writes a mesh in the ASCII polygon format (`v x y z`, `vt u v`,
/// `f i/i j/j k/k`, 1-based indices, millimeter units).
pub fn save_mesh(mesh: &AlignedMesh, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(mesh.positions.len() * 40);
    for p in &mesh.positions {
        writeln!(out, "v {:.6} {:.6} {:.6}", p.x, p.y, p.z).unwrap();
    }
    for uv in &mesh.topo.uv {
        writeln!(out, "vt {:.8} {:.8}", uv[0], uv[1]).unwrap();
    }
    for f in &mesh.topo.faces {
        writeln!(out, "f {}/{} {}/{} {}/{}", f[0] + 1, f[0] + 1, f[1] + 1, f[1] + 1, f[2] + 1, f[2] + 1).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Loads a mesh saved by [`save_mesh`], validating the vertex count
/// against the given topology.
pub fn load_mesh(topo: Arc<Topology>, path: &Path) -> Result<AlignedMesh> {
    let text = std::fs::read_to_string(path)?;
    let mut positions = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut p = [0.0f64; 3];
                for slot in &mut p {
                    *slot = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::MeshFormat {
                            path: path.display().to_string(),
                            reason: format!("bad vertex record at line {}", ln + 1),
                        })?;
                }
                positions.push(Vector3::new(p[0], p[1], p[2]));
            }
            Some("vt") | Some("f") | Some("vn") => {}
            Some(tok) => {
                return Err(Error::MeshFormat {
                    path: path.display().to_string(),
                    reason: format!("unknown record '{}' at line {}", tok, ln + 1),
                })
            }
            None => {}
        }
    }
    if positions.len() != topo.vertex_count() {
        return Err(Error::TopologyMismatch {
            got: positions.len(),
            expected: topo.vertex_count(),
        });
    }
    AlignedMesh::new(topo, positions)
}

/// Writes a mesh with one extra `r g b` triple per `v` record; used by
/// the evaluation command to export per-vertex error maps.
pub fn save_mesh_colored(mesh: &AlignedMesh, colors: &[Vector3<f64>], path: &Path) -> Result<()> {
    if colors.len() != mesh.positions.len() {
        return Err(Error::DimMismatch("vertex color count".into()));
    }
    let mut out = String::with_capacity(mesh.positions.len() * 60);
    for (p, c) in mesh.positions.iter().zip(colors) {
        writeln!(
            out,
            "v {:.6} {:.6} {:.6} {:.4} {:.4} {:.4}",
            p.x, p.y, p.z, c.x, c.y, c.z
        )
        .unwrap();
    }
    for f in &mesh.topo.faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}
