//! Linear morphable bases (mean + orthonormal components + variance
//! spectrum) and the `MMB1` bundle format.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// What the flattened dimension of a basis means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DimSemantics {
    /// 3V mesh coordinates.
    Shape,
    /// Per-texel color values.
    AlbedoTexel,
    /// 3|B∪C| head-completion coordinates.
    Head,
}

/// Mean vector, orthonormal component rows and explained-variance
/// spectrum of a PCA model.
#[derive(Debug, Clone)]
pub struct MorphableBasis {
    pub mean: DVector<f64>,
    /// One component per row, rows orthonormal, n_components x dim.
    pub components: DMatrix<f64>,
    /// Nonincreasing, one entry per component.
    pub explained_variance: DVector<f64>,
    pub semantics: DimSemantics,
}

impl MorphableBasis {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    /// Coefficients of the orthogonal projection of `sample` onto the
    /// first `k` components.
    pub fn project(&self, sample: &DVector<f64>, k: usize) -> DVector<f64> {
        let dev = sample - &self.mean;
        self.components.rows(0, k) * dev
    }

    /// mean + sum of the first k components weighted by `coeffs`.
    pub fn reconstruct(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        let k = coeffs.len().min(self.n_components());
        &self.mean + self.components.rows(0, k).transpose() * coeffs.rows(0, k)
    }

    /// Component rows scaled by their standard deviation, so that
    /// coefficients expressed against the result are in sigma units.
    pub fn scaled_components(&self, k: usize) -> DMatrix<f64> {
        let mut m = self.components.rows(0, k).into_owned();
        for i in 0..k {
            let s = self.explained_variance[i].max(0.0).sqrt();
            m.row_mut(i).scale_mut(s);
        }
        m
    }

    /// Residual norm of projecting `sample` onto the first k components;
    /// relies on row orthonormality.
    pub fn residual_norm(&self, sample: &DVector<f64>, k: usize) -> f64 {
        let dev = sample - &self.mean;
        let coeffs = self.components.rows(0, k) * &dev;
        (dev.norm_squared() - coeffs.norm_squared()).max(0.0).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_components();
        if self.components.ncols() != self.dim() && n > 0 {
            return Err(Error::DimMismatch("basis component width".into()));
        }
        if self.explained_variance.len() != n {
            return Err(Error::DimMismatch("variance spectrum length".into()));
        }
        for i in 1..n {
            if self.explained_variance[i] > self.explained_variance[i - 1] + 1e-12 {
                return Err(Error::BasisFormat("variance spectrum not sorted".into()));
            }
        }
        Ok(())
    }
}

const MAGIC: &[u8; 4] = b"MMB1";

/// Writes the basis in the `MMB1` layout: magic, u32 dim, u32
/// n_components, u8 dtype (0 = f32), then mean, row-major components and
/// explained variance, all little-endian f32.
pub fn save_basis(basis: &MorphableBasis, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(basis.dim() as u32).to_le_bytes())?;
    w.write_all(&(basis.n_components() as u32).to_le_bytes())?;
    w.write_all(&[0u8])?;
    let mut buf = Vec::with_capacity(basis.dim() * 4);
    for v in basis.mean.iter() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    for r in 0..basis.n_components() {
        buf.clear();
        for c in 0..basis.dim() {
            buf.extend_from_slice(&(basis.components[(r, c)] as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    buf.clear();
    for v in basis.explained_variance.iter() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn load_basis(path: &Path, semantics: DimSemantics) -> Result<MorphableBasis> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::BasisFormat("file too short for header".into()))?;
    if &magic != MAGIC {
        return Err(Error::BasisFormat(format!("bad magic {:?}", magic)));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let n_comp = u32::from_le_bytes(u32buf) as usize;
    let mut dtype = [0u8; 1];
    r.read_exact(&mut dtype)?;
    if dtype[0] != 0 {
        return Err(Error::BasisFormat(format!("unknown dtype code {}", dtype[0])));
    }
    let expected = (dim + n_comp * dim + n_comp) * 4;
    let mut payload = Vec::with_capacity(expected);
    r.read_to_end(&mut payload)?;
    if payload.len() != expected {
        return Err(Error::BasisFormat(format!(
            "payload is {} bytes, header implies {}",
            payload.len(),
            expected
        )));
    }
    let read_f32 = |i: usize| {
        let b = [payload[4 * i], payload[4 * i + 1], payload[4 * i + 2], payload[4 * i + 3]];
        f32::from_le_bytes(b) as f64
    };
    let mean = DVector::from_fn(dim, |i, _| read_f32(i));
    let components = DMatrix::from_fn(n_comp, dim, |r0, c0| read_f32(dim + r0 * dim + c0));
    let explained_variance = DVector::from_fn(n_comp, |i, _| read_f32(dim + n_comp * dim + i));
    let basis = MorphableBasis {
        mean,
        components,
        explained_variance,
        semantics,
    };
    basis.validate()?;
    Ok(basis)
}
