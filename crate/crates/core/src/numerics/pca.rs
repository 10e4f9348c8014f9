//! PCA with explained-variance truncation.
//!
//! Data sits in tall-and-skinny regimes here (dim up to ~1e6, at most a
//! few thousand samples), so the thin SVD factors are computed through
//! the n x n Gram matrix of the centered data: eigenvectors of the Gram
//! give the left factors and back-projection through the data matrix
//! gives the orthonormal component rows.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::basis::{DimSemantics, MorphableBasis};
use crate::par;
use crate::{Error, Result};

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// descending. Returns (eigenvalues, eigenvectors as columns).
pub fn symmetric_eigen_desc(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `data` holds one sample per column (dim x n).
pub fn pca_fit_matrix(data: &DMatrix<f64>, variance_fraction: f64, semantics: DimSemantics) -> Result<MorphableBasis> {
    let dim = data.nrows();
    let n = data.ncols();
    if n < 2 {
        return Err(Error::Pca("need at least 2 samples"));
    }
    if !(variance_fraction > 0.0 && variance_fraction <= 1.0) {
        return Err(Error::Pca("variance fraction must be in (0, 1]"));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Pca("non-finite sample"));
    }

    let mut mean = DVector::zeros(dim);
    for c in 0..n {
        mean += data.column(c);
    }
    mean /= n as f64;

    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }

    // All-equal detection: deviations at numeric noise level yield an
    // empty component set (the mean is the model).
    let scale = mean.amax().max(1.0);
    let max_dev = centered.amax();
    if max_dev <= 1e-9 * scale {
        return Ok(MorphableBasis {
            mean,
            components: DMatrix::zeros(0, dim),
            explained_variance: DVector::zeros(0),
            semantics,
        });
    }

    let gram = gram_blocked(&centered);
    let (eigvals, eigvecs) = symmetric_eigen_desc(gram);

    let lam_max = eigvals[0].max(0.0);
    let rank_tol = lam_max * 1e-10;
    let rank = eigvals.iter().take_while(|&&l| l > rank_tol).count().min(n - 1).max(1);

    let total: f64 = eigvals.iter().filter(|&&l| l > 0.0).sum();
    let mut k = rank;
    let mut acc = 0.0;
    for i in 0..rank {
        acc += eigvals[i];
        if acc >= variance_fraction * total - 1e-12 * total {
            k = i + 1;
            break;
        }
    }

    // Back-project: component row i = (centered * u_i / sigma_i)^T.
    let mut weights = DMatrix::zeros(n, k);
    for i in 0..k {
        let sigma = eigvals[i].sqrt();
        weights.set_column(i, &(eigvecs.column(i) / sigma));
    }
    let vt = gemm_blocked(&centered, &weights); // dim x k
    let mut components = DMatrix::zeros(k, dim);
    for i in 0..k {
        // Canonical sign: the largest-magnitude entry is positive.
        let col = vt.column(i);
        let mut best = 0;
        for j in 1..dim {
            if col[j].abs() > col[best].abs() {
                best = j;
            }
        }
        let flip = if col[best] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..dim {
            components[(i, j)] = flip * col[j];
        }
    }

    let explained_variance = DVector::from_fn(k, |i, _| eigvals[i].max(0.0) / (n as f64 - 1.0));
    Ok(MorphableBasis {
        mean,
        components,
        explained_variance,
        semantics,
    })
}

/// PCA over a list of equal-length sample vectors.
pub fn pca_fit(samples: &[DVector<f64>], variance_fraction: f64, semantics: DimSemantics) -> Result<MorphableBasis> {
    if samples.len() < 2 {
        return Err(Error::Pca("need at least 2 samples"));
    }
    let dim = samples[0].len();
    if samples.iter().any(|s| s.len() != dim) {
        return Err(Error::Pca("samples have mixed dimensions"));
    }
    let mut data = DMatrix::zeros(dim, samples.len());
    for (c, s) in samples.iter().enumerate() {
        data.set_column(c, s);
    }
    pca_fit_matrix(&data, variance_fraction, semantics)
}

/// `centered^T centered` computed in fixed column blocks.
fn gram_blocked(centered: &DMatrix<f64>) -> DMatrix<f64> {
    let n = centered.ncols();
    let nblocks = n.div_ceil(par::BLOCK);
    let blocks = par::map_indexed(nblocks, |b| {
        let c0 = b * par::BLOCK;
        let len = par::BLOCK.min(n - c0);
        centered.columns(c0, len).tr_mul(centered)
    });
    let mut gram = DMatrix::zeros(n, n);
    for (b, blk) in blocks.iter().enumerate() {
        gram.rows_mut(b * par::BLOCK, blk.nrows()).copy_from(blk);
    }
    gram
}

/// `a * w` computed in fixed row blocks of `a` (dim x n times n x k).
fn gemm_blocked(a: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    let k = w.ncols();
    let block = 4096;
    let nblocks = dim.div_ceil(block);
    let blocks = par::map_indexed(nblocks, |b| {
        let r0 = b * block;
        let len = block.min(dim - r0);
        a.rows(r0, len) * w
    });
    let mut out = DMatrix::zeros(dim, k);
    for (b, blk) in blocks.iter().enumerate() {
        out.rows_mut(b * block, blk.nrows()).copy_from(blk);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    fn random_samples(n: usize, dim: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn all_equal_samples_give_zero_components() {
        let s = DVector::from_vec(vec![1.0, -2.0, 3.5]);
        let basis = pca_fit(&[s.clone(), s.clone(), s.clone()], 0.999, DimSemantics::Shape).unwrap();
        assert_eq!(basis.n_components(), 0);
        assert_relative_eq!(basis.mean, s, epsilon = 1e-12);
    }

    #[test]
    fn rejects_single_sample_and_nonfinite() {
        let s = DVector::from_vec(vec![1.0, 2.0]);
        assert!(pca_fit(&[s.clone()], 1.0, DimSemantics::Shape).is_err());
        let bad = DVector::from_vec(vec![f64::NAN, 0.0]);
        assert!(pca_fit(&[s, bad], 1.0, DimSemantics::Shape).is_err());
    }

    #[test]
    fn full_fraction_reconstructs_training_samples() {
        let samples = random_samples(30, 12, 7);
        let basis = pca_fit(&samples, 1.0, DimSemantics::Shape).unwrap();
        assert!(basis.n_components() <= 29);
        for s in &samples {
            let c = basis.project(s, basis.n_components());
            let r = basis.reconstruct(&c);
            assert_relative_eq!(r, *s, epsilon = 1e-8);
        }
    }

    #[test]
    fn component_rows_are_orthonormal() {
        let samples = random_samples(25, 40, 11);
        let basis = pca_fit(&samples, 0.999, DimSemantics::Shape).unwrap();
        let g = &basis.components * basis.components.transpose();
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(g[(i, j)], expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn variance_fraction_truncates() {
        let samples = random_samples(30, 12, 3);
        let basis = pca_fit(&samples, 0.999, DimSemantics::Shape).unwrap();
        assert!(basis.n_components() <= 12.min(29));
        // Spectrum sorted descending.
        basis.validate().unwrap();
    }

    #[test]
    fn matches_covariance_eigendecomposition_oracle() {
        // Independent oracle: dense eigensolve of the d x d covariance.
        let samples = random_samples(30, 12, 42);
        let basis = pca_fit(&samples, 1.0, DimSemantics::Shape).unwrap();

        let n = samples.len();
        let dim = 12;
        let mut mean = DVector::zeros(dim);
        for s in &samples {
            mean += s;
        }
        mean /= n as f64;
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for s in &samples {
            let d = s - &mean;
            cov += &d * d.transpose();
        }
        cov /= n as f64 - 1.0;
        let (vals, vecs) = symmetric_eigen_desc(cov);

        for i in 0..basis.n_components() {
            assert_relative_eq!(basis.explained_variance[i], vals[i], epsilon = 1e-8, max_relative = 1e-8);
            // Rows match the oracle eigenvectors up to sign.
            let row = basis.components.row(i).transpose();
            let dot: f64 = row.dot(&vecs.column(i).into_owned());
            let aligned = if dot < 0.0 { -vecs.column(i) } else { vecs.column(i).into() };
            assert_relative_eq!(row, aligned, epsilon = 1e-8);
        }

        // Reconstruction error agreement on held-out data.
        let held = random_samples(5, 12, 43);
        for h in &held {
            let r1 = basis.residual_norm(h, basis.n_components());
            let dev = h - &mean;
            let k = basis.n_components();
            let coeffs = vecs.columns(0, k).transpose() * &dev;
            let r2 = (dev.norm_squared() - coeffs.norm_squared()).max(0.0).sqrt();
            assert_relative_eq!(r1, r2, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn reconstruction_error_monotone_in_k() {
        let samples = random_samples(20, 15, 5);
        let basis = pca_fit(&samples, 1.0, DimSemantics::Shape).unwrap();
        let probe = random_samples(3, 15, 6);
        for p in &probe {
            let mut prev = f64::INFINITY;
            for k in 0..=basis.n_components() {
                let r = basis.residual_norm(p, k);
                assert!(r <= prev + 1e-9, "residual grew at k={}", k);
                prev = r;
            }
        }
    }
}
