//! Weighted ridge regression via the normal equations.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::{Error, Result};

/// argmin ‖W^{1/2}(Ax − b)‖² + λ‖x‖².
///
/// `weights`, when given, holds one nonnegative weight per row of the
/// design matrix. λ = 0 is allowed but fails on singular systems.
pub fn ridge_solve(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    weights: Option<&DVector<f64>>,
    lambda: f64,
) -> Result<DVector<f64>> {
    let m = design.nrows();
    let n = design.ncols();
    if m == 0 || target.len() != m {
        return Err(Error::DimMismatch("ridge design/target rows".into()));
    }
    if lambda < 0.0 {
        return Err(Error::Config("ridge lambda must be >= 0".into()));
    }
    let (aw, bw) = match weights {
        None => (design.clone(), target.clone()),
        Some(w) => {
            if w.len() != m {
                return Err(Error::DimMismatch("ridge weight length".into()));
            }
            if w.iter().any(|&x| x < 0.0) {
                return Err(Error::Config("ridge weights must be >= 0".into()));
            }
            let mut aw = design.clone();
            let mut bw = target.clone();
            for r in 0..m {
                let s = w[r].sqrt();
                aw.row_mut(r).scale_mut(s);
                bw[r] *= s;
            }
            (aw, bw)
        }
    };
    let mut normal = aw.tr_mul(&aw);
    for i in 0..n {
        normal[(i, i)] += lambda;
    }
    let rhs = aw.tr_mul(&bw);
    match Cholesky::new(normal.clone()) {
        Some(ch) => Ok(ch.solve(&rhs)),
        None => {
            if lambda == 0.0 {
                Err(Error::SingularSystem)
            } else {
                // λ > 0 makes the system SPD; reaching here means severe
                // conditioning, fall back to LU.
                normal
                    .lu()
                    .solve(&rhs)
                    .ok_or(Error::SingularSystem)
            }
        }
    }
}

/// Ridge solution for a design with orthonormal columns, where the
/// normal matrix is the identity plus λ: x = Aᵀb / (1 + λ).
pub fn ridge_solve_orthonormal(at_b: &DVector<f64>, lambda: f64) -> DVector<f64> {
    at_b / (1.0 + lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn exact_solve_for_square_invertible_system() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 0.0, 3.0, -1.0, 1.0, 1.0, 4.0]);
        let x_true = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let b = &a * &x_true;
        let x = ridge_solve(&a, &b, None, 0.0).unwrap();
        assert_relative_eq!(x, x_true, epsilon = 1e-10);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let a = DMatrix::from_fn(20, 6, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(20, |_, _| rng.random_range(-1.0..1.0));
        let w = DVector::from_fn(20, |_, _| rng.random_range(0.1..2.0));
        let lambda = 0.1;
        let x = ridge_solve(&a, &b, Some(&w), lambda).unwrap();

        // Oracle: explicit (AᵀWA + λI) x = AᵀWb solved by LU.
        let wm = DMatrix::from_diagonal(&w);
        let normal = a.transpose() * &wm * &a + lambda * DMatrix::identity(6, 6);
        let rhs = a.transpose() * &wm * &b;
        let x_oracle = normal.lu().solve(&rhs).unwrap();
        assert_relative_eq!(x, x_oracle, epsilon = 1e-8);
    }

    #[test]
    fn huge_lambda_shrinks_to_zero() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let a = DMatrix::from_fn(10, 4, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
        let x = ridge_solve(&a, &b, None, 1e12).unwrap();
        assert!(x.norm() < 1e-6 * b.norm());
    }

    #[test]
    fn singular_with_zero_lambda_errors() {
        // Rank-deficient: duplicate column.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(ridge_solve(&a, &b, None, 0.0), Err(Error::SingularSystem)));
        // Positive lambda regularizes it.
        assert!(ridge_solve(&a, &b, None, 1e-3).is_ok());
    }

    #[test]
    fn residual_orthogonality() {
        // At the optimum, Aᵀ W (Ax - b) = -λ x.
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let a = DMatrix::from_fn(15, 5, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(15, |_, _| rng.random_range(-1.0..1.0));
        let w = DVector::from_fn(15, |_, _| rng.random_range(0.5..1.5));
        let lambda = 0.37;
        let x = ridge_solve(&a, &b, Some(&w), lambda).unwrap();
        let wm = DMatrix::from_diagonal(&w);
        let lhs = a.transpose() * &wm * (&a * &x - &b);
        let rhs = -lambda * &x;
        assert_relative_eq!(lhs, rhs, epsilon = 1e-6, max_relative = 1e-6);
    }

    #[test]
    fn orthonormal_fast_path_matches_general() {
        // Orthonormal columns: Q from QR of a random matrix.
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let a = DMatrix::from_fn(12, 4, |_, _| rng.random_range(-1.0..1.0));
        let q = a.qr().q();
        let b = DVector::from_fn(12, |_, _| rng.random_range(-1.0..1.0));
        let lambda = 0.25;
        let general = ridge_solve(&q, &b, None, lambda).unwrap();
        let fast = ridge_solve_orthonormal(&q.tr_mul(&b), lambda);
        assert_relative_eq!(general, fast, epsilon = 1e-10);
    }
}
