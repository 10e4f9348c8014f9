//! Linear-algebra and estimation kernels shared by the pipeline stages.

mod adam;
mod pca;
mod pnp;
mod ridge;
mod rigid;

pub use adam::{AdamConfig, AdamState};
pub use pca::{pca_fit, pca_fit_matrix, symmetric_eigen_desc};
pub use pnp::{pnp_pose, PnpSolution};
pub use ridge::{ridge_solve, ridge_solve_orthonormal};
pub use rigid::{ransac_rigid, rigid_fit_svd};
