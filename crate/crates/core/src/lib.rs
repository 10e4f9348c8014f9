//! RGB-D selfie to 3D head avatar pipeline:
//! statistical morphable-model construction with perturbation
//! augmentation, RGB-D frame selection, differentiable-renderer
//! multiview fitting, regional pyramid reflectance synthesis, and head
//! completion, validated against a built-in synthetic scan generator.

pub mod basis;
pub mod camera;
pub mod error;
pub mod frame;
pub mod mesh;
pub mod numerics;
pub mod par;
pub mod topo;
pub mod uvmap;

pub use error::{Error, Result};
