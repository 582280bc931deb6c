//! Geometric primitives: direct ellipse fitting, principal component
//! analysis, body orientation and head-cloud quadrant partitioning.

mod ellipse;
mod orientation;
mod pca;

pub use ellipse::{fit_ellipse_direct, EllipseFit};
pub use orientation::{
    body_orientation, facing_frame, partition_quadrants, BodyOrientation, QuadrantPartition,
};
pub use pca::{pca2, pca3, Pca2, Pca3};
