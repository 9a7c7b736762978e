//! Lowest-degree finite elements on convex quadrilateral grids: the
//! bilinear-type QBL space, the rotated QRT edge space and piecewise
//! constants, linked by gradient and rot.

pub mod assembly;
pub mod derham;
pub mod elements;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod geometry;
pub mod interpolation;
pub mod mesh;
pub mod norms;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod tables;

pub use error::{Error, Result};
pub use geometry::{Point2, QuadFrame, Vec2};
pub use mesh::{QuadMesh, TriMesh};
